#ifndef GIBBSCERT_IO_HPP
#define GIBBSCERT_IO_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gibbscert/model.hpp"
#include "gibbscert/rotator.hpp"
#include "gibbscert/two_layer.hpp"

namespace gibbscert {

inline constexpr const char* kVersion = "0.1.0";

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct ParsedModel {
    InteractionModel model;
    std::optional<Channel> channel;
};

namespace detail {

struct Field {
    std::vector<std::string> tokens;
    int line = 0;
};

struct Section {
    std::map<std::string, std::vector<Field>> fields;
    int line = 0;
};

inline std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

inline std::map<std::string, Section> parse_sections(const std::string& text,
                                                     const std::string& file) {
    std::map<std::string, Section> sections;
    std::istringstream is(text);
    std::string line, current;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(file, lineno, "unterminated section header");
            current = line.substr(1, line.size() - 2);
            sections[current].line = lineno;
            continue;
        }
        if (current.empty())
            throw ParseError(file, lineno, "field outside of any section");
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(file, lineno, "expected 'key = value'");
        auto key_toks = tokenize(line.substr(0, eq));
        if (key_toks.size() != 1)
            throw ParseError(file, lineno, "expected a single key before '='");
        Field f;
        f.tokens = tokenize(line.substr(eq + 1));
        f.line = lineno;
        if (f.tokens.empty()) throw ParseError(file, lineno, "empty value");
        sections[current].fields[key_toks[0]].push_back(f);
    }
    return sections;
}

inline double parse_double(const std::string& tok, const std::string& file, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line, "not a number: '" + tok + "'");
    }
}

inline long parse_int(const std::string& tok, const std::string& file, int line) {
    try {
        std::size_t pos = 0;
        long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line, "not an integer: '" + tok + "'");
    }
}

}  // namespace detail

/// Structured text model description. Sections: [graph] (vertices/edge lines
/// or a torus shorthand), [potential] (form + couplings), [apriori], and an
/// optional [channel].
inline ParsedModel parse_model_text(const std::string& text,
                                    const std::string& file = "<memory>") {
    using detail::parse_double;
    using detail::parse_int;
    auto sections = detail::parse_sections(text, file);

    auto require = [&](const char* name) -> detail::Section& {
        auto it = sections.find(name);
        if (it == sections.end())
            throw ParseError(file, 1, std::string("missing [") + name + "] section");
        return it->second;
    };
    auto single = [&](detail::Section& s, const char* key) -> detail::Field* {
        auto it = s.fields.find(key);
        if (it == s.fields.end()) return nullptr;
        if (it->second.size() != 1)
            throw ParseError(file, it->second.back().line,
                             std::string("duplicate key '") + key + "'");
        return &it->second.front();
    };

    auto& graph_sec = require("graph");
    Graph graph(0, {});
    bool is_torus = false;
    if (auto* tor = single(graph_sec, "torus")) {
        if (tor->tokens.size() != 2)
            throw ParseError(file, tor->line, "torus expects 'width height'");
        long w = parse_int(tor->tokens[0], file, tor->line);
        long h = parse_int(tor->tokens[1], file, tor->line);
        if (w < 3 || h < 3) throw ParseError(file, tor->line, "torus needs width, height >= 3");
        graph = Graph::torus(int(w), int(h));
        is_torus = true;
    } else {
        auto* nv = single(graph_sec, "vertices");
        if (!nv) throw ParseError(file, graph_sec.line, "graph needs 'vertices' or 'torus'");
        long n = parse_int(nv->tokens[0], file, nv->line);
        if (n < 1) throw ParseError(file, nv->line, "vertices must be >= 1");
        std::vector<std::pair<int, int>> edges;
        auto it = graph_sec.fields.find("edge");
        if (it != graph_sec.fields.end())
            for (const auto& f : it->second) {
                if (f.tokens.size() != 2)
                    throw ParseError(file, f.line, "edge expects 'i j'");
                long a = parse_int(f.tokens[0], file, f.line);
                long b = parse_int(f.tokens[1], file, f.line);
                if (a < 0 || b < 0 || a >= n || b >= n)
                    throw ParseError(file, f.line, "edge endpoint out of range");
                if (a == b) throw ParseError(file, f.line, "self-loops not allowed");
                edges.emplace_back(int(a), int(b));
            }
        graph = Graph(int(n), edges);
    }

    auto& pot_sec = require("potential");
    auto* form_f = single(pot_sec, "form");
    if (!form_f) throw ParseError(file, pot_sec.line, "potential needs 'form'");
    std::string form = form_f->tokens[0];

    auto& ap_sec = require("apriori");

    InteractionModel model = [&]() -> InteractionModel {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(graph.n, graph.n);
        auto jit = pot_sec.fields.find("J");
        bool uniform_set = false;
        double uniform_j = 0.0;
        if (jit != pot_sec.fields.end()) {
            for (const auto& f : jit->second) {
                if (f.tokens.size() == 1) {
                    uniform_j = parse_double(f.tokens[0], file, f.line);
                    uniform_set = true;
                } else if (f.tokens.size() == 3) {
                    long a = parse_int(f.tokens[0], file, f.line);
                    long b = parse_int(f.tokens[1], file, f.line);
                    double v = parse_double(f.tokens[2], file, f.line);
                    if (a < 0 || b < 0 || a >= graph.n || b >= graph.n)
                        throw ParseError(file, f.line, "coupling vertex out of range");
                    if (!graph.is_edge(int(a), int(b)))
                        throw ParseError(file, f.line, "coupling on a missing edge");
                    J(a, b) = J(b, a) = v;
                } else {
                    throw ParseError(file, f.line, "J expects 'value' or 'i j value'");
                }
            }
        }
        if (uniform_set)
            for (const auto& e : graph.edges)
                J(e.first, e.second) = J(e.second, e.first) = uniform_j;

        if (form == "ising") {
            return make_ising_model(graph, J);
        } else if (form == "rotator") {
            auto* qf = single(ap_sec, "q");
            int q = qf ? int(parse_int(qf->tokens[0], file, qf->line)) : 2;
            if (q < 2) throw ParseError(file, qf ? qf->line : ap_sec.line, "q must be >= 2");
            return make_rotator_model(graph, J, q);
        } else if (form == "circle") {
            auto* af = single(ap_sec, "atoms");
            if (!af) throw ParseError(file, ap_sec.line, "circle form needs 'atoms' in [apriori]");
            long atoms = parse_int(af->tokens[0], file, af->line);
            if (atoms < 2) throw ParseError(file, af->line, "atoms must be >= 2");
            return make_discretized_circle_model(graph, J, int(atoms));
        }
        throw ParseError(file, form_f->line, "unknown form '" + form + "'");
    }();

    if (auto* wf = single(ap_sec, "weights")) {
        if (!model.discrete())
            throw ParseError(file, wf->line, "weights apply to discrete spaces only");
        if (int(wf->tokens.size()) != model.space.atom_count())
            throw ParseError(file, wf->line, "weight count does not match atom count");
        std::vector<double> w;
        for (const auto& t : wf->tokens) w.push_back(parse_double(t, file, wf->line));
        double s = 0.0;
        for (double x : w) {
            if (x < 0.0) throw ParseError(file, wf->line, "negative weight");
            s += x;
        }
        if (s <= 0.0) throw ParseError(file, wf->line, "weights sum to zero");
        for (double& x : w) x /= s;
        model.apriori.weights = w;
    }
    if (auto* qn = single(ap_sec, "quad_nodes")) {
        long n = parse_int(qn->tokens[0], file, qn->line);
        if (n < 4) throw ParseError(file, qn->line, "quad_nodes must be >= 4");
        model.quad_nodes = int(n);
    }

    ParsedModel out{std::move(model), std::nullopt};
    (void)is_torus;

    auto chit = sections.find("channel");
    if (chit != sections.end()) {
        auto& ch_sec = chit->second;
        auto* tf = single(ch_sec, "type");
        if (!tf) throw ParseError(file, ch_sec.line, "channel needs 'type'");
        std::string type = tf->tokens[0];
        if (type == "heat_kernel") {
            auto* ttf = single(ch_sec, "t");
            if (!ttf) throw ParseError(file, ch_sec.line, "heat_kernel channel needs 't'");
            double t = parse_double(ttf->tokens[0], file, ttf->line);
            if (t < 0.0) throw ParseError(file, ttf->line, "channel time must be >= 0");
            if (out.model.space.kind == SingleSpinSpace::Kind::Sphere) {
                HeatKernelChannel hk;
                hk.q = out.model.space.q;
                hk.t = t;
                hk.quad_nodes = out.model.quad_nodes;
                out.channel = hk;
            } else if (out.model.space.has_coords()) {
                // discrete restriction: row-normalized kernel between embedded atoms
                if (t <= 0.0) throw ParseError(file, ttf->line, "discrete heat kernel needs t > 0");
                int atoms = out.model.space.atom_count();
                HeatKernelEval kernel(2, t);
                Eigen::MatrixXd p(atoms, atoms);
                for (int a = 0; a < atoms; ++a) {
                    double row = 0.0;
                    for (int b = 0; b < atoms; ++b) {
                        double dot = out.model.space.coords[a].dot(out.model.space.coords[b]);
                        p(a, b) = kernel(1.0, std::clamp(dot, -1.0, 1.0));
                        row += p(a, b);
                    }
                    p.row(a) /= row;
                }
                out.channel = DiscreteChannel::from_conditional(p, out.model.apriori.weights);
            } else {
                throw ParseError(file, tf->line, "heat_kernel channel needs sphere or embedded atoms");
            }
        } else if (type == "identity") {
            if (!out.model.discrete())
                throw ParseError(file, tf->line, "identity channel needs a discrete space");
            int atoms = out.model.space.atom_count();
            Eigen::MatrixXd p = Eigen::MatrixXd::Identity(atoms, atoms);
            out.channel = DiscreteChannel::from_conditional(p, out.model.apriori.weights);
        } else if (type == "symmetric") {
            if (!out.model.discrete())
                throw ParseError(file, tf->line, "symmetric channel needs a discrete space");
            auto* ef = single(ch_sec, "epsilon");
            if (!ef) throw ParseError(file, ch_sec.line, "symmetric channel needs 'epsilon'");
            double eps = parse_double(ef->tokens[0], file, ef->line);
            int atoms = out.model.space.atom_count();
            if (eps < 0.0 || eps > 1.0 - 1.0 / atoms)
                throw ParseError(file, ef->line, "epsilon out of range");
            Eigen::MatrixXd p =
                Eigen::MatrixXd::Constant(atoms, atoms, eps / double(atoms - 1));
            for (int a = 0; a < atoms; ++a) p(a, a) = 1.0 - eps;
            out.channel = DiscreteChannel::from_conditional(p, out.model.apriori.weights);
        } else {
            throw ParseError(file, tf->line, "unknown channel type '" + type + "'");
        }
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ParsedModel parse_model_file(const std::string& path) {
    return parse_model_text(read_file(path), path);
}

/// FNV-1a over the raw bytes; whitespace-only edits change the digest.
inline std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

/// Matrix CSV: header row of vertex labels, then one labeled row per vertex.
/// 17 significant digits, '.' decimal, LF endings.
inline std::string matrix_to_csv(const Eigen::MatrixXd& m,
                                 const std::vector<std::string>& labels) {
    if (int(labels.size()) != m.rows() || m.rows() != m.cols())
        throw std::invalid_argument("matrix_to_csv: label/shape mismatch");
    std::string out;
    for (const auto& l : labels) {
        out += ',';
        out += l;
    }
    out += '\n';
    for (int i = 0; i < m.rows(); ++i) {
        out += labels[i];
        for (int j = 0; j < m.cols(); ++j) {
            out += ',';
            out += format_g17(m(i, j));
        }
        out += '\n';
    }
    return out;
}

inline std::vector<std::string> vertex_labels(int n) {
    std::vector<std::string> l;
    for (int i = 0; i < n; ++i) l.push_back("v" + std::to_string(i));
    return l;
}

inline Eigen::MatrixXd matrix_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("matrix_from_csv: empty input");
    int cols = 0;
    for (char c : line)
        if (c == ',') ++cols;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');  // row label
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (int(row.size()) != cols) throw std::runtime_error("matrix_from_csv: ragged row");
        rows.push_back(row);
    }
    Eigen::MatrixXd m(int(rows.size()), cols);
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json make_report(const std::string& task, const std::string& input_bytes,
                                  std::uint64_t seed, const nlohmann::json& results,
                                  double wall_time_seconds) {
    nlohmann::json r;
    r["task"] = task;
    r["input_digest"] = content_digest(input_bytes);
    r["seed"] = seed;
    r["version"] = kVersion;
    r["wall_time_seconds"] = wall_time_seconds;
    r["results"] = results;
    return r;
}

}  // namespace gibbscert

#endif
