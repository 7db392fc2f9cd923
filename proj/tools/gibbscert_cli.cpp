#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gibbscert/dobrushin.hpp"
#include "gibbscert/io.hpp"
#include "gibbscert/model.hpp"
#include "gibbscert/rotator.hpp"
#include "gibbscert/simulate.hpp"
#include "gibbscert/two_layer.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitCertified = 0;
constexpr int kExitNotGranted = 2;
constexpr int kExitError = 1;

struct Options {
    std::string model_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::size_t paths = 100000;
    double dt = 1e-3;
    int quad_nodes = 128;
    std::string flavor = "linear";
    double t = 0.5;
    double z0 = 1.0;
    int q = 2;
    int site = 0;
};

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << body;
}

void emit_report(const Options& opt, const std::string& task, const std::string& input_bytes,
                 const json& results, double wall) {
    fs::create_directories(opt.out_dir);
    json rep = gibbscert::make_report(task, input_bytes, opt.seed, results, wall);
    write_text(fs::path(opt.out_dir) / "report.json", rep.dump(2) + "\n");
}

gibbscert::BoundFlavor parse_flavor(const std::string& f) {
    if (f == "linear") return gibbscert::BoundFlavor::Linear;
    if (f == "quadratic") return gibbscert::BoundFlavor::Quadratic;
    if (f == "lipschitz") return gibbscert::BoundFlavor::Lipschitz;
    throw CLI::ValidationError("--flavor", "expected linear, quadratic or lipschitz");
}

int run_certify(const Options& opt) {
    using namespace gibbscert;
    auto t0 = std::chrono::steady_clock::now();
    std::string bytes = read_file(opt.model_path);
    ParsedModel pm = parse_model_text(bytes, opt.model_path);
    pm.model.quad_nodes = opt.quad_nodes;
    if (pm.channel && std::holds_alternative<HeatKernelChannel>(*pm.channel))
        std::get<HeatKernelChannel>(*pm.channel).quad_nodes = opt.quad_nodes;
    json results;
    bool certified = false;
    auto labels = vertex_labels(pm.model.graph.n);
    if (pm.channel) {
        auto fl = parse_flavor(opt.flavor);
        ConditionalFlavor cf = (fl == BoundFlavor::Quadratic)
                                   ? ConditionalFlavor::QuadraticStd
                                   : ConditionalFlavor::LinearDev;
        ContinuityReport rep = continuity_certificate(pm.model, *pm.channel, cf);
        certified = rep.certified;
        results["mode"] = "two-layer";
        results["c_bar"] = rep.c_bar;
        results["route"] = rep.route;
        results["certified"] = certified;
        fs::create_directories(opt.out_dir);
        write_text(fs::path(opt.out_dir) / "c_bar.csv",
                   matrix_to_csv(rep.c_bar_matrix, labels));
        if (rep.q) {
            write_text(fs::path(opt.out_dir) / "q_matrix.csv",
                       matrix_to_csv(rep.q->values, labels));
            results["q_matrix_csv"] = "q_matrix.csv";
        }
    } else {
        DobrushinBound b;
        auto fl = parse_flavor(opt.flavor);
        if (fl == BoundFlavor::Linear)
            b = dobrushin_bound_linear(pm.model);
        else if (fl == BoundFlavor::Quadratic)
            b = dobrushin_bound_quadratic(pm.model);
        else
            b = dobrushin_bound_lipschitz(pm.model);
        certified = b.c < 1.0;
        results["mode"] = "single-layer";
        results["c"] = b.c;
        results["flavor"] = to_string(b.flavor);
        results["certified"] = certified;
        fs::create_directories(opt.out_dir);
        write_text(fs::path(opt.out_dir) / "dobrushin.csv", matrix_to_csv(b.C, labels));
        if (certified) {
            NeumannSeries ns = neumann_series(b.C);
            write_text(fs::path(opt.out_dir) / "neumann.csv", matrix_to_csv(ns.D, labels));
        }
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(opt, "certify", bytes, results, wall);
    return certified ? kExitCertified : kExitNotGranted;
}

int run_rotator_threshold(const Options& opt) {
    using namespace gibbscert;
    auto t0 = std::chrono::steady_clock::now();
    std::string bytes = read_file(opt.model_path);
    ParsedModel pm = parse_model_text(bytes, opt.model_path);
    if (pm.model.potential.form != PotentialForm::Rotator)
        throw std::runtime_error("rotator-threshold requires a rotator model");
    ThresholdReport rep = gibbs_time_threshold(pm.model.potential.J, pm.model.space.q);
    json results;
    results["a"] = rep.a;
    results["q"] = rep.q;
    results["finite"] = rep.finite;
    results["t_star"] = rep.finite ? json(rep.t_star) : json(nullptr);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(opt, "rotator-threshold", bytes, results, wall);
    return kExitCertified;
}

int run_rotator_qbar(const Options& opt) {
    using namespace gibbscert;
    auto t0 = std::chrono::steady_clock::now();
    std::string bytes = read_file(opt.model_path);
    ParsedModel pm = parse_model_text(bytes, opt.model_path);
    if (pm.model.potential.form != PotentialForm::Rotator)
        throw std::runtime_error("rotator-qbar requires a rotator model");
    double t = opt.t;
    if (pm.channel && std::holds_alternative<HeatKernelChannel>(*pm.channel))
        t = std::get<HeatKernelChannel>(*pm.channel).t;
    json results;
    results["t"] = t;
    int code;
    try {
        BarQMatrix bq = bar_q_matrix(pm.model.potential.J, pm.model.space.q, t);
        results["margin"] = bq.margin;
        results["certified"] = true;
        auto labels = vertex_labels(pm.model.graph.n);
        fs::create_directories(opt.out_dir);
        write_text(fs::path(opt.out_dir) / "q_bar.csv", matrix_to_csv(bq.values, labels));
        results["q_bar_csv"] = "q_bar.csv";
        code = kExitCertified;
    } catch (const CertificateError& e) {
        results["margin"] = e.value;
        results["certified"] = false;
        code = kExitNotGranted;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(opt, "rotator-qbar", bytes, results, wall);
    return code;
}

int run_simulate(const Options& opt) {
    using namespace gibbscert;
    auto t0 = std::chrono::steady_clock::now();
    SdeConfig cfg;
    cfg.dt = opt.dt;
    RngSpec rng{opt.seed, 0};
    EmpiricalEstimate est = simulate_height(opt.q, opt.z0, opt.t, cfg, rng, opt.paths);
    json results;
    results["q"] = opt.q;
    results["z0"] = opt.z0;
    results["t"] = opt.t;
    results["dt"] = opt.dt;
    results["n_paths"] = est.n;
    results["mean"] = est.mean;
    results["se"] = est.se;
    results["target"] = opt.z0 * mean_height(opt.q, opt.t);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(opt, "simulate", "", results, wall);
    return kExitCertified;
}

int run_oracle(const Options& opt) {
    using namespace gibbscert;
    auto t0 = std::chrono::steady_clock::now();
    std::string bytes = read_file(opt.model_path);
    ParsedModel pm = parse_model_text(bytes, opt.model_path);
    if (!pm.model.discrete())
        throw std::runtime_error("oracle requires a discrete model");
    Eigen::MatrixXd C = exact_dobrushin_matrix(pm.model);
    double c = 0.0;
    for (int i = 0; i < C.rows(); ++i) c = std::max(c, C.row(i).sum());
    json results;
    results["mode"] = "exact-enumeration";
    results["c"] = c;
    results["certified"] = c < 1.0;
    auto labels = vertex_labels(pm.model.graph.n);
    fs::create_directories(opt.out_dir);
    write_text(fs::path(opt.out_dir) / "exact_dobrushin.csv", matrix_to_csv(C, labels));
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    emit_report(opt, "oracle", bytes, results, wall);
    return c < 1.0 ? kExitCertified : kExitNotGranted;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gibbscert: Dobrushin-type certification for transformed spin models"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool needs_model) {
        auto* m = sub->add_option("--model", opt.model_path, "model description file")
                      ->envname("GIBBSCERT_MODEL");
        if (needs_model) m->required();
        sub->add_option("--out", opt.out_dir, "output directory")->envname("GIBBSCERT_OUT");
        sub->add_option("--seed", opt.seed, "rng seed")->envname("GIBBSCERT_SEED");
        sub->add_option("--paths", opt.paths, "monte carlo paths")->envname("GIBBSCERT_PATHS");
        sub->add_option("--dt", opt.dt, "sde step size")->envname("GIBBSCERT_DT");
        sub->add_option("--quad-nodes", opt.quad_nodes, "quadrature nodes")
            ->envname("GIBBSCERT_QUAD_NODES");
        sub->add_option("--flavor", opt.flavor, "bound flavor: linear|quadratic|lipschitz")
            ->envname("GIBBSCERT_FLAVOR");
    };

    auto* certify = app.add_subcommand("certify", "single- or two-layer uniqueness certificate");
    add_common(certify, true);
    auto* thresh = app.add_subcommand("rotator-threshold", "Gibbs time threshold t*");
    add_common(thresh, true);
    auto* qbar = app.add_subcommand("rotator-qbar", "continuity matrix at time t");
    add_common(qbar, true);
    qbar->add_option("--t", opt.t, "evolution time (overridden by [channel] t)");
    auto* sim = app.add_subcommand("simulate", "height diffusion monte carlo");
    add_common(sim, false);
    sim->add_option("--q", opt.q, "sphere dimension parameter");
    sim->add_option("--z0", opt.z0, "initial height");
    sim->add_option("--t", opt.t, "horizon");
    auto* oracle = app.add_subcommand("oracle", "exact enumeration oracle");
    add_common(oracle, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (certify->parsed()) return run_certify(opt);
        if (thresh->parsed()) return run_rotator_threshold(opt);
        if (qbar->parsed()) return run_rotator_qbar(opt);
        if (sim->parsed()) return run_simulate(opt);
        if (oracle->parsed()) return run_oracle(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
