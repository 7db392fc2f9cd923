#ifndef GIBBSCERT_MODEL_HPP
#define GIBBSCERT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gibbscert/measure.hpp"
#include "gibbscert/quadrature.hpp"

namespace gibbscert {

struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;   // unordered, stored with first < second
    std::vector<std::vector<int>> neighbors;  // adjacency lists

    Graph() = default;
    Graph(int n_, std::vector<std::pair<int, int>> edge_list) : n(n_) {
        neighbors.resize(n);
        for (auto [a, b] : edge_list) {
            if (a == b) throw std::invalid_argument("Graph: self-loop");
            if (a < 0 || b < 0 || a >= n || b >= n)
                throw std::invalid_argument("Graph: vertex out of range");
            if (a > b) std::swap(a, b);
            if (is_edge(a, b)) continue;
            edges.emplace_back(a, b);
            neighbors[a].push_back(b);
            neighbors[b].push_back(a);
        }
        for (auto& nb : neighbors) std::sort(nb.begin(), nb.end());
    }

    bool is_edge(int a, int b) const {
        if (a > b) std::swap(a, b);
        return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) != edges.end();
    }

    /// Periodic w x h grid; width or height 2 would duplicate edges, so
    /// those wrap-arounds collapse (a 4-regular torus needs w,h >= 3).
    static Graph torus(int w, int h) {
        auto id = [w](int x, int y) { return y * w + x; };
        std::vector<std::pair<int, int>> e;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (w > 1) e.emplace_back(id(x, y), id((x + 1) % w, y));
                if (h > 1) e.emplace_back(id(x, y), id(x, (y + 1) % h));
            }
        return Graph(w * h, std::move(e));
    }

    static Graph path(int n) {
        std::vector<std::pair<int, int>> e;
        for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
        return Graph(n, std::move(e));
    }
};

struct SingleSpinSpace {
    enum class Kind { Discrete, Sphere };
    Kind kind = Kind::Discrete;

    // Discrete
    std::vector<std::string> labels;
    std::vector<Eigen::VectorXd> coords;  // optional embedding, used for metrics

    // Sphere S^{q-1}
    int q = 0;

    int atom_count() const { return int(labels.size()); }
    bool has_coords() const { return !coords.empty(); }

    static SingleSpinSpace ising_pair() {
        SingleSpinSpace s;
        s.labels = {"+1", "-1"};
        s.coords = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
        return s;
    }

    /// m equally spaced atoms on the unit circle.
    static SingleSpinSpace discretized_circle(int m) {
        SingleSpinSpace s;
        for (int k = 0; k < m; ++k) {
            double th = 2.0 * M_PI * k / m;
            Eigen::VectorXd v(2);
            v << std::cos(th), std::sin(th);
            s.labels.push_back("a" + std::to_string(k));
            s.coords.push_back(v);
        }
        return s;
    }

    static SingleSpinSpace sphere(int q_) {
        if (q_ < 2) throw std::invalid_argument("SingleSpinSpace: sphere needs q >= 2");
        SingleSpinSpace s;
        s.kind = Kind::Sphere;
        s.q = q_;
        return s;
    }
};

struct AprioriMeasure {
    // Discrete spaces: weight per atom. Sphere: uniform equidistribution only.
    std::vector<double> weights;
    bool sphere_uniform = false;

    static AprioriMeasure uniform(const SingleSpinSpace& space) {
        AprioriMeasure a;
        if (space.kind == SingleSpinSpace::Kind::Sphere) {
            a.sphere_uniform = true;
        } else {
            a.weights.assign(space.atom_count(), 1.0 / space.atom_count());
        }
        return a;
    }

    static AprioriMeasure discrete(std::vector<double> w) {
        AprioriMeasure a;
        a.weights = std::move(w);
        DiscreteMeasure{a.weights}.validate();
        return a;
    }

    DiscreteMeasure as_discrete() const { return DiscreteMeasure{weights}; }
    double weight(int a) const { return weights[std::size_t(a)]; }
};

enum class PotentialForm { Ising, Rotator, Tabulated };

/// Pair potential Phi_{ij}. Conventions:
///   Ising:   Phi(s,t) = -J_ij s t       on atom values +-1
///   Rotator: Phi(s,t) = -J_ij s . t     on S^{q-1}
///   Tabulated: explicit table per edge (discrete spaces only)
struct PairPotential {
    PotentialForm form = PotentialForm::Ising;
    Eigen::MatrixXd J;                    // symmetric, zero diagonal
    std::vector<Eigen::MatrixXd> tables;  // per edge index, rows = atom at edge.first

    void validate(const Graph& g) const {
        if (J.rows() != g.n || J.cols() != g.n)
            throw std::invalid_argument("PairPotential: J size mismatch");
        for (int i = 0; i < g.n; ++i) {
            if (J(i, i) != 0.0) throw std::invalid_argument("PairPotential: J_ii must be 0");
            for (int j = 0; j < g.n; ++j)
                if (J(i, j) != J(j, i))
                    throw std::invalid_argument("PairPotential: J not symmetric");
        }
        if (form == PotentialForm::Tabulated && tables.size() != g.edges.size())
            throw std::invalid_argument("PairPotential: one table per edge required");
    }
};

struct InteractionModel {
    Graph graph;
    SingleSpinSpace space;
    AprioriMeasure apriori;
    PairPotential potential;
    int quad_nodes = 128;  // sphere quadrature resolution

    InteractionModel(Graph g, SingleSpinSpace s, AprioriMeasure a, PairPotential p,
                     int quad_nodes_ = 128)
        : graph(std::move(g)), space(std::move(s)), apriori(std::move(a)),
          potential(std::move(p)), quad_nodes(quad_nodes_) {
        potential.validate(graph);
        if (space.kind == SingleSpinSpace::Kind::Sphere &&
            potential.form != PotentialForm::Rotator)
            throw std::invalid_argument("InteractionModel: sphere space needs Rotator form");
        if (potential.form == PotentialForm::Tabulated &&
            space.kind != SingleSpinSpace::Kind::Discrete)
            throw std::invalid_argument("InteractionModel: tabulated needs discrete space");
        if (space.kind == SingleSpinSpace::Kind::Discrete && !apriori.weights.empty() &&
            int(apriori.weights.size()) != space.atom_count())
            throw std::invalid_argument("InteractionModel: apriori size mismatch");
    }

    bool discrete() const { return space.kind == SingleSpinSpace::Kind::Discrete; }

    int edge_index(int i, int j) const {
        if (i > j) std::swap(i, j);
        auto it = std::find(graph.edges.begin(), graph.edges.end(), std::make_pair(i, j));
        if (it == graph.edges.end()) return -1;
        return int(it - graph.edges.begin());
    }

    /// Phi_{ij}(atom a at i, atom b at j) for discrete spaces.
    double phi(int i, int j, int a, int b) const {
        int e = edge_index(i, j);
        if (e < 0) return 0.0;
        switch (potential.form) {
            case PotentialForm::Ising: {
                double va = space.coords[a](0), vb = space.coords[b](0);
                return -J(i, j) * va * vb;
            }
            case PotentialForm::Rotator:
                return -J(i, j) * space.coords[a].dot(space.coords[b]);
            case PotentialForm::Tabulated: {
                auto [lo, hi] = graph.edges[e];
                return (i == lo) ? potential.tables[e](a, b) : potential.tables[e](b, a);
            }
        }
        return 0.0;
    }

    double J(int i, int j) const { return potential.J(i, j); }

    double sup_norm_phi(int i, int j) const {
        int e = edge_index(i, j);
        if (e < 0) return 0.0;
        if (potential.form == PotentialForm::Tabulated)
            return potential.tables[e].cwiseAbs().maxCoeff();
        return std::abs(J(i, j));
    }
};

/// delta(Phi_{ij}) = sup - inf over all argument pairs.
inline double oscillation(const InteractionModel& m, int i, int j) {
    int e = m.edge_index(i, j);
    if (e < 0) throw std::domain_error("oscillation: {i,j} is not an edge");
    if (m.potential.form == PotentialForm::Tabulated) {
        const auto& t = m.potential.tables[e];
        return t.maxCoeff() - t.minCoeff();
    }
    return 2.0 * std::abs(m.J(i, j));  // sup s.t - inf s.t = 2 on +-1 atoms and spheres
}

/// delta_j(Phi_{ij}): oscillation in the j-argument only, sup over the i-argument.
inline double partial_oscillation(const InteractionModel& m, int i, int j) {
    int e = m.edge_index(i, j);
    if (e < 0) return 0.0;
    if (m.potential.form == PotentialForm::Tabulated) {
        double best = 0.0;
        int na = m.space.atom_count();
        for (int a = 0; a < na; ++a) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int b = 0; b < na; ++b) {
                double v = m.phi(i, j, a, b);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            best = std::max(best, hi - lo);
        }
        return best;
    }
    return 2.0 * std::abs(m.J(i, j));
}

/// sup_i sum_{A ni i} |A| ||Phi_A||_inf; pair potentials give sum_j 2 ||Phi_ij||.
inline double triple_norm(const InteractionModel& m) {
    double best = 0.0;
    for (int i = 0; i < m.graph.n; ++i) {
        double s = 0.0;
        for (int j : m.graph.neighbors[i]) s += 2.0 * m.sup_norm_phi(i, j);
        best = std::max(best, s);
    }
    return best;
}

/// sum_{A ni i} ||Phi_A||_inf for one site (rotator/Ising: sum_j |J_ij|).
inline double site_sup_norm_sum(const InteractionModel& m, int i) {
    double s = 0.0;
    for (int j : m.graph.neighbors[i]) s += m.sup_norm_phi(i, j);
    return s;
}

/// sum_{A ni j} delta_j(Phi_A) for one site.
inline double site_partial_oscillation_sum(const InteractionModel& m, int j) {
    double s = 0.0;
    for (int l : m.graph.neighbors[j]) s += partial_oscillation(m, j, l);
    return s;
}

/// H_i(sigma_i, zeta_j, rest) - H_i(sigma_i, zbar_j, rest); for pair potentials
/// everything except the {i,j} term cancels. Discrete overload (atom indices).
inline double local_hamiltonian_variation(const InteractionModel& m, int i, int j,
                                          int sigma_i, int zeta_j, int zbar_j) {
    return m.phi(i, j, sigma_i, zeta_j) - m.phi(i, j, sigma_i, zbar_j);
}

/// Rotator overload (unit vectors).
inline double local_hamiltonian_variation(const InteractionModel& m, int i, int j,
                                          const Eigen::VectorXd& sigma_i,
                                          const Eigen::VectorXd& zeta_j,
                                          const Eigen::VectorXd& zbar_j) {
    if (m.potential.form != PotentialForm::Rotator)
        throw std::domain_error("vector overload requires Rotator form");
    return -m.J(i, j) * sigma_i.dot(zeta_j - zbar_j);
}

/// Ferromagnetic nearest-neighbor models used throughout the tests and CLI.
inline InteractionModel make_ising_model(Graph g, double coupling,
                                         std::vector<double> apriori_weights = {}) {
    auto space = SingleSpinSpace::ising_pair();
    auto apriori = apriori_weights.empty() ? AprioriMeasure::uniform(space)
                                          : AprioriMeasure::discrete(std::move(apriori_weights));
    PairPotential p;
    p.form = PotentialForm::Ising;
    p.J = Eigen::MatrixXd::Zero(g.n, g.n);
    for (auto [a, b] : g.edges) p.J(a, b) = p.J(b, a) = coupling;
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p));
}

inline InteractionModel make_rotator_model(Graph g, int q, double coupling,
                                           int quad_nodes = 128) {
    auto space = SingleSpinSpace::sphere(q);
    auto apriori = AprioriMeasure::uniform(space);
    PairPotential p;
    p.form = PotentialForm::Rotator;
    p.J = Eigen::MatrixXd::Zero(g.n, g.n);
    for (auto [a, b] : g.edges) p.J(a, b) = p.J(b, a) = coupling;
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p),
                            quad_nodes);
}

/// Rotator restricted to m uniform atoms on the circle, Phi = -J cos(theta_a - theta_b),
/// realized as a Tabulated potential so every bound stays exactly enumerable.
inline InteractionModel make_discretized_circle_model(Graph g, int m_atoms, double coupling) {
    auto space = SingleSpinSpace::discretized_circle(m_atoms);
    auto apriori = AprioriMeasure::uniform(space);
    PairPotential p;
    p.form = PotentialForm::Tabulated;
    p.J = Eigen::MatrixXd::Zero(g.n, g.n);
    for (auto [a, b] : g.edges) p.J(a, b) = p.J(b, a) = coupling;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        Eigen::MatrixXd t(m_atoms, m_atoms);
        for (int a = 0; a < m_atoms; ++a)
            for (int b = 0; b < m_atoms; ++b)
                t(a, b) = -coupling * space.coords[a].dot(space.coords[b]);
        p.tables.push_back(std::move(t));
    }
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p));
}

/// Matrix-coupling overloads for inhomogeneous J.
inline InteractionModel make_ising_model(Graph g, const Eigen::MatrixXd& J,
                                         std::vector<double> apriori_weights = {}) {
    auto space = SingleSpinSpace::ising_pair();
    auto apriori = apriori_weights.empty() ? AprioriMeasure::uniform(space)
                                          : AprioriMeasure::discrete(std::move(apriori_weights));
    PairPotential p;
    p.form = PotentialForm::Ising;
    p.J = J;
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p));
}

inline InteractionModel make_rotator_model(Graph g, const Eigen::MatrixXd& J, int q,
                                           int quad_nodes = 128) {
    auto space = SingleSpinSpace::sphere(q);
    auto apriori = AprioriMeasure::uniform(space);
    PairPotential p;
    p.form = PotentialForm::Rotator;
    p.J = J;
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p),
                            quad_nodes);
}

inline InteractionModel make_discretized_circle_model(Graph g, const Eigen::MatrixXd& J,
                                                      int m_atoms) {
    auto space = SingleSpinSpace::discretized_circle(m_atoms);
    auto apriori = AprioriMeasure::uniform(space);
    PairPotential p;
    p.form = PotentialForm::Tabulated;
    p.J = J;
    for (auto [a, b] : g.edges) {
        Eigen::MatrixXd t(m_atoms, m_atoms);
        for (int x = 0; x < m_atoms; ++x)
            for (int y = 0; y < m_atoms; ++y)
                t(x, y) = -J(a, b) * space.coords[x].dot(space.coords[y]);
        p.tables.push_back(std::move(t));
    }
    return InteractionModel(std::move(g), std::move(space), std::move(apriori), std::move(p));
}

}  // namespace gibbscert

#endif
