#ifndef GIBBSCERT_TWO_LAYER_HPP
#define GIBBSCERT_TWO_LAYER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gibbscert/dobrushin.hpp"
#include "gibbscert/model.hpp"
#include "gibbscert/rotator.hpp"

namespace gibbscert {

/// Single-site joint measure K(dsigma, deta) = k(sigma,eta) alpha(dsigma) alpha'(deta).
struct DiscreteChannel {
    Eigen::MatrixXd k;            // rows: first-layer atoms, cols: second-layer atoms
    std::vector<double> alpha;    // first-layer marginal weights
    std::vector<double> alpha_prime;

    int first_atoms() const { return int(k.rows()); }
    int second_atoms() const { return int(k.cols()); }

    void validate() const {
        if (k.minCoeff() < 0.0) throw std::invalid_argument("DiscreteChannel: k < 0");
        for (int b = 0; b < k.cols(); ++b) {
            double mass = 0.0;
            for (int a = 0; a < k.rows(); ++a) mass += k(a, b) * alpha[a];
            if (mass <= 0.0)
                throw std::invalid_argument("DiscreteChannel: posterior has zero normalizer");
        }
    }

    /// Channel density from a conditional kernel P(eta|sigma): alpha' is the
    /// image marginal and k = P(eta|sigma)/alpha'(eta).
    static DiscreteChannel from_conditional(const Eigen::MatrixXd& p_eta_given_sigma,
                                            std::vector<double> alpha_weights) {
        DiscreteChannel ch;
        ch.alpha = std::move(alpha_weights);
        int na = int(p_eta_given_sigma.rows()), nb = int(p_eta_given_sigma.cols());
        ch.alpha_prime.assign(nb, 0.0);
        for (int b = 0; b < nb; ++b)
            for (int a = 0; a < na; ++a)
                ch.alpha_prime[b] += ch.alpha[a] * p_eta_given_sigma(a, b);
        ch.k = Eigen::MatrixXd::Zero(na, nb);
        for (int b = 0; b < nb; ++b)
            for (int a = 0; a < na; ++a)
                ch.k(a, b) = ch.alpha_prime[b] > 0.0
                                 ? p_eta_given_sigma(a, b) / ch.alpha_prime[b]
                                 : 0.0;
        return ch;
    }

    static DiscreteChannel identity(int n) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
        return from_conditional(p, std::vector<double>(n, 1.0 / n));
    }

    static DiscreteChannel independent(int n) {
        Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
        return from_conditional(p, std::vector<double>(n, 1.0 / n));
    }
};

struct HeatKernelChannel {
    int q = 2;
    double t = 0.0;
    int quad_nodes = 128;
};

using Channel = std::variant<DiscreteChannel, HeatKernelChannel>;

/// alpha_eta(dsigma) proportional to k(sigma,eta) alpha(dsigma).
inline DiscreteMeasure posterior_measure(const DiscreteChannel& ch, int eta) {
    DiscreteMeasure m{std::vector<double>(ch.first_atoms())};
    for (int a = 0; a < ch.first_atoms(); ++a) m.p[a] = ch.k(a, eta) * ch.alpha[a];
    m.normalize();
    return m;
}

/// Heat-kernel posterior in the height coordinate after rotating eta to the
/// pole: density k_t(1,u) against the Gauss-Jacobi weights of (1-u^2)^{(q-3)/2}.
inline GridMeasure posterior_measure(const HeatKernelChannel& ch) {
    HeatKernelEval kernel(ch.q, ch.t);
    GaussJacobi quad(ch.quad_nodes, (ch.q - 3) / 2.0);
    GridMeasure g;
    g.base_weights = quad.weights;
    g.density.resize(quad.nodes.size());
    for (std::size_t k = 0; k < quad.nodes.size(); ++k)
        g.density[k] = kernel(1.0, quad.nodes[k]);
    return g;
}

inline double posterior_metric(const DiscreteChannel& ch, int eta1, int eta2) {
    return variational_distance(posterior_measure(ch, eta1), posterior_measure(ch, eta2));
}

/// d'(eta, etabar) for the heat-kernel channel at chordal distance x, by
/// quadrature over the sphere (height u from eta, azimuthal component v).
inline double sphere_posterior_metric(int q, double t, double x, int nodes = 128) {
    if (x < 0.0 || x > 2.0) throw std::domain_error("sphere_posterior_metric: x in [0,2]");
    HeatKernelEval kernel(q, t);
    double c = 1.0 - 0.5 * x * x;  // eta . etabar
    GaussJacobi qu(nodes, (q - 3) / 2.0);
    std::vector<double> vnodes, vweights;
    if (q == 2) {
        vnodes = {1.0, -1.0};
        vweights = {0.5, 0.5};
    } else {
        GaussJacobi qv(nodes, (q - 4) / 2.0);
        vnodes = qv.nodes;
        vweights = qv.weights;
        for (double& w : vweights) w /= qv.total_mass;
    }
    double s = 1.0 - c * c;
    double acc = 0.0;
    for (std::size_t ku = 0; ku < qu.nodes.size(); ++ku) {
        double u = qu.nodes[ku];
        double ku1 = kernel(1.0, u);
        double inner = 0.0;
        for (std::size_t kv = 0; kv < vnodes.size(); ++kv) {
            double w = u * c + std::sqrt(std::max(0.0, (1.0 - u * u) * s)) * vnodes[kv];
            inner += vweights[kv] * std::abs(ku1 - kernel(1.0, std::clamp(w, -1.0, 1.0)));
        }
        acc += qu.weights[ku] * inner;
    }
    return acc / qu.total_mass;
}

inline double posterior_metric(const HeatKernelChannel& ch, const Eigen::VectorXd& eta1,
                               const Eigen::VectorXd& eta2) {
    return sphere_posterior_metric(ch.q, ch.t, (eta1 - eta2).norm(), ch.quad_nodes);
}

enum class ConditionalFlavor { LinearDev, QuadraticStd };

struct ConditionalBound {
    Eigen::MatrixXd C;        // bar C
    Eigen::MatrixXd B;        // bar B (or std analogue)
    double c = 0.0;           // sup_i sum_j bar C_ij
    std::string route;        // "discrete-sup" or "rotator-lipschitz"
    ConditionalFlavor flavor = ConditionalFlavor::LinearDev;

    void finalize() {
        c = 0.0;
        for (int i = 0; i < C.rows(); ++i) c = std::max(c, C.row(i).sum());
    }
};

/// bar C_ij for a discrete channel: exact sup over the eta alphabet of the
/// deviation under each posterior.
inline ConditionalBound conditional_dobrushin_matrix(
    const InteractionModel& m, const DiscreteChannel& ch,
    ConditionalFlavor flavor = ConditionalFlavor::LinearDev) {
    if (!m.discrete() || ch.first_atoms() != m.space.atom_count())
        throw std::invalid_argument("conditional_dobrushin_matrix: channel/model mismatch");
    ch.validate();
    int n = m.graph.n;
    ConditionalBound r;
    r.flavor = flavor;
    r.route = "discrete-sup";
    r.C = Eigen::MatrixXd::Zero(n, n);
    r.B = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : m.graph.neighbors[i]) {
            double worst = 0.0;
            for (int eta = 0; eta < ch.second_atoms(); ++eta) {
                AprioriMeasure post;
                post.weights = posterior_measure(ch, eta).p;
                double d = (flavor == ConditionalFlavor::LinearDev)
                               ? dev(m, i, j, post)
                               : std_dev(m, i, j, post);
                worst = std::max(worst, d);
            }
            r.B(i, j) = worst;
            double osc = oscillation(m, i, j);
            r.C(i, j) = (flavor == ConditionalFlavor::LinearDev)
                            ? std::exp(osc) * worst
                            : 0.5 * std::exp(0.5 * osc) * worst;
        }
    r.finalize();
    return r;
}

/// Rotator under the heat-kernel channel: the Lipschitz route with
/// int d^2(sigma, eta) alpha_eta(dsigma) = 2(1 - e^{-(q-1)t}), uniform in eta,
/// gives bar C_ij = sqrt(2) e^{|J_ij|} |J_ij| (1 - e^{-(q-1)t})^{1/2}.
inline ConditionalBound conditional_dobrushin_matrix(const InteractionModel& m,
                                                     const HeatKernelChannel& ch) {
    if (m.potential.form != PotentialForm::Rotator ||
        m.space.kind != SingleSpinSpace::Kind::Sphere || m.space.q != ch.q)
        throw std::invalid_argument("conditional_dobrushin_matrix: rotator/sphere q mismatch");
    int n = m.graph.n;
    double lam = std::sqrt(1.0 - std::exp(-(ch.q - 1.0) * ch.t));
    ConditionalBound r;
    r.route = "rotator-lipschitz";
    r.flavor = ConditionalFlavor::QuadraticStd;
    r.C = Eigen::MatrixXd::Zero(n, n);
    r.B = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : m.graph.neighbors[i]) {
            double aj = std::abs(m.J(i, j));
            r.B(i, j) = 2.0 * aj * std::sqrt(2.0) * lam;  // L_ij * second-moment factor
            r.C(i, j) = std::sqrt(2.0) * std::exp(aj) * aj * lam;
        }
    r.finalize();
    return r;
}

enum class QProvenance { ExactEq, CoarseBound };  // per-edge form vs uniform-constant form

struct QMatrix {
    Eigen::MatrixXd values;
    QProvenance provenance = QProvenance::ExactEq;
    Eigen::MatrixXd d_bar;
};

/// Continuity matrix: Q_ij = 4 e^{2 sum_{A ni i} ||Phi_A||} (sum_k delta_k(Phi_ik) barD_kj)
/// e^{sum_{A ni j} delta_j(Phi_A)}, or the coarser uniform-constant variant
/// 4 e^{4 sup_i sum ||Phi||} (M barD)_ij.
inline QMatrix q_matrix(const InteractionModel& m, const ConditionalBound& cbar,
                        QProvenance prov = QProvenance::ExactEq) {
    NeumannSeries ns = neumann_series(cbar.C);
    int n = m.graph.n;
    QMatrix r;
    r.provenance = prov;
    r.d_bar = ns.D;
    r.values = Eigen::MatrixXd::Zero(n, n);
    double sup_norm = 0.0;
    for (int i = 0; i < n; ++i) sup_norm = std::max(sup_norm, site_sup_norm_sum(m, i));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double inner = 0.0;
            for (int k : m.graph.neighbors[i])
                if (k != i) inner += partial_oscillation(m, i, k) * ns.D(k, j);
            if (prov == QProvenance::ExactEq) {
                r.values(i, j) = 4.0 * std::exp(2.0 * site_sup_norm_sum(m, i)) * inner *
                                 std::exp(site_partial_oscillation_sum(m, j));
            } else {
                r.values(i, j) = 4.0 * std::exp(4.0 * sup_norm) * inner;
            }
        }
    }
    return r;
}

struct ContinuityReport {
    bool certified = false;
    double c_bar = 0.0;
    std::string route;
    ConditionalFlavor flavor = ConditionalFlavor::LinearDev;
    Eigen::MatrixXd c_bar_matrix;
    std::optional<QMatrix> q;  // present when certified
};

/// Certifies sup_i sum_j bar C_ij < 1 and, when certified, emits the Q matrix
/// for the estimate ||gamma'_i(.|eta) - gamma'_i(.|etabar)|| <= sum_j Q_ij d'(eta_j, etabar_j).
inline ContinuityReport continuity_certificate(
    const InteractionModel& m, const Channel& channel,
    ConditionalFlavor flavor = ConditionalFlavor::LinearDev,
    QProvenance prov = QProvenance::ExactEq) {
    ConditionalBound cb =
        std::holds_alternative<DiscreteChannel>(channel)
            ? conditional_dobrushin_matrix(m, std::get<DiscreteChannel>(channel), flavor)
            : conditional_dobrushin_matrix(m, std::get<HeatKernelChannel>(channel));
    ContinuityReport rep;
    rep.c_bar = cb.c;
    rep.route = cb.route;
    rep.flavor = cb.flavor;
    rep.c_bar_matrix = cb.C;
    rep.certified = cb.c < 1.0;
    if (rep.certified) rep.q = q_matrix(m, cb, prov);
    return rep;
}

struct FuzzyPartition {
    std::vector<double> cell_diameters;
    double fineness() const {
        double r = 0.0;
        for (double d : cell_diameters) {
            if (d < 0.0) throw std::invalid_argument("FuzzyPartition: negative diameter");
            r = std::max(r, d);
        }
        return r;
    }
};

struct FuzzyReport {
    double rho = 0.0;
    double lhs = 0.0;      // (rho/2) sup_i sum_j e^{(1/2) sum delta} L_ij
    bool certified = false;
    Eigen::MatrixXd c_bar; // for downstream Q
};

/// Coarse-graining criterion: certified iff (rho/2) sup_i sum_j e^{delta/2} L_ij < 1.
inline FuzzyReport fuzzy_check(const InteractionModel& m, const FuzzyPartition& part,
                               const Eigen::MatrixXd& L) {
    FuzzyReport r;
    r.rho = part.fineness();
    int n = m.graph.n;
    r.c_bar = Eigen::MatrixXd::Zero(n, n);
    double sup = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j : m.graph.neighbors[i]) {
            double e = 0.5 * r.rho * std::exp(0.5 * oscillation(m, i, j)) * L(i, j);
            r.c_bar(i, j) = e;
            s += e;
        }
        sup = std::max(sup, s);
    }
    r.lhs = sup;
    r.certified = sup < 1.0;
    return r;
}

inline FuzzyReport fuzzy_check(const InteractionModel& m, const FuzzyPartition& part) {
    return fuzzy_check(m, part, default_lipschitz_matrix(m));
}

struct DecimationReport {
    bool certified = false;
    double c_bar = 0.0;
    Eigen::MatrixXd c_bar_matrix;
    std::optional<QMatrix> image_dobrushin_bound;  // Q bounds the image interdependence matrix
    double d_prime_offdiag = 2.0;  // discrete-metric posterior distance between distinct eta
};

/// Decimation to a sublattice as a channel instance: observed sites have
/// point-mass posteriors (dev = 0), unobserved sites keep alpha, and Q becomes
/// a bound on the Dobrushin matrix of the image system.
inline DecimationReport decimation_report(const InteractionModel& m,
                                          const std::vector<int>& observed) {
    std::vector<bool> is_obs(m.graph.n, false);
    for (int v : observed) {
        if (v < 0 || v >= m.graph.n)
            throw std::invalid_argument("decimation_report: vertex out of range");
        is_obs[v] = true;
    }
    int n = m.graph.n;
    ConditionalBound cb;
    cb.route = "decimation";
    cb.C = Eigen::MatrixXd::Zero(n, n);
    cb.B = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (is_obs[i]) continue;  // posterior is a point mass, deviation vanishes
        for (int j : m.graph.neighbors[i]) {
            cb.B(i, j) = dev(m, i, j);
            cb.C(i, j) = std::exp(oscillation(m, i, j)) * cb.B(i, j);
        }
    }
    cb.finalize();
    DecimationReport rep;
    rep.c_bar = cb.c;
    rep.c_bar_matrix = cb.C;
    rep.certified = cb.c < 1.0;
    if (rep.certified) rep.image_dobrushin_bound = q_matrix(m, cb);
    return rep;
}

}  // namespace gibbscert

#endif
