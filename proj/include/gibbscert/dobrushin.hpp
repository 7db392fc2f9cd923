#ifndef GIBBSCERT_DOBRUSHIN_HPP
#define GIBBSCERT_DOBRUSHIN_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gibbscert/model.hpp"

namespace gibbscert {

/// Thrown when a sufficient condition fails; carries the offending value.
struct CertificateError : std::runtime_error {
    double value;
    explicit CertificateError(const std::string& what, double v)
        : std::runtime_error(what), value(v) {}
};

/// min_B sum w_k |v_k - B|, attained at the weighted median.
inline double l1_median_deviation(std::vector<double> v, std::vector<double> w) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double acc = 0.0, median = v[idx.back()];
    for (auto k : idx) {
        acc += w[k];
        if (acc >= 0.5 * total) {
            median = v[k];
            break;
        }
    }
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += w[k] * std::abs(v[k] - median);
    return s;
}

/// min_B (sum w_k (v_k - B)^2)^{1/2}, attained at the mean.
inline double l2_mean_deviation(const std::vector<double>& v, const std::vector<double>& w) {
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double mean = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) mean += w[k] * v[k];
    mean /= total;
    double var = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        var += w[k] * (v[k] - mean) * (v[k] - mean);
    return std::sqrt(std::max(0.0, var / total));
}

namespace detail {

enum class DevFlavor { Linear, Quadratic };

/// Worst-case deviation of the j-variation of H_i under a discrete single-site
/// measure: exact sup over boundary atom pairs at j.
inline double dev_discrete(const InteractionModel& m, int i, int j,
                           const DiscreteMeasure& under, DevFlavor flavor) {
    int na = m.space.atom_count();
    std::vector<double> delta(na);
    double best = 0.0;
    for (int z = 0; z < na; ++z)
        for (int zb = z + 1; zb < na; ++zb) {
            for (int a = 0; a < na; ++a)
                delta[a] = local_hamiltonian_variation(m, i, j, a, z, zb);
            double d = (flavor == DevFlavor::Linear)
                           ? l1_median_deviation(delta, under.p)
                           : l2_mean_deviation(delta, under.p);
            best = std::max(best, d);
        }
    return best;
}

/// Rotator on S^{q-1} under the equidistribution: the j-variation is
/// Delta(sigma) = -J sigma.(zeta - zbar), maximized at antipodal boundary
/// spins, so Delta = 2|J| u in the height coordinate u.
inline double dev_sphere_uniform(const InteractionModel& m, int i, int j, DevFlavor flavor) {
    GaussJacobi quad(m.quad_nodes, (m.space.q - 3) / 2.0);
    double mass = quad.total_mass;
    double scale = 2.0 * std::abs(m.J(i, j));
    if (flavor == DevFlavor::Linear) {
        // median of u is 0 by symmetry
        double e_abs = quad.integrate([](double u) { return std::abs(u); }) / mass;
        return scale * e_abs;
    }
    double e_sq = quad.integrate([](double u) { return u * u; }) / mass;
    return scale * std::sqrt(e_sq);
}

inline double dev_impl(const InteractionModel& m, int i, int j,
                       const AprioriMeasure& under, DevFlavor flavor) {
    if (m.edge_index(i, j) < 0) return 0.0;  // pair potentials couple only edges
    if (m.discrete()) return dev_discrete(m, i, j, under.as_discrete(), flavor);
    if (!under.sphere_uniform)
        throw std::domain_error("dev: sphere measures other than uniform are not supported");
    return dev_sphere_uniform(m, i, j, flavor);
}

}  // namespace detail

/// dev_{alpha;i,j}(H_i): worst-case L1 (median-centered) deviation.
inline double dev(const InteractionModel& m, int i, int j, const AprioriMeasure& under) {
    return detail::dev_impl(m, i, j, under, detail::DevFlavor::Linear);
}
inline double dev(const InteractionModel& m, int i, int j) {
    return dev(m, i, j, m.apriori);
}

/// std_{alpha;i,j}(H_i): worst-case L2 (mean-centered) deviation.
inline double std_dev(const InteractionModel& m, int i, int j, const AprioriMeasure& under) {
    return detail::dev_impl(m, i, j, under, detail::DevFlavor::Quadratic);
}
inline double std_dev(const InteractionModel& m, int i, int j) {
    return std_dev(m, i, j, m.apriori);
}

enum class BoundFlavor { Linear, Quadratic, Lipschitz };

inline const char* to_string(BoundFlavor f) {
    switch (f) {
        case BoundFlavor::Linear: return "linear";
        case BoundFlavor::Quadratic: return "quadratic";
        case BoundFlavor::Lipschitz: return "lipschitz";
    }
    return "?";
}

struct DobrushinBound {
    Eigen::MatrixXd C;  // entrywise upper bound on the interdependence matrix
    double c = 0.0;     // sup_i sum_j C_ij
    BoundFlavor flavor = BoundFlavor::Linear;

    void finalize() {
        c = 0.0;
        for (int i = 0; i < C.rows(); ++i) c = std::max(c, C.row(i).sum());
    }
};

namespace detail {
/// sum_{A superset {i,j}} delta(Phi_A); pair potentials contribute delta(Phi_ij)
/// only, but callers with |A| >= 3 terms may override the whole matrix.
inline double osc_sum(const InteractionModel& m, int i, int j,
                      const Eigen::MatrixXd* osc_override) {
    if (osc_override) return (*osc_override)(i, j);
    if (m.edge_index(i, j) < 0) return 0.0;
    return oscillation(m, i, j);
}
}  // namespace detail

/// C_ij <= exp(sum delta(Phi_A)) dev_{alpha;i,j}(H_i).
inline DobrushinBound dobrushin_bound_linear(const InteractionModel& m,
                                             const Eigen::MatrixXd* osc_override = nullptr) {
    DobrushinBound b;
    b.flavor = BoundFlavor::Linear;
    b.C = Eigen::MatrixXd::Zero(m.graph.n, m.graph.n);
    for (int i = 0; i < m.graph.n; ++i)
        for (int j : m.graph.neighbors[i])
            b.C(i, j) = std::exp(detail::osc_sum(m, i, j, osc_override)) * dev(m, i, j);
    b.finalize();
    return b;
}

/// C_ij <= (1/2) exp((1/2) sum delta(Phi_A)) std_{alpha;i,j}(H_i).
inline DobrushinBound dobrushin_bound_quadratic(const InteractionModel& m,
                                                const Eigen::MatrixXd* osc_override = nullptr) {
    DobrushinBound b;
    b.flavor = BoundFlavor::Quadratic;
    b.C = Eigen::MatrixXd::Zero(m.graph.n, m.graph.n);
    for (int i = 0; i < m.graph.n; ++i)
        for (int j : m.graph.neighbors[i])
            b.C(i, j) = 0.5 * std::exp(0.5 * detail::osc_sum(m, i, j, osc_override)) *
                        std_dev(m, i, j);
    b.finalize();
    return b;
}

/// Second-moment factor inf_a (int d^2(sigma,a) alpha(dsigma))^{1/2} for the
/// Lipschitz bound; candidates are the atoms (discrete) or any point on the
/// sphere (rotation invariance makes the integral a-independent).
inline double second_moment_factor(const InteractionModel& m, const AprioriMeasure& alpha) {
    if (m.space.kind == SingleSpinSpace::Kind::Sphere) {
        if (!alpha.sphere_uniform)
            throw std::domain_error("second_moment_factor: non-uniform sphere measure");
        return std::sqrt(2.0);  // int |sigma - a|^2 alpha_0 = 2(1 - E sigma.a) = 2
    }
    if (m.space.coords.empty())
        throw std::domain_error("second_moment_factor: space has no metric embedding");
    double best = std::numeric_limits<double>::infinity();
    int na = m.space.atom_count();
    for (int a = 0; a < na; ++a) {
        double s = 0.0;
        for (int b = 0; b < na; ++b)
            s += alpha.weights[b] * (m.space.coords[b] - m.space.coords[a]).squaredNorm();
        best = std::min(best, s);
    }
    return std::sqrt(best);
}

inline double second_moment_factor(const InteractionModel& m) {
    return second_moment_factor(m, m.apriori);
}

/// Default Lipschitz matrix for the j-variation of H_i: rotator gives
/// L_ij = 2|J_ij|; other forms must supply L explicitly.
inline Eigen::MatrixXd default_lipschitz_matrix(const InteractionModel& m) {
    if (m.potential.form == PotentialForm::Tabulated)
        throw std::domain_error("default_lipschitz_matrix: supply L for tabulated potentials");
    return 2.0 * m.potential.J.cwiseAbs();
}

/// c <= (1/2) sup_i sum_j exp((1/2) sum delta) L_ij (int d^2(.,a) alpha)^{1/2}.
inline DobrushinBound dobrushin_bound_lipschitz(const InteractionModel& m,
                                                const Eigen::MatrixXd& L,
                                                const Eigen::MatrixXd* osc_override = nullptr) {
    double factor = second_moment_factor(m);
    DobrushinBound b;
    b.flavor = BoundFlavor::Lipschitz;
    b.C = Eigen::MatrixXd::Zero(m.graph.n, m.graph.n);
    for (int i = 0; i < m.graph.n; ++i)
        for (int j : m.graph.neighbors[i])
            b.C(i, j) = 0.5 * std::exp(0.5 * detail::osc_sum(m, i, j, osc_override)) *
                        L(i, j) * factor;
    b.finalize();
    return b;
}

inline DobrushinBound dobrushin_bound_lipschitz(const InteractionModel& m) {
    return dobrushin_bound_lipschitz(m, default_lipschitz_matrix(m));
}

struct TripleNormReport {
    double dev_norm = 0.0;       // |||Phi|||_{dev_alpha}
    double std_norm = 0.0;       // |||Phi|||_{std_alpha}
    double triple = 0.0;         // |||Phi|||
    double c_bound_dev = 0.0;    // e^{2|||Phi|||} |||Phi|||_dev
    double c_bound_std = 0.0;    // (1/2) e^{|||Phi|||} |||Phi|||_std
};

inline TripleNormReport dev_triple_norms(const InteractionModel& m) {
    TripleNormReport r;
    r.triple = triple_norm(m);
    for (int i = 0; i < m.graph.n; ++i) {
        double sd = 0.0, ss = 0.0;
        for (int j : m.graph.neighbors[i]) {
            sd += dev(m, i, j);
            ss += std_dev(m, i, j);
        }
        r.dev_norm = std::max(r.dev_norm, sd);
        r.std_norm = std::max(r.std_norm, ss);
    }
    r.c_bound_dev = std::exp(2.0 * r.triple) * r.dev_norm;
    r.c_bound_std = 0.5 * std::exp(r.triple) * r.std_norm;
    return r;
}

/// Exact interdependence matrix by exhaustive enumeration (discrete spaces).
/// C_ij = sup over boundary configs of (1/2) sum_a |gamma_i(a|zeta) - gamma_i(a|zbar)|,
/// matching the single-edge Ising closed form C_ij = tanh|J|.
inline Eigen::MatrixXd exact_dobrushin_matrix(const InteractionModel& m,
                                              long long budget = 10'000'000LL) {
    if (!m.discrete())
        throw std::domain_error("exact_dobrushin_matrix: discrete spaces only");
    int na = m.space.atom_count();
    int max_deg = 0;
    for (auto& nb : m.graph.neighbors) max_deg = std::max(max_deg, int(nb.size()));
    double work = std::pow(double(na), double(max_deg));
    if (work > double(budget))
        throw CertificateError("exact_dobrushin_matrix: enumeration budget exceeded", work);

    const auto& alpha = m.apriori.weights;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m.graph.n, m.graph.n);
    std::vector<int> conf;
    for (int i = 0; i < m.graph.n; ++i) {
        const auto& nb = m.graph.neighbors[i];
        int d = int(nb.size());
        for (int jj = 0; jj < d; ++jj) {
            int j = nb[jj];
            // enumerate atoms on the other neighbors
            int rest = d - 1;
            long long total = 1;
            for (int k = 0; k < rest; ++k) total *= na;
            conf.assign(d, 0);
            double best = 0.0;
            for (long long code = 0; code < total; ++code) {
                long long c = code;
                for (int k = 0; k < d; ++k) {
                    if (k == jj) continue;
                    conf[k] = int(c % na);
                    c /= na;
                }
                for (int z = 0; z < na; ++z)
                    for (int zb = z + 1; zb < na; ++zb) {
                        DiscreteMeasure g1{std::vector<double>(na)}, g2 = g1;
                        for (int a = 0; a < na; ++a) {
                            double h = 0.0;
                            for (int k = 0; k < d; ++k) {
                                if (k == jj) continue;
                                h += m.phi(i, nb[k], a, conf[k]);
                            }
                            g1.p[a] = alpha[a] * std::exp(-(h + m.phi(i, j, a, z)));
                            g2.p[a] = alpha[a] * std::exp(-(h + m.phi(i, j, a, zb)));
                        }
                        g1.normalize();
                        g2.normalize();
                        best = std::max(best, 0.5 * variational_distance(g1, g2));
                    }
            }
            C(i, j) = best;
        }
    }
    return C;
}

struct NeumannSeries {
    Eigen::MatrixXd D;       // sum_{n>=0} C^n = (I - C)^{-1}
    double row_norm = 0.0;   // certificate: sup_i sum_j C_ij
    double residual = 0.0;   // ||(I-C)D - I||_max
};

/// Direct linear solve; refuses when the row-sum certificate fails.
inline NeumannSeries neumann_series(const Eigen::MatrixXd& C) {
    NeumannSeries r;
    for (int i = 0; i < C.rows(); ++i) r.row_norm = std::max(r.row_norm, C.row(i).sum());
    if (r.row_norm >= 1.0)
        throw CertificateError("neumann_series: row norm >= 1, Gibbsianness not certified",
                               r.row_norm);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(C.rows(), C.cols());
    r.D = (I - C).partialPivLu().solve(I);
    r.residual = ((I - C) * r.D - I).cwiseAbs().maxCoeff();
    if (r.residual >= 1e-9)
        throw CertificateError("neumann_series: solve residual too large", r.residual);
    return r;
}

struct ConcentrationReport {
    double s = 1.0;        // exp(sup_{i != j} sum_{A superset {i,j}} delta(Phi_A))
    double b_norm_1 = 0.0;   // ||B||_1 (column-sum sup)
    double b_norm_inf = 0.0; // ||B||_inf (row-sum sup)
    double kappa = 0.0;      // (1 - s||B||_inf)(1 - s||B||_1)
    bool valid = false;
    double delta_f_l2_sq = 0.0;
    double bound = 1.0;      // at the queried r
};

inline Eigen::MatrixXd deviation_matrix(const InteractionModel& m) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m.graph.n, m.graph.n);
    for (int i = 0; i < m.graph.n; ++i)
        for (int j : m.graph.neighbors[i]) B(i, j) = dev(m, i, j);
    return B;
}

/// Gaussian concentration bound P(F - mu(F) >= r) <= exp(-kappa r^2 / (2 ||delta(F)||^2)).
inline ConcentrationReport concentration_bound(const InteractionModel& m,
                                               const std::vector<double>& delta_f, double r) {
    ConcentrationReport rep;
    double worst = 0.0;
    for (auto [a, b] : m.graph.edges) worst = std::max(worst, oscillation(m, a, b));
    rep.s = std::exp(worst);
    Eigen::MatrixXd B = deviation_matrix(m);
    for (int i = 0; i < B.rows(); ++i) rep.b_norm_inf = std::max(rep.b_norm_inf, B.row(i).sum());
    for (int j = 0; j < B.cols(); ++j) rep.b_norm_1 = std::max(rep.b_norm_1, B.col(j).sum());
    rep.valid = rep.s * rep.b_norm_1 < 1.0 && rep.s * rep.b_norm_inf < 1.0;
    rep.kappa = (1.0 - rep.s * rep.b_norm_inf) * (1.0 - rep.s * rep.b_norm_1);
    for (double d : delta_f) rep.delta_f_l2_sq += d * d;
    if (!rep.valid)
        throw CertificateError("concentration_bound: s||B|| >= 1",
                               std::max(rep.s * rep.b_norm_1, rep.s * rep.b_norm_inf));
    if (rep.delta_f_l2_sq == 0.0)
        throw std::invalid_argument("concentration_bound: delta(F) vanishes");
    if (r < 0.0) throw std::invalid_argument("concentration_bound: r must be >= 0");
    rep.bound = std::exp(-rep.kappa * r * r / (2.0 * rep.delta_f_l2_sq));
    return rep;
}

}  // namespace gibbscert

#endif
