#ifndef GIBBSCERT_ROTATOR_HPP
#define GIBBSCERT_ROTATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gibbscert/dobrushin.hpp"
#include "gibbscert/quadrature.hpp"

namespace gibbscert {

/// Legendre polynomial P_n(q,s) in dimension q, normalized to P_n(q,1) = 1.
/// Three-term recurrence (n+q-2) P_{n+1} = (2n+q-2) s P_n - n P_{n-1};
/// q = 2 reproduces Chebyshev cos(n theta), q = 3 the classical Legendre P_n.
inline double legendre(int q, int n, double s) {
    if (q < 2 || n < 0) throw std::invalid_argument("legendre: need q >= 2, n >= 0");
    if (std::abs(s) > 1.0 + 1e-14) throw std::domain_error("legendre: |s| > 1");
    s = std::clamp(s, -1.0, 1.0);
    if (n == 0) return 1.0;
    double pm = 1.0, p = s;
    for (int k = 1; k < n; ++k) {
        double next = ((2.0 * k + q - 2.0) * s * p - k * pm) / (k + q - 2.0);
        pm = p;
        p = next;
    }
    return p;
}

/// Dimension N(q,n) of spherical harmonics of degree n in dimension q,
/// exact integer arithmetic: N = (2n+q-2)/n * binom(n+q-3, q-2) for n >= 1.
inline std::uint64_t harmonic_dim(int q, int n) {
    if (q < 2 || n < 0) throw std::invalid_argument("harmonic_dim: need q >= 2, n >= 0");
    if (n == 0) return 1;
    std::uint64_t binom = 1;  // binom(n+q-3, q-2), built factor by factor
    for (int k = 1; k <= q - 2; ++k) binom = binom * std::uint64_t(n - 1 + k) / std::uint64_t(k);
    return (2 * std::uint64_t(n) + q - 2) * binom / std::uint64_t(n);
}

/// Truncated Legendre expansion of the height-coordinate heat kernel.
/// Terms are dropped once prefactor * e^{-n(n+q-2)t} N(q,n) < tol (|P_n| <= 1),
/// the dropped tail being bounded by the geometric continuation of that test.
class HeatKernelEval {
public:
    HeatKernelEval(int q, double t, double tol = 1e-12, int min_degree = 8,
                   int max_degree = 4096)
        : q_(q), t_(t) {
        if (q < 2) throw std::invalid_argument("HeatKernelEval: q >= 2");
        if (t <= 0.0)
            throw std::domain_error("HeatKernelEval: t = 0 (series diverges); use limits");
        small_time_warning_ = t < 1e-4;
        prefactor_ = 1.0 / sphere_height_mass(q);
        int n = 0;
        for (;; ++n) {
            double term = prefactor_ * std::exp(-double(n) * (n + q - 2.0) * t) *
                          double(harmonic_dim(q, n));
            if (n >= min_degree && term < tol) {
                tail_bound_ = term / (1.0 - std::exp(-(2.0 * n + q - 1.0) * t));
                break;
            }
            if (n >= max_degree)
                throw std::runtime_error("HeatKernelEval: truncation degree exceeded");
            coeff_.push_back(term);
        }
    }

    /// k_t(s,u); symmetric in (s,u) by construction.
    double operator()(double s, double u) const {
        double acc = 0.0;
        // stable joint recurrence for P_n(q,s), P_n(q,u)
        double ps_m = 1.0, pu_m = 1.0, ps = s, pu = u;
        for (std::size_t n = 0; n < coeff_.size(); ++n) {
            if (n == 0)
                acc += coeff_[0];
            else if (n == 1)
                acc += coeff_[1] * s * u;
            else {
                double k = double(n - 1);
                double ns = ((2.0 * k + q_ - 2.0) * s * ps - k * ps_m) / (k + q_ - 2.0);
                double nu = ((2.0 * k + q_ - 2.0) * u * pu - k * pu_m) / (k + q_ - 2.0);
                ps_m = ps; ps = ns;
                pu_m = pu; pu = nu;
                acc += coeff_[n] * ps * pu;
            }
        }
        return acc;
    }

    int truncation_degree() const { return int(coeff_.size()); }
    double tail_bound() const { return tail_bound_; }
    bool small_time_warning() const { return small_time_warning_; }
    int q() const { return q_; }
    double t() const { return t_; }

private:
    int q_;
    double t_;
    double prefactor_;
    std::vector<double> coeff_;  // prefactor * e^{-n(n+q-2)t} N(q,n)
    double tail_bound_ = 0.0;
    bool small_time_warning_ = false;
};

inline double heat_kernel(int q, double t, double s, double u) {
    return HeatKernelEval(q, t)(s, u);
}

/// E Z_t = e^{-(q-1)t} for the height diffusion started at the north pole.
inline double mean_height(int q, double t) {
    if (q < 2 || t < 0.0) throw std::invalid_argument("mean_height: q >= 2, t >= 0");
    return std::exp(-(q - 1.0) * t);
}

/// int d^2(sigma, eta) alpha_eta(dsigma) = 2(1 - e^{-(q-1)t}).
inline double second_moment_gap(int q, double t) {
    return 2.0 * (1.0 - mean_height(q, t));
}

/// P(0 <= G <= u) for a standard normal G.
inline double normal_half_prob(double u) {
    return 0.5 * std::erf(u / std::sqrt(2.0));
}

/// Elementary upper bounds on F_{q,t}(x): reflection-principle branch,
/// its linearization, and the variational-distance ceiling 2.
inline double f_upper(int q, double t, double x) {
    (void)q;  // dimension-independent by the coupling argument
    if (x < 0.0 || x > 2.0) throw std::domain_error("f_upper: x outside [0,2]");
    if (t <= 0.0) throw std::domain_error("f_upper: t > 0 required");
    double arcsin_branch = 4.0 * normal_half_prob(std::asin(0.5 * x) / std::sqrt(2.0 * t));
    double linear_branch = std::sqrt(M_PI) * x / (2.0 * std::sqrt(t));
    return std::min({arcsin_branch, linear_branch, 2.0});
}

/// Closed form of int_{-1}^0 P_{2m+1}(q,s)(1-s^2)^{(q-3)/2} ds.
inline double odd_legendre_integral(int q, int m) {
    double v = 1.0;
    for (int i = 0; i <= m; ++i) v *= (2.0 * i - 1.0) / (q + 2.0 * i - 1.0);
    return (m % 2 == 0 ? 1.0 : -1.0) * v;
}

/// F_{q,t}(x) = 2(1 - 2 P^{x/2}(Z_t <= 0)) via the odd-degree Legendre series,
/// clamped to [0,2]. Matches the quadrature of the reflection-coupling formula.
inline double f_series(int q, double t, double x, double tol = 1e-12, int min_degree = 8) {
    if (x < 0.0 || x > 2.0) throw std::domain_error("f_series: x outside [0,2]");
    if (t <= 0.0) throw std::domain_error("f_series: t > 0 required");
    double prefactor = 1.0 / sphere_height_mass(q);
    double acc = 0.0;
    for (int m = 0;; ++m) {
        int n = 2 * m + 1;
        double mag = prefactor * std::exp(-double(n) * (n + q - 2.0) * t) *
                     double(harmonic_dim(q, n));
        if (n >= min_degree && mag < tol) break;
        if (n > 4096) throw std::runtime_error("f_series: truncation degree exceeded");
        acc += -4.0 * mag * legendre(q, n, 0.5 * x) * odd_legendre_integral(q, m);
    }
    return std::clamp(acc, 0.0, 2.0);
}

struct ThresholdReport {
    double a = 0.0;          // sup_i sum_j e^{|J_ij|} |J_ij|
    double t_star = 0.0;     // +inf when 2 a^2 <= 1
    bool finite = true;
    double margin = 0.0;     // 1 - sqrt(2) a (1 - e^{-(q-1)t})^{1/2} at queried t
    int q = 2;

    double margin_at(double t) const {
        return 1.0 - std::sqrt(2.0) * a * std::sqrt(1.0 - std::exp(-(q - 1.0) * t));
    }
};

inline double interaction_row_sup(const Eigen::MatrixXd& J) {
    double a = 0.0;
    for (int i = 0; i < J.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < J.cols(); ++j) s += std::exp(std::abs(J(i, j))) * std::abs(J(i, j));
        a = std::max(a, s);
    }
    return a;
}

/// Largest t with sqrt(2) a (1 - e^{-(q-1)t})^{1/2} < 1.
inline ThresholdReport gibbs_time_threshold(const Eigen::MatrixXd& J, int q) {
    if (q < 2) throw std::invalid_argument("gibbs_time_threshold: q >= 2");
    ThresholdReport r;
    r.q = q;
    r.a = interaction_row_sup(J);
    if (2.0 * r.a * r.a <= 1.0) {
        r.finite = false;
        r.t_star = std::numeric_limits<double>::infinity();
    } else {
        r.t_star = -std::log(1.0 - 1.0 / (2.0 * r.a * r.a)) / (q - 1.0);
    }
    return r;
}

enum class BarQBranch { Scaled, Ceiling };

struct BarQMatrix {
    Eigen::MatrixXd values;                       // bar Q_ij(t)
    Eigen::MatrixXd scaled_branch;                // sqrt(pi/t) Q_ij(t)
    Eigen::MatrixXd ceiling_branch;               // e^{4 sum_l |J_jl|} - 1
    std::vector<std::vector<BarQBranch>> active;  // which side of the min won
    Eigen::MatrixXd d_bar;                        // Neumann series of bar C(t)
    double margin = 0.0;
};

/// bar Q_ij(t) = (1/2) min{ sqrt(pi/t) Q_ij(t), e^{4 sum_l |J_jl|} - 1 } with
/// Q_ij(t) = 8 e^{4 sup_i sum_j |J_ij|} sum_k |J_ik| bar D_kj(t) and
/// bar D(t) the Neumann series of bar C_ij(t) = sqrt(2) e^{|J_ij|}|J_ij| (1-e^{-(q-1)t})^{1/2}.
inline BarQMatrix bar_q_matrix(const Eigen::MatrixXd& J, int q, double t) {
    if (t <= 0.0) throw std::domain_error("bar_q_matrix: t > 0 required");
    int n = int(J.rows());
    ThresholdReport thr = gibbs_time_threshold(J, q);
    double margin = thr.margin_at(t);
    if (margin <= 0.0)
        throw CertificateError("bar_q_matrix: outside certified region", margin);

    double lam = std::sqrt(1.0 - std::exp(-(q - 1.0) * t));
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A(i, j) = std::exp(std::abs(J(i, j))) * std::abs(J(i, j));
    Eigen::MatrixXd barC = std::sqrt(2.0) * lam * A;
    NeumannSeries ns = neumann_series(barC);

    double sup_row = 0.0;
    for (int i = 0; i < n; ++i) sup_row = std::max(sup_row, J.row(i).cwiseAbs().sum());
    double outer = 8.0 * std::exp(4.0 * sup_row);

    BarQMatrix r;
    r.margin = margin;
    r.d_bar = ns.D;
    r.values = Eigen::MatrixXd::Zero(n, n);
    r.scaled_branch = Eigen::MatrixXd::Zero(n, n);
    r.ceiling_branch = Eigen::MatrixXd::Zero(n, n);
    r.active.assign(n, std::vector<BarQBranch>(n, BarQBranch::Ceiling));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double qij = 0.0;
            for (int k = 0; k < n; ++k)
                if (k != i) qij += std::abs(J(i, k)) * ns.D(k, j);
            qij *= outer;
            double scaled = std::sqrt(M_PI / t) * qij;
            double ceiling = std::exp(4.0 * J.row(j).cwiseAbs().sum()) - 1.0;
            r.scaled_branch(i, j) = scaled;
            r.ceiling_branch(i, j) = ceiling;
            r.active[i][j] = scaled <= ceiling ? BarQBranch::Scaled : BarQBranch::Ceiling;
            r.values(i, j) = 0.5 * std::min(scaled, ceiling);
        }
    return r;
}

}  // namespace gibbscert

#endif
