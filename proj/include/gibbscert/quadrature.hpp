#ifndef GIBBSCERT_QUADRATURE_HPP
#define GIBBSCERT_QUADRATURE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gibbscert {

/// Gauss-Jacobi rule for the weight (1-x^2)^alpha on [-1,1].
///
/// Sphere integrals reduce to this weight with alpha = (q-3)/2 after
/// rotating the reference direction to the pole.
struct GaussJacobi {
    std::vector<double> nodes;
    std::vector<double> weights;  // sum equals the total mass of the weight
    double total_mass = 0.0;

    GaussJacobi(int n, double alpha) {
        if (n < 1) throw std::invalid_argument("GaussJacobi: need n >= 1 nodes");
        if (alpha <= -1.0) throw std::invalid_argument("GaussJacobi: alpha must be > -1");
        // Golub-Welsch on the symmetric Jacobi (a = b = alpha) recurrence.
        const double a = alpha, b = alpha;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            double beta2;
            if (k == 1) {
                beta2 = 4.0 * (a + 1.0) * (b + 1.0) /
                        ((a + b + 2.0) * (a + b + 2.0) * (a + b + 3.0));
            } else {
                const double m = k, s = a + b;
                beta2 = 4.0 * m * (m + a) * (m + b) * (m + s) /
                        ((2.0 * m + s) * (2.0 * m + s) * (2.0 * m + s + 1.0) *
                         (2.0 * m + s - 1.0));
            }
            T(k, k - 1) = T(k - 1, k) = std::sqrt(beta2);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        // mu0 = int_{-1}^{1} (1-x^2)^alpha dx = sqrt(pi) Gamma(alpha+1) / Gamma(alpha+3/2)
        total_mass = std::sqrt(M_PI) *
                     std::exp(std::lgamma(alpha + 1.0) - std::lgamma(alpha + 1.5));
        nodes.resize(n);
        weights.resize(n);
        for (int k = 0; k < n; ++k) {
            nodes[k] = es.eigenvalues()(k);
            const double v0 = es.eigenvectors()(0, k);
            weights[k] = total_mass * v0 * v0;
        }
    }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(nodes[k]);
        return s;
    }
};

/// Total mass of (1-u^2)^{(q-3)/2} on [-1,1]; the heat-kernel prefactor is its inverse.
inline double sphere_height_mass(int q) {
    return std::sqrt(M_PI) *
           std::exp(std::lgamma((q - 1.0) / 2.0) - std::lgamma(q / 2.0));
}

}  // namespace gibbscert

#endif
