#ifndef GIBBSCERT_MEASURE_HPP
#define GIBBSCERT_MEASURE_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gibbscert {

/// Probability weights over a finite set of atoms.
struct DiscreteMeasure {
    std::vector<double> p;

    std::size_t size() const { return p.size(); }

    void validate(double tol = 1e-12) const {
        double s = 0.0;
        for (double w : p) {
            if (w < 0.0) throw std::invalid_argument("DiscreteMeasure: negative weight");
            s += w;
        }
        if (std::abs(s - 1.0) > tol)
            throw std::invalid_argument("DiscreteMeasure: weights do not sum to 1");
    }

    void normalize() {
        double s = std::accumulate(p.begin(), p.end(), 0.0);
        if (s <= 0.0) throw std::runtime_error("DiscreteMeasure: zero normalizer");
        for (double& w : p) w /= s;
    }

    static DiscreteMeasure uniform(std::size_t n) {
        return DiscreteMeasure{std::vector<double>(n, 1.0 / double(n))};
    }

    static DiscreteMeasure point_mass(std::size_t n, std::size_t atom) {
        DiscreteMeasure m{std::vector<double>(n, 0.0)};
        m.p[atom] = 1.0;
        return m;
    }
};

/// sup_{|f|<=1} |nu1(f) - nu2(f)| = sum_a |p_a - q_a|, in [0,2].
/// Dobrushin-matrix entries use half of this value; the factor is kept
/// explicit at the call sites.
inline double variational_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("variational_distance: mismatched supports");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a.p[k] - b.p[k]);
    return s;
}

/// Measure on a common quadrature grid: density values against the grid's
/// base weights. Used for sphere posteriors in the height coordinate.
struct GridMeasure {
    std::vector<double> density;        // h(u_k), relative to base weights
    std::vector<double> base_weights;   // quadrature weights (include the Jacobi weight)

    double mass() const {
        double s = 0.0;
        for (std::size_t k = 0; k < density.size(); ++k) s += base_weights[k] * density[k];
        return s;
    }
};

inline double variational_distance(const GridMeasure& a, const GridMeasure& b) {
    if (a.density.size() != b.density.size())
        throw std::invalid_argument("variational_distance: mismatched grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.density.size(); ++k)
        s += a.base_weights[k] * std::abs(a.density[k] - b.density[k]);
    return s;
}

}  // namespace gibbscert

#endif
