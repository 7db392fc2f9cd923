#ifndef GIBBSCERT_SIMULATE_HPP
#define GIBBSCERT_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gibbscert/model.hpp"
#include "gibbscert/rng.hpp"
#include "gibbscert/rotator.hpp"
#include "gibbscert/two_layer.hpp"

namespace gibbscert {

struct EmpiricalEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

struct SdeConfig {
    double dt = 1e-3;

    void validate(double horizon) const {
        if (dt <= 0.0) throw std::invalid_argument("SdeConfig: dt must be positive");
        if (horizon > 0.0 && dt >= horizon && dt != horizon)
            throw std::invalid_argument("SdeConfig: dt >= horizon");
    }
};

namespace detail {

inline EmpiricalEstimate summarize(const std::vector<double>& xs, const RngSpec& rng) {
    if (xs.size() < 2) throw std::invalid_argument("EmpiricalEstimate: need n >= 2");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = ss / double(xs.size() - 1);
    EmpiricalEstimate e;
    e.mean = mean;
    e.se = std::sqrt(var / double(xs.size()));
    e.n = xs.size();
    e.seed = rng.seed;
    e.stream = rng.stream;
    return e;
}

// One Euler-Maruyama step of dZ = -(q-1) Z dt + sqrt(2(1-Z^2)) dB, clamped.
inline double em_step(int q, double z, double dt, double g) {
    double diff = 2.0 * std::max(0.0, 1.0 - z * z);
    double zn = z - (q - 1.0) * z * dt + std::sqrt(diff * dt) * g;
    return std::clamp(zn, -1.0, 1.0);
}

}  // namespace detail

/// Monte Carlo estimate of E Z_t for the height diffusion started at z0.
inline EmpiricalEstimate simulate_height(int q, double z0, double t, const SdeConfig& cfg,
                                         const RngSpec& rng, std::size_t n_paths) {
    if (q < 2) throw std::invalid_argument("simulate_height: q >= 2");
    if (z0 < -1.0 || z0 > 1.0) throw std::invalid_argument("simulate_height: z0 in [-1,1]");
    if (t < 0.0) throw std::invalid_argument("simulate_height: t >= 0");
    if (t == 0.0) {
        EmpiricalEstimate e;
        e.mean = z0;
        e.se = 0.0;
        e.n = n_paths;
        e.seed = rng.seed;
        e.stream = rng.stream;
        return e;
    }
    if (cfg.dt > t) throw std::invalid_argument("simulate_height: dt exceeds horizon");
    std::size_t steps = std::size_t(std::ceil(t / cfg.dt - 1e-12));
    std::vector<double> zs(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        CounterRng r = rng.at_stream(p);
        double z = z0, elapsed = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            double h = std::min(cfg.dt, t - elapsed);
            z = detail::em_step(q, z, h, r.normal());
            elapsed += h;
        }
        zs[p] = z;
    }
    return detail::summarize(zs, rng);
}

/// P(T_0 >= t) for the diffusion started at height sin(phi0); crossings are
/// detected at step resolution only, which biases survival upward.
inline EmpiricalEstimate first_passage_prob(int q, double phi0, double t, const SdeConfig& cfg,
                                            const RngSpec& rng, std::size_t n_paths) {
    if (q < 2) throw std::invalid_argument("first_passage_prob: q >= 2");
    if (!(phi0 > 0.0 && phi0 < 1.5707963267948966))
        throw std::invalid_argument("first_passage_prob: phi0 in (0, pi/2)");
    if (t <= 0.0) throw std::invalid_argument("first_passage_prob: t > 0");
    if (cfg.dt > t) throw std::invalid_argument("first_passage_prob: dt exceeds horizon");
    std::size_t steps = std::size_t(std::ceil(t / cfg.dt - 1e-12));
    std::size_t survived = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        CounterRng r = rng.at_stream(p);
        double z = std::sin(phi0), elapsed = 0.0;
        bool alive = true;
        for (std::size_t s = 0; s < steps && alive; ++s) {
            double h = std::min(cfg.dt, t - elapsed);
            z = detail::em_step(q, z, h, r.normal());
            elapsed += h;
            if (z <= 0.0) alive = false;
        }
        if (alive) ++survived;
    }
    double phat = double(survived) / double(n_paths);
    EmpiricalEstimate e;
    e.mean = phat;
    e.se = std::sqrt(std::max(0.0, phat * (1.0 - phat)) / double(n_paths));
    e.n = n_paths;
    e.seed = rng.seed;
    e.stream = rng.stream;
    return e;
}

struct SampleSet {
    std::vector<Eigen::MatrixXd> sphere_sweeps;       // snapshot per recorded sweep, n x q
    std::vector<std::vector<int>> discrete_sweeps;    // snapshot per recorded sweep
    double acceptance = 1.0;
    bool low_acceptance_warning = false;
};

namespace detail {

inline Eigen::VectorXd uniform_sphere(int q, CounterRng& r) {
    Eigen::VectorXd v(q);
    double norm2;
    do {
        for (int k = 0; k < q; ++k) v[k] = r.normal();
        norm2 = v.squaredNorm();
    } while (norm2 <= 0.0);
    return v / std::sqrt(norm2);
}

}  // namespace detail

/// Single-site heat-bath sweeps. Sphere sites sample the tilted density
/// exp(sigma . h_i) with h_i the local field sum_j J_ij sigma_j, by rejection
/// from the uniform measure with envelope e^{|h_i|}.
inline SampleSet heat_bath_sampler(const InteractionModel& m, std::size_t sweeps,
                                   std::size_t burn_in, const RngSpec& rng) {
    SampleSet out;
    int n = m.graph.n;
    if (m.space.kind == SingleSpinSpace::Kind::Sphere) {
        int q = m.space.q;
        CounterRng r = rng.at_stream(0);
        Eigen::MatrixXd state(n, q);
        for (int i = 0; i < n; ++i) state.row(i) = detail::uniform_sphere(q, r).transpose();
        std::uint64_t proposals = 0, accepts = 0;
        for (std::size_t sw = 0; sw < burn_in + sweeps; ++sw) {
            for (int i = 0; i < n; ++i) {
                Eigen::VectorXd h = Eigen::VectorXd::Zero(q);
                for (int j : m.graph.neighbors[i]) h += m.J(i, j) * state.row(j).transpose();
                double hn = h.norm();
                while (true) {
                    ++proposals;
                    Eigen::VectorXd cand = detail::uniform_sphere(q, r);
                    double logacc = cand.dot(h) - hn;
                    if (std::log(std::max(r.uniform01(), 1e-300)) < logacc) {
                        state.row(i) = cand.transpose();
                        ++accepts;
                        break;
                    }
                }
            }
            if (sw >= burn_in) out.sphere_sweeps.push_back(state);
        }
        out.acceptance = proposals > 0 ? double(accepts) / double(proposals) : 1.0;
        out.low_acceptance_warning = out.acceptance < 1e-3;
    } else {
        int atoms = m.space.atom_count();
        CounterRng r = rng.at_stream(0);
        std::vector<int> state(n);
        for (int i = 0; i < n; ++i) state[i] = int(r.uniform01() * atoms) % atoms;
        std::vector<double> w(atoms);
        for (std::size_t sw = 0; sw < burn_in + sweeps; ++sw) {
            for (int i = 0; i < n; ++i) {
                double wmax = -1e300;
                for (int a = 0; a < atoms; ++a) {
                    double e = std::log(std::max(m.apriori.weight(a), 1e-300));
                    for (int j : m.graph.neighbors[i]) e -= m.phi(i, j, a, state[j]);
                    w[a] = e;
                    wmax = std::max(wmax, e);
                }
                double total = 0.0;
                for (int a = 0; a < atoms; ++a) {
                    w[a] = std::exp(w[a] - wmax);
                    total += w[a];
                }
                double u = r.uniform01() * total, acc = 0.0;
                int pick = atoms - 1;
                for (int a = 0; a < atoms; ++a) {
                    acc += w[a];
                    if (u <= acc) {
                        pick = a;
                        break;
                    }
                }
                state[i] = pick;
            }
            if (sw >= burn_in) out.discrete_sweeps.push_back(state);
        }
    }
    return out;
}

/// Exact single-site conditional kernel of the transformed (second-layer)
/// system on a small discrete model, by full enumeration of the first layer.
inline DiscreteMeasure exact_transformed_kernel(const InteractionModel& m,
                                                const DiscreteChannel& ch, int site,
                                                const std::vector<int>& eta,
                                                double budget = 1e7) {
    if (!m.discrete()) throw std::invalid_argument("exact_transformed_kernel: discrete only");
    if (ch.first_atoms() != m.space.atom_count())
        throw std::invalid_argument("exact_transformed_kernel: channel/model mismatch");
    int n = m.graph.n;
    if (int(eta.size()) != n)
        throw std::invalid_argument("exact_transformed_kernel: eta size mismatch");
    int atoms = m.space.atom_count();
    int atoms2 = ch.second_atoms();
    double work = atoms2;
    for (int v = 0; v < n; ++v) {
        work *= atoms;
        if (work > budget) throw std::runtime_error("exact_transformed_kernel: budget exceeded");
    }
    std::vector<double> num(atoms2, 0.0);
    std::vector<int> sigma(n, 0);
    while (true) {
        double h = 0.0;
        for (const auto& e : m.graph.edges) h += m.phi(e.first, e.second, sigma[e.first], sigma[e.second]);
        double w = std::exp(-h);
        for (int v = 0; v < n; ++v) {
            w *= m.apriori.weight(sigma[v]);
            if (v != site) w *= ch.k(sigma[v], eta[v]);
        }
        for (int b = 0; b < atoms2; ++b)
            num[b] += w * ch.k(sigma[site], b) * ch.alpha_prime[b];
        int v = 0;
        for (; v < n; ++v) {
            if (++sigma[v] < atoms) break;
            sigma[v] = 0;
        }
        if (v == n) break;
    }
    DiscreteMeasure out{num};
    out.normalize();
    return out;
}

/// Exact single-site marginal of the first-layer Gibbs measure by enumeration.
inline DiscreteMeasure exact_site_marginal(const InteractionModel& m, int site,
                                           double budget = 1e7) {
    if (!m.discrete()) throw std::invalid_argument("exact_site_marginal: discrete only");
    int n = m.graph.n;
    int atoms = m.space.atom_count();
    double work = 1.0;
    for (int v = 0; v < n; ++v) {
        work *= atoms;
        if (work > budget) throw std::runtime_error("exact_site_marginal: budget exceeded");
    }
    std::vector<double> num(atoms, 0.0);
    std::vector<int> sigma(n, 0);
    while (true) {
        double h = 0.0;
        for (const auto& e : m.graph.edges) h += m.phi(e.first, e.second, sigma[e.first], sigma[e.second]);
        double w = std::exp(-h);
        for (int v = 0; v < n; ++v) w *= m.apriori.weight(sigma[v]);
        num[sigma[site]] += w;
        int v = 0;
        for (; v < n; ++v) {
            if (++sigma[v] < atoms) break;
            sigma[v] = 0;
        }
        if (v == n) break;
    }
    DiscreteMeasure out{num};
    out.normalize();
    return out;
}

struct QuadratureEstimate {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// Posterior metric of the heat-kernel channel at chordal distance x, with a
/// node-doubling error estimate.
inline QuadratureEstimate empirical_posterior_metric(const HeatKernelChannel& ch, double x) {
    if (ch.t <= 1e-8) throw std::domain_error("empirical_posterior_metric: t below kernel floor");
    QuadratureEstimate e;
    double coarse = sphere_posterior_metric(ch.q, ch.t, x, ch.quad_nodes);
    e.value = sphere_posterior_metric(ch.q, ch.t, x, 2 * ch.quad_nodes);
    e.error_estimate = std::abs(e.value - coarse);
    return e;
}

inline QuadratureEstimate empirical_posterior_metric(const HeatKernelChannel& ch,
                                                     const Eigen::VectorXd& eta1,
                                                     const Eigen::VectorXd& eta2) {
    return empirical_posterior_metric(ch, (eta1 - eta2).norm());
}

}  // namespace gibbscert

#endif
