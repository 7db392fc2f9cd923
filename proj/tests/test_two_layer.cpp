#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "gibbscert/two_layer.hpp"

using namespace gibbscert;

namespace {

DiscreteChannel random_channel(std::mt19937& rng, int atoms) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(atoms, atoms);
    for (int a = 0; a < atoms; ++a) {
        double row = 0.0;
        for (int b = 0; b < atoms; ++b) {
            p(a, b) = u(rng);
            row += p(a, b);
        }
        p.row(a) /= row;
    }
    std::vector<double> alpha(atoms);
    double s = 0.0;
    for (int a = 0; a < atoms; ++a) {
        alpha[a] = u(rng);
        s += alpha[a];
    }
    for (double& w : alpha) w /= s;
    return DiscreteChannel::from_conditional(p, alpha);
}

}  // namespace

TEST_CASE("posterior measures") {
    SECTION("independent channel returns alpha") {
        auto ch = DiscreteChannel::independent(4);
        for (int eta = 0; eta < 4; ++eta) {
            auto post = posterior_measure(ch, eta);
            for (int a = 0; a < 4; ++a) REQUIRE(post.p[a] == Catch::Approx(0.25).margin(1e-14));
        }
    }
    SECTION("identity channel returns point masses") {
        auto ch = DiscreteChannel::identity(3);
        for (int eta = 0; eta < 3; ++eta) {
            auto post = posterior_measure(ch, eta);
            for (int a = 0; a < 3; ++a)
                REQUIRE(post.p[a] == Catch::Approx(a == eta ? 1.0 : 0.0).margin(1e-14));
        }
    }
    SECTION("heat kernel posterior flattens as t grows") {
        HeatKernelChannel ch{3, 25.0, 128};
        auto g = posterior_measure(ch);
        REQUIRE(g.mass() == Catch::Approx(1.0).margin(1e-8));
        double c = 1.0 / sphere_height_mass(3);
        for (double d : g.density) REQUIRE(d == Catch::Approx(c).margin(1e-10));
    }
    SECTION("posteriors normalize") {
        std::mt19937 rng(3);
        for (int it = 0; it < 20; ++it) {
            auto ch = random_channel(rng, 5);
            for (int eta = 0; eta < 5; ++eta) {
                auto post = posterior_measure(ch, eta);
                double s = 0.0;
                for (double w : post.p) s += w;
                REQUIRE(s == Catch::Approx(1.0).margin(1e-10));
            }
        }
    }
}

TEST_CASE("posterior metric") {
    SECTION("coincident arguments give zero") {
        std::mt19937 rng(5);
        auto ch = random_channel(rng, 6);
        for (int eta = 0; eta < 6; ++eta) REQUIRE(posterior_metric(ch, eta, eta) == 0.0);
        REQUIRE(sphere_posterior_metric(2, 0.4, 0.0) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("independent channel degenerates") {
        auto ch = DiscreteChannel::independent(4);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                REQUIRE(posterior_metric(ch, a, b) == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("pseudo-metric axioms") {
        std::mt19937 rng(9);
        for (int it = 0; it < 20; ++it) {
            auto ch = random_channel(rng, 5);
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b) {
                    REQUIRE(posterior_metric(ch, a, b) ==
                            Catch::Approx(posterior_metric(ch, b, a)).margin(1e-14));
                    for (int c = 0; c < 5; ++c)
                        REQUIRE(posterior_metric(ch, a, c) <=
                                posterior_metric(ch, a, b) + posterior_metric(ch, b, c) + 1e-12);
                }
        }
    }
    SECTION("heat kernel bounded by the linear branch") {
        for (double t : {0.2, 0.5, 1.0})
            for (double x : {0.1, 0.5, 1.0, 1.7}) {
                double d = sphere_posterior_metric(2, t, x);
                REQUIRE(d <= std::sqrt(M_PI) * x / (2.0 * std::sqrt(t)) + 1e-6);
                REQUIRE(d >= 0.0);
                REQUIRE(d <= 2.0 + 1e-9);
            }
    }
}

TEST_CASE("conditional dobrushin matrix") {
    SECTION("zero potential") {
        auto m = make_ising_model(Graph::path(3), 0.0);
        auto cb = conditional_dobrushin_matrix(m, DiscreteChannel::identity(2));
        REQUIRE(cb.c == 0.0);
    }
    SECTION("rotator closed form values") {
        auto m = make_rotator_model(Graph::path(2), 2, 1.0);
        auto hot = conditional_dobrushin_matrix(m, HeatKernelChannel{2, 0.1});
        REQUIRE(hot.C(0, 1) == Catch::Approx(1.1858).margin(2e-4));
        REQUIRE(hot.c >= 1.0);
        auto cold = conditional_dobrushin_matrix(m, HeatKernelChannel{2, 0.01});
        REQUIRE(cold.C(0, 1) == Catch::Approx(0.3835).margin(2e-4));
        REQUIRE(cold.c < 1.0);
    }
    SECTION("monotone in t") {
        auto m = make_rotator_model(Graph::path(3), 3, 0.4);
        double prev = 0.0;
        for (double t : {0.01, 0.1, 0.5, 1.0, 3.0}) {
            auto cb = conditional_dobrushin_matrix(m, HeatKernelChannel{3, t});
            REQUIRE(cb.c >= prev - 1e-14);
            prev = cb.c;
        }
    }
    SECTION("sup over eta dominates each fixed posterior") {
        std::mt19937 rng(13);
        for (int it = 0; it < 15; ++it) {
            auto g = Graph::path(3);
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(3, 3);
            std::uniform_real_distribution<double> u(-0.8, 0.8);
            for (auto [a, b] : g.edges) J(a, b) = J(b, a) = u(rng);
            auto m = make_discretized_circle_model(g, J, 5);
            auto ch = random_channel(rng, 5);
            auto cb = conditional_dobrushin_matrix(m, ch);
            for (int eta = 0; eta < 5; ++eta) {
                AprioriMeasure post;
                post.weights = posterior_measure(ch, eta).p;
                for (int i = 0; i < 3; ++i)
                    for (int j : g.neighbors[i])
                        REQUIRE(cb.B(i, j) >= dev(m, i, j, post) - 1e-12);
            }
        }
    }
}

TEST_CASE("q matrix") {
    SECTION("zero potential") {
        auto m = make_ising_model(Graph::path(3), 0.0);
        auto cb = conditional_dobrushin_matrix(m, DiscreteChannel::identity(2));
        auto q = q_matrix(m, cb);
        REQUIRE(q.values.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("single edge hand composition") {
        double J = 0.25;
        auto m = make_ising_model(Graph::path(2), J);
        auto cb = conditional_dobrushin_matrix(m, DiscreteChannel::identity(2));
        auto q = q_matrix(m, cb);
        NeumannSeries ns = neumann_series(cb.C);
        double expect = 4.0 * std::exp(2.0 * J) * (2.0 * J * ns.D(1, 1)) * std::exp(2.0 * J);
        REQUIRE(q.values(0, 1) == Catch::Approx(expect).margin(1e-12));
        REQUIRE(q.values(0, 0) == 0.0);
    }
    SECTION("coarse form dominates the per-edge form") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        for (int it = 0; it < 20; ++it) {
            Graph g = (it % 2) ? Graph::path(4) : Graph(3, {{0, 1}, {1, 2}, {0, 2}});
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(g.n, g.n);
            for (auto [a, b] : g.edges) J(a, b) = J(b, a) = u(rng);
            auto m = make_ising_model(g, J);
            auto cb = conditional_dobrushin_matrix(m, random_channel(rng, 2));
            if (cb.c >= 1.0) continue;
            auto tight = q_matrix(m, cb, QProvenance::ExactEq);
            auto coarse = q_matrix(m, cb, QProvenance::CoarseBound);
            for (int i = 0; i < g.n; ++i)
                for (int j = 0; j < g.n; ++j)
                    REQUIRE(tight.values(i, j) <= coarse.values(i, j) + 1e-12);
        }
    }
}

TEST_CASE("continuity certificate") {
    SECTION("zero potential certified with zero Q") {
        auto m = make_ising_model(Graph::path(3), 0.0);
        auto rep = continuity_certificate(m, Channel{DiscreteChannel::identity(2)});
        REQUIRE(rep.certified);
        REQUIRE(rep.q.has_value());
        REQUIRE(rep.q->values.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("rotator below threshold certified, above not") {
        auto m = make_rotator_model(Graph::torus(3, 3), 2, 0.2);
        auto thr = gibbs_time_threshold(m.potential.J, 2);
        REQUIRE(thr.finite);
        auto good = continuity_certificate(m, Channel{HeatKernelChannel{2, 0.9 * thr.t_star}});
        REQUIRE(good.certified);
        auto bad = continuity_certificate(m, Channel{HeatKernelChannel{2, 1.5 * thr.t_star}});
        REQUIRE_FALSE(bad.certified);
        REQUIRE(bad.c_bar >= 1.0);
        REQUIRE_FALSE(bad.q.has_value());
    }
}

TEST_CASE("fuzzy check") {
    auto m = make_rotator_model(Graph::torus(3, 3), 2, 0.3);
    double a = interaction_row_sup(m.potential.J);
    SECTION("singleton cells certify trivially") {
        FuzzyPartition p{std::vector<double>(8, 0.0)};
        auto r = fuzzy_check(m, p);
        REQUIRE(r.lhs == 0.0);
        REQUIRE(r.certified);
    }
    SECTION("threshold at rho = 1/a") {
        for (double f : {0.2, 0.8, 0.999, 1.001, 1.5}) {
            FuzzyPartition p{{f / a}};
            auto r = fuzzy_check(m, p);
            REQUIRE(r.lhs == Catch::Approx(f).margin(1e-10));
            REQUIRE(r.certified == (f < 1.0));
        }
    }
    SECTION("zero potential always certifies") {
        auto z = make_rotator_model(Graph::path(3), 2, 0.0);
        auto r = fuzzy_check(z, FuzzyPartition{{123.0}});
        REQUIRE(r.certified);
    }
}

TEST_CASE("decimation") {
    SECTION("zero potential") {
        auto m = make_ising_model(Graph::path(4), 0.0);
        auto rep = decimation_report(m, {0, 2});
        REQUIRE(rep.certified);
        REQUIRE(rep.image_dobrushin_bound->values.cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(rep.d_prime_offdiag == 2.0);
    }
    SECTION("weakly coupled chain certified, observed rows vanish") {
        auto m = make_ising_model(Graph::path(5), 0.05);
        auto rep = decimation_report(m, {1, 3});
        REQUIRE(rep.certified);
        REQUIRE(rep.c_bar_matrix.row(1).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(rep.c_bar_matrix.row(3).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(rep.c_bar_matrix.row(0).sum() > 0.0);
    }
}
