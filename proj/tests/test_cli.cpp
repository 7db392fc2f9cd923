#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "gibbscert/io.hpp"

using namespace gibbscert;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("GC_CLI");
    REQUIRE(p != nullptr);
    return p;
}

std::string fixture(const std::string& name) {
    const char* p = std::getenv("GC_FIXTURES");
    REQUIRE(p != nullptr);
    return (fs::path(p) / name).string();
}

fs::path fresh_out() {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() / ("gc_cli_out_" + std::to_string(++counter));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_raw(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

int run(const std::string& args) {
    return run_raw("\"" + cli_path() + "\" " + args + " >/dev/null 2>&1");
}

nlohmann::json report(const fs::path& out) {
    std::ifstream in(out / "report.json");
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("model file parsing") {
    SECTION("minimal pair") {
        auto pm = parse_model_file(fixture("ising_pair.model"));
        REQUIRE(pm.model.graph.n == 2);
        REQUIRE(pm.model.graph.is_edge(0, 1));
        REQUIRE(pm.model.J(0, 1) == 0.1);
        REQUIRE_FALSE(pm.channel.has_value());
    }
    SECTION("torus shorthand gives degree four") {
        auto pm = parse_model_file(fixture("torus_rotator.model"));
        REQUIRE(pm.model.graph.n == 9);
        for (int v = 0; v < 9; ++v) REQUIRE(pm.model.graph.neighbors[v].size() == 4);
        REQUIRE(pm.model.space.kind == SingleSpinSpace::Kind::Sphere);
    }
    SECTION("discrete channel attaches") {
        auto pm = parse_model_file(fixture("circle_channel.model"));
        REQUIRE(pm.channel.has_value());
        REQUIRE(std::holds_alternative<DiscreteChannel>(*pm.channel));
    }
    SECTION("negative channel time is a parse error") {
        REQUIRE_THROWS_AS(parse_model_file(fixture("bad_channel.model")), ParseError);
    }
    SECTION("field outside a section is a parse error") {
        REQUIRE_THROWS_AS(parse_model_file(fixture("bad_parse.model")), ParseError);
    }
}

TEST_CASE("csv and digest helpers") {
    SECTION("matrix round trip at printed precision") {
        std::mt19937 rng(31);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        Eigen::MatrixXd m(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = std::exp(u(rng));
        m(0, 1) = -m(0, 1);
        m(2, 3) = 0.0;
        auto csv = matrix_to_csv(m, vertex_labels(4));
        auto back = matrix_from_csv(csv);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) REQUIRE(back(i, j) == m(i, j));
    }
    SECTION("digest is stable, whitespace sensitive, 16 hex chars") {
        auto d1 = content_digest("[graph]\nvertices = 2\n");
        auto d2 = content_digest("[graph]\nvertices = 2\n");
        auto d3 = content_digest("[graph]\nvertices = 2 \n");
        REQUIRE(d1 == d2);
        REQUIRE(d1 != d3);
        REQUIRE(d1.size() == 16);
        REQUIRE(d1.find_first_not_of("0123456789abcdef") == std::string::npos);
    }
}

TEST_CASE("cli exit codes and artifacts") {
    SECTION("zero potential two-layer certifies with zero Q") {
        auto out = fresh_out();
        int rc = run("certify --model " + fixture("free_field.model") + " --out " + out.string());
        REQUIRE(rc == 0);
        auto rep = report(out);
        REQUIRE(rep["task"] == "certify");
        REQUIRE(rep["version"] == kVersion);
        REQUIRE(rep["results"]["certified"] == true);
        REQUIRE(rep.contains("input_digest"));
        REQUIRE(rep.contains("seed"));
        auto q = matrix_from_csv(read_file((out / "q_matrix.csv").string()));
        REQUIRE(q.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("single-layer certify writes dobrushin and neumann matrices") {
        auto out = fresh_out();
        int rc = run("certify --model " + fixture("ising_pair.model") + " --out " +
                     out.string() + " --flavor quadratic");
        REQUIRE(rc == 0);
        REQUIRE(fs::exists(out / "dobrushin.csv"));
        REQUIRE(fs::exists(out / "neumann.csv"));
        auto rep = report(out);
        REQUIRE(rep["results"]["flavor"] == "quadratic");
        REQUIRE(rep["results"]["c"].get<double>() < 1.0);
    }
    SECTION("rotator threshold value") {
        auto out = fresh_out();
        int rc = run("rotator-threshold --model " + fixture("torus_rotator.model") + " --out " +
                     out.string());
        REQUIRE(rc == 0);
        auto rep = report(out);
        REQUIRE(rep["results"]["finite"] == true);
        REQUIRE(rep["results"]["t_star"].get<double>() == Catch::Approx(0.7417).margin(1e-3));
    }
    SECTION("rotator qbar refuses beyond the threshold") {
        auto good = fresh_out();
        REQUIRE(run("rotator-qbar --model " + fixture("torus_rotator.model") + " --out " +
                    good.string() + " --t 0.3") == 0);
        REQUIRE(fs::exists(good / "q_bar.csv"));
        auto bad = fresh_out();
        REQUIRE(run("rotator-qbar --model " + fixture("torus_rotator.model") + " --out " +
                    bad.string() + " --t 2.0") == 2);
        auto rep = report(bad);
        REQUIRE(rep["results"]["certified"] == false);
        REQUIRE(rep["results"]["margin"].get<double>() <= 0.0);
    }
    SECTION("parse failures exit 1") {
        auto out = fresh_out();
        REQUIRE(run("certify --model " + fixture("bad_parse.model") + " --out " +
                    out.string()) == 1);
        REQUIRE(run("certify --model " + fixture("bad_channel.model") + " --out " +
                    out.string()) == 1);
        REQUIRE(run("certify --model /nonexistent.model --out " + out.string()) == 1);
        REQUIRE(run("no-such-subcommand") == 1);
    }
    SECTION("simulate reports mean near target") {
        auto out = fresh_out();
        int rc = run("simulate --q 3 --z0 1.0 --t 0.25 --paths 2000 --dt 0.002 --seed 99 --out " +
                     out.string());
        REQUIRE(rc == 0);
        auto rep = report(out);
        double mean = rep["results"]["mean"].get<double>();
        double se = rep["results"]["se"].get<double>();
        double target = rep["results"]["target"].get<double>();
        REQUIRE(rep["seed"] == 99);
        REQUIRE(mean == Catch::Approx(target).margin(3.0 * se + 0.05));
    }
    SECTION("oracle matches certify on the discrete pair") {
        auto out = fresh_out();
        REQUIRE(run("oracle --model " + fixture("ising_pair.model") + " --out " +
                    out.string()) == 0);
        auto C = matrix_from_csv(read_file((out / "exact_dobrushin.csv").string()));
        REQUIRE(C(0, 1) == Catch::Approx(std::tanh(0.1)).margin(1e-12));
    }
}

TEST_CASE("environment variable mirrors") {
    SECTION("environment supplies a default") {
        auto out = fresh_out();
        int rc = run_raw("GIBBSCERT_FLAVOR=quadratic \"" + cli_path() + "\" certify --model " +
                         fixture("ising_pair.model") + " --out " + out.string() +
                         " >/dev/null 2>&1");
        REQUIRE(rc == 0);
        REQUIRE(report(out)["results"]["flavor"] == "quadratic");
    }
    SECTION("explicit flag wins over the environment") {
        auto out = fresh_out();
        int rc = run_raw("GIBBSCERT_FLAVOR=quadratic \"" + cli_path() + "\" certify --model " +
                         fixture("ising_pair.model") + " --out " + out.string() +
                         " --flavor linear >/dev/null 2>&1");
        REQUIRE(rc == 0);
        REQUIRE(report(out)["results"]["flavor"] == "linear");
    }
    SECTION("GIBBSCERT_OUT is honoured") {
        auto out = fresh_out();
        int rc = run_raw("GIBBSCERT_OUT=" + out.string() + " \"" + cli_path() +
                         "\" certify --model " + fixture("ising_pair.model") +
                         " >/dev/null 2>&1");
        REQUIRE(rc == 0);
        REQUIRE(fs::exists(out / "report.json"));
    }
}
