#include <doctest.h>

#include <sstream>

#include "cool/experiment.hpp"

using namespace cool;

namespace {

ExperimentConfig parse_ok(const std::string& text) {
    auto parsed = parse_config(text);
    if (auto* errors = std::get_if<std::vector<std::string>>(&parsed)) {
        for (const auto& e : *errors) MESSAGE(e);
        FAIL("config rejected");
    }
    return std::get<ExperimentConfig>(parsed);
}

std::vector<std::string> parse_errors(const std::string& text) {
    auto parsed = parse_config(text);
    REQUIRE(std::holds_alternative<std::vector<std::string>>(parsed));
    return std::get<std::vector<std::string>>(parsed);
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    for (const auto& e : errors) {
        if (e.find(needle) != std::string::npos) return true;
    }
    return false;
}

std::string csv_of(const ExperimentConfig& c, unsigned threads = 1) {
    std::ostringstream out;
    write_csv(run_experiment(c, threads), out);
    return out.str();
}

}  // namespace

TEST_CASE("figure2a config parses with defaults") {
    const auto c = parse_ok("experiment: figure2a\nworld: {n: 10, K: 90}\n");
    CHECK(c.kind == ExperimentKind::Figure2a);
    CHECK(c.T == 500);
    CHECK(c.seeds.size() == 20);
    CHECK(c.learners == std::vector<LearnerKind>{LearnerKind::IOL, LearnerKind::CoOL});
    CHECK(c.ordering.kind == OrderingKind::Random);
    CHECK(plan_runs(c).size() == 40);
}

TEST_CASE("config errors are all reported") {
    const auto errors = parse_errors(
        "experiment: sweep_alpha\n"
        "world: {n: 10, K: 80}\n"
        "alpha_grid: [0, 1.5]\n"
        "seeds: [1, 1]\n"
        "bogus: 3\n");
    CHECK(mentions(errors, "alpha out of [0,1]"));
    CHECK(mentions(errors, "K = 80"));
    CHECK(mentions(errors, "n^2 - n = 90"));
    CHECK(mentions(errors, "distinct"));
    CHECK(mentions(errors, "bogus"));
    CHECK(errors.size() >= 4);

    CHECK(mentions(parse_errors("experiment: sweep_beta\nbeta_grid: []\n"), "beta_grid"));
    CHECK(mentions(parse_errors("experiment: nope\n"), "unknown kind"));
    CHECK(mentions(parse_errors("T: [\n"), "YAML"));
    CHECK(mentions(parse_errors("experiment: figure2a\nlearners: [OL]\n"), "single"));
    const auto missing = load_config("/nonexistent/cfg.yaml");
    REQUIRE(missing.index() == 1);
    CHECK(mentions(std::get<1>(missing), "cannot read"));
}

TEST_CASE("zero rounds give a header-only CSV") {
    auto c = parse_ok("experiment: figure2a\nT: 0\nseeds: [0, 1]\n");
    CHECK(csv_of(c) == "experiment,learner,seed,t,regret,utility_gain,projected,gap,proj_time_us\n");
}

TEST_CASE("CSV is reproducible and independent of the thread count") {
    auto c = parse_ok(
        "experiment: sweep_alpha\nT: 40\nworld: {n: 4}\nseeds: [3, 4]\n"
        "alpha_grid: [0, 0.5]\ntiming: false\n");
    const auto a = csv_of(c, 1);
    CHECK(a == csv_of(c, 1));
    CHECK(a == csv_of(c, 3));

    // groups: IOL, CoOL[alpha=0], CoOL[alpha=0.5]; two seeds plus a mean, 40 rows each
    std::istringstream in(a);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 1 + 3 * 3 * 40);
    CHECK(a.find("sweep_alpha,CoOL[alpha=0.5],mean,40,") != std::string::npos);
}

TEST_CASE("alpha zero reproduces the independent learner") {
    auto c = parse_ok("experiment: sweep_alpha\nT: 60\nworld: {n: 4}\nseeds: [5]\nalpha_grid: [0]\n");
    const auto res = run_experiment(c);
    REQUIRE(res.runs.size() == 2);
    CHECK(res.runs[0].regret == res.runs[1].regret);
}

TEST_CASE("market experiment runs") {
    auto c = parse_ok("experiment: market\nseeds: [0]\nT: 50\n");
    CHECK(c.market.r == 40);
    const auto res = run_experiment(c);
    CHECK(res.certificates_hold());
    std::ostringstream report;
    write_report(res, report);
    CHECK(report.str().find("certificate violations: 0") != std::string::npos);
}
