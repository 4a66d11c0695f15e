#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cool/env.hpp"
#include "cool/learners.hpp"

namespace cool {

enum class ExperimentKind {
    Figure2a,
    Figure2b,
    Figure2c,
    SweepAlpha,
    SweepBeta,
    ProjectionRuntime,
    Market,
};

const char* to_string(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Figure2a;
    std::string name;  // experiment column; defaults to the kind
    std::int64_t T = 500;

    // Hemimetric world.
    std::size_t n = 10;
    std::size_t K = 90;
    double r = 10.0;
    double intra = 1.0;
    double inter = 9.0;

    std::vector<LearnerKind> learners;
    std::vector<std::uint64_t> seeds;
    OrderingPolicy ordering;

    LossSpec loss;
    std::optional<double> eta;        // default ||S|| / (2 ||g||)
    std::optional<double> init;       // default box midpoint
    std::optional<double> gradient_bound;

    // Schedule for CoOL / uw-CoOL outside the sweeps.
    ScheduleMode mode = ScheduleMode::Always;
    double c_alpha = 0.0;
    double alpha = 1.0;
    std::int64_t every_k = 1;
    double c_beta = 1.0;
    double beta = 1.0;  // 1 means exact projections
    std::vector<double> alpha_grid;
    std::vector<double> beta_grid;

    MarketScenario market;

    bool timing = true;
    std::filesystem::path output = "results.csv";

    std::string label() const { return name.empty() ? to_string(kind) : name; }
};

/// Parsed config or every problem found in it.
using ConfigResult = std::variant<ExperimentConfig, std::vector<std::string>>;

ConfigResult parse_config(const std::string& yaml_text);
ConfigResult load_config(const std::filesystem::path& path);

/// Structural checks on an already-built config; empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// One learner configuration run under one seed.
struct RunSpec {
    std::string learner;  // CSV label, e.g. "CoOL" or "CoOL[alpha=0.1]"
    LearnerConfig config;
    std::uint64_t seed = 0;
};

struct RunOutcome {
    RunSpec spec;
    RunResult result;
    std::vector<double> regret;  // cumulative, per round
    std::vector<double> utility; // cumulative, per round
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<std::string> learners;  // group order
    std::vector<RunOutcome> runs;       // learner-major, then seed order

    bool certificates_hold() const;
    double mean_final_regret(const std::string& learner) const;
    double mean_final_utility(const std::string& learner) const;
    /// Median wall time in microseconds over projecting rounds of all seeds.
    double median_projection_us(const std::string& learner) const;
};

/// Learner/seed combinations the experiment runs, in output order.
std::vector<RunSpec> plan_runs(const ExperimentConfig& config);

/// Sees every projection of every run; must be thread-safe when threads > 1.
using RunObserver = std::function<void(const RunSpec&, std::int64_t t, const ProjectionResult&)>;

/// Runs every planned combination on up to `threads` threads. Output is
/// independent of the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1,
                                const RunObserver& observer = {});

void write_csv(const ExperimentResult& result, std::ostream& out);
void write_report(const ExperimentResult& result, std::ostream& out);

}  // namespace cool
