#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cool/constraints.hpp"
#include "cool/core.hpp"

namespace cool {

enum class ScheduleMode { Never, Always, Bernoulli, EveryKth };
enum class AccuracyRule { Exact, Corollary };

/// Decides on which rounds CoOL projects (xi^t) and how accurately (delta^t).
struct ProjectionSchedule {
    ScheduleMode mode = ScheduleMode::Always;
    double alpha = 1.0;         // Bernoulli: alpha = c_alpha / sqrt(T)
    std::int64_t every_k = 1;   // EveryKth
    AccuracyRule accuracy = AccuracyRule::Exact;
    double c_alpha = 0.0;
    double c_beta = 0.0;
    double beta = 1.0;
    std::int64_t horizon = 0;
    std::uint64_t rng_seed = 0;

    static ProjectionSchedule never();
    static ProjectionSchedule always(AccuracyRule accuracy = AccuracyRule::Exact);
    static ProjectionSchedule bernoulli(double c_alpha, std::int64_t horizon, std::uint64_t seed);
    static ProjectionSchedule every(std::int64_t k);

    /// delta^t = c_beta (1 - beta)^2 sqrt(K / t) ||S||^2
    ProjectionSchedule& with_corollary_accuracy(double c_beta, double beta);

    void validate() const;

    /// delta^t for round t (1-based).
    double requested_accuracy(std::int64_t t, std::size_t problems, double set_norm) const;
};

enum class LearnerKind { OL, IOL, CoOL, UwCoOL };

const char* to_string(LearnerKind kind);

struct LearnerConfig {
    LearnerKind kind = LearnerKind::CoOL;
    double eta = 1.0;
    JointStructure structure;
    ProjectionSchedule schedule;
    JointWeights initial_weights;
    LossSpec loss;
    /// Upper bound on ||g^t||; the certificate's ||g_max||.
    double gradient_bound = 1.0;

    void validate() const;
};

/// eta = ||S_max|| / (2 ||g_max||), midpoint initial weights, and
/// ||g_max|| = loss.gradient_bound() * feature_bound.
LearnerConfig default_config(LearnerKind kind, JointStructure structure, LossSpec loss,
                             ProjectionSchedule schedule, double feature_bound = 1.0);

struct LearnerState {
    JointWeights weights;
    ObservationCounts counts;
    std::int64_t t = 0;
};

LearnerState initial_state(const LearnerConfig& config);

/// One OL step on block z: tau_z += 1, w_z -= eta / sqrt(tau_z) * g, clamp to the box.
void ol_step(LearnerState& state, std::span<const double> gradient, ProblemId z, double eta,
             const BoxSet& box);

/// One CoOL step on block z. With xi the whole vector is weighted-projected
/// onto S* with accuracy delta (identity weights for uw-CoOL); otherwise only
/// block z is clamped to its box.
std::optional<ProjectionResult> cool_step(LearnerState& state, std::span<const double> gradient,
                                          ProblemId z, bool xi, double delta,
                                          const LearnerConfig& config);

struct Round {
    ProblemId problem = 0;
    FeatureVector features;  // empty: the prediction is the block's single weight
    double cost = 0.0;
};

/// Source of rounds for a learner run.
class Environment {
public:
    virtual ~Environment() = default;
    /// std::nullopt once exhausted.
    virtual std::optional<Round> next() = 0;
    virtual bool respond(double offer, double cost) const { return offer >= cost; }
    /// Fixed competitor u in S* against which regret is measured.
    virtual JointWeights competitor() const = 0;
    /// Bound on ||x|| over all rounds (1 when there are no features).
    virtual double feature_bound() const { return 1.0; }
};

struct BoundCertificate {
    double R1 = 0.0;
    double R2 = 0.0;
    double R3 = 0.0;
    /// R4 in its uncorrected form: ||S||^2 / (2 eta) - 2 eta ||g||^2 K.
    double R4 = 0.0;
    /// R4 with the telescoping sum taken over observed problems only:
    /// ||S||^2 / (2 eta) - eta ||g||^2 min(T, K). See README.
    double R4_corrected = 0.0;
    /// R1 + R2 + R3 + R4_corrected.
    double total_bound = 0.0;
    /// R1 + R2 + R3 + R4.
    double uncorrected_total = 0.0;
    double observed_linearized_regret = 0.0;

    bool holds(double tol = 1e-6) const { return observed_linearized_regret <= total_bound + tol; }
};

/// Regret certificate for realized projection indicators xi and accuracies delta
/// (delta is ignored on rounds with xi = false). xi^0 is taken as false.
BoundCertificate theorem1_bound(std::int64_t T, std::size_t K, double eta, double set_norm,
                                double gradient_bound, const std::vector<bool>& xi,
                                std::span<const double> delta);

/// (3/2) sqrt(TK) ||S|| ||g||
double iol_bound(std::int64_t T, std::size_t K, double set_norm, double gradient_bound);

/// Closed-form bound with eta = ||S|| / (2||g||), alpha = c_alpha / sqrt(T) and
/// the decaying accuracy schedule.
double corollary1_bound(std::int64_t T, std::size_t K, double set_norm, double gradient_bound,
                        double c_alpha, double c_beta, double beta);

/// E[theorem1_bound(...).total_bound] over xi^t ~ Bernoulli(c_alpha/sqrt(T)) with
/// nominal accuracies, at eta = ||S|| / (2||g||).
double theorem1_expectation(std::int64_t T, std::size_t K, double set_norm,
                            double gradient_bound, double c_alpha, double c_beta, double beta);

/// sum_{t=1..T} t^{-1/2}
double inverse_sqrt_sum(std::int64_t T);

struct RunResult {
    std::vector<RoundRecord> records;
    BoundCertificate certificate;
    JointWeights final_weights;
};

/// Called after every projecting round with the round index and the result.
using ProjectionObserver = std::function<void(std::int64_t t, const ProjectionResult&)>;

/// Runs T rounds: predict, observe the response, take a surrogate subgradient
/// step, and project per the schedule. OL and IOL never project.
/// Throws std::runtime_error if the environment is exhausted early.
RunResult run(const LearnerConfig& config, Environment& env, std::int64_t T,
              const ProjectionObserver& observer = {});

}  // namespace cool
