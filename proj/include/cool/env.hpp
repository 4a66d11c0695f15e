#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cool/constraints.hpp"
#include "cool/hemimetric.hpp"
#include "cool/learners.hpp"

namespace cool {

/// n items in two equal clusters; w*_ij = intra within a cluster, inter across.
struct HemimetricWorld {
    std::size_t n = 10;
    std::vector<int> cluster;
    double intra = 1.0;
    double inter = 9.0;
    double r = 10.0;
    HemimetricMatrix ground_truth;

    static HemimetricWorld two_clusters(std::size_t n = 10, double intra = 1.0, double inter = 9.0,
                                        double r = 10.0);

    std::size_t problems() const { return pair_count(n); }
    JointStructure structure() const { return JointStructure::hemimetric(n, r); }
    JointWeights competitor() const;
};

enum class OrderingKind { Random, Batch, Single };

struct OrderingPolicy {
    OrderingKind kind = OrderingKind::Random;
    std::size_t batch_size = 5;
    ProblemId problem = 0;

    static OrderingPolicy random() { return {}; }
    static OrderingPolicy batch(std::size_t size) { return {OrderingKind::Batch, size, 0}; }
    static OrderingPolicy single(ProblemId z) { return {OrderingKind::Single, 1, z}; }
};

/// Draws problems from a pool according to an ordering policy.
class ProblemSequence {
public:
    ProblemSequence(OrderingPolicy policy, std::vector<ProblemId> pool, std::uint64_t seed);
    ProblemId next();

private:
    OrderingPolicy policy_;
    std::vector<ProblemId> pool_;
    std::mt19937_64 rng_;
    ProblemId current_ = 0;
    std::size_t left_in_batch_ = 0;
};

/// Inclusive acceptance rule: accept iff offer >= cost.
inline bool respond(double offer, double cost) { return offer >= cost; }

/// Two-cluster world with deterministic costs c^t = w*_{z^t}. Unlimited rounds.
class HemimetricWorldEnv : public Environment {
public:
    HemimetricWorldEnv(HemimetricWorld world, OrderingPolicy ordering, std::uint64_t seed);
    std::optional<Round> next() override;
    JointWeights competitor() const override { return truth_; }
    const HemimetricWorld& world() const { return world_; }

private:
    HemimetricWorld world_;
    JointWeights truth_;
    ProblemSequence sequence_;
};

enum class ReviewLevel { High, Low };
enum class CostModel { Deterministic, Stochastic };

/// Apartments of four types: Manhattan/Brooklyn x High/Low reviews, equally many
/// of each. The required discount for i -> j depends on the review levels.
struct MarketScenario {
    std::size_t n_items = 20;
    double u = 40.0;
    double delta = 20.0;
    double r = 40.0;
    /// Mean required discount indexed [review(i)][review(j)], High = 0.
    std::array<std::array<double, 2>, 2> mean_discount{{{25.4, 29.5}, {25.9, 28.1}}};
    CostModel cost_model = CostModel::Deterministic;
    /// Standard deviation of the untruncated normal for stochastic costs.
    double noise_sd = 8.0;
    /// Offered switches: only High -> Low when true, all pairs otherwise.
    bool high_to_low_only = true;
    std::uint64_t rng_seed = 0;

    void validate() const;
    ReviewLevel review(std::size_t item) const;
    /// Manhattan for the first half of each review level, Brooklyn otherwise.
    bool manhattan(std::size_t item) const;
    /// Mean required discount per pair; lies in Hemimetric(n_items, r).
    HemimetricMatrix ground_truth() const;
    std::vector<ProblemId> offered_switches() const;
    JointStructure structure() const { return JointStructure::hemimetric(n_items, r); }
    LossSpec loss() const { return {LossKind::ConvexSurrogate, u, delta}; }
};

/// Normal on [0, r] whose truncated mean equals `mean`; the location is found by bisection.
class TruncatedNormal {
public:
    TruncatedNormal(double mean, double sd, double upper);
    double operator()(std::mt19937_64& rng) const;
    double location() const { return location_; }
    double mean() const;

private:
    double location_;
    double sd_;
    double upper_;
};

class MarketEnv : public Environment {
public:
    MarketEnv(MarketScenario scenario, OrderingPolicy ordering = OrderingPolicy::random());
    std::optional<Round> next() override;
    JointWeights competitor() const override { return truth_; }
    const MarketScenario& scenario() const { return scenario_; }

private:
    MarketScenario scenario_;
    JointWeights truth_;
    std::vector<TruncatedNormal> noise_;  // per problem, stochastic model only
    ProblemSequence sequence_;
    std::mt19937_64 cost_rng_;
};

struct CalibrationSummary {
    std::size_t draws = 0;
    double acceptance_rate = 0.0;
    double mean_accepted_cost = 0.0;  // NaN when nothing was accepted
};

/// Acceptance rate and mean accepted cost over offered switches when offering
/// offers[z] on problem z. Descriptive only.
CalibrationSummary calibration_targets(const MarketScenario& scenario, const JointWeights& offers,
                                       std::size_t draws = 10000);
CalibrationSummary calibration_targets(const MarketScenario& scenario, double offer,
                                       std::size_t draws = 10000);

/// K problems with d-dimensional features in [0, 1]^d and costs <u_z, x>.
/// Used for structures other than the hemimetric.
class LinearWorldEnv : public Environment {
public:
    LinearWorldEnv(JointWeights competitor, OrderingPolicy ordering, std::uint64_t seed,
                   double cost_noise = 0.0);
    std::optional<Round> next() override;
    JointWeights competitor() const override { return truth_; }
    double feature_bound() const override;

private:
    JointWeights truth_;
    ProblemSequence sequence_;
    std::mt19937_64 rng_;
    double cost_noise_;
};

}  // namespace cool
