#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cool {

/// Index of a learning problem in [0, K).
using ProblemId = std::size_t;

/// Feature vector x of length d. The market settings use d = 1 with x = {1}.
using FeatureVector = std::vector<double>;

/// Number of ordered pairs over n items.
constexpr std::size_t pair_count(std::size_t n) { return n * n - n; }

/// Bijection between ordered pairs (i, j), i != j, and problem ids.
/// Row-major over i, skipping the diagonal.
ProblemId pair_to_id(std::size_t i, std::size_t j, std::size_t n);
std::pair<std::size_t, std::size_t> id_to_pair(ProblemId id, std::size_t n);

/// Concatenation of K per-problem weight vectors of length d.
class JointWeights {
public:
    JointWeights() = default;
    JointWeights(std::size_t problems, std::size_t dim, double fill = 0.0);
    JointWeights(std::size_t problems, std::size_t dim, std::vector<double> flat);

    std::size_t problems() const { return problems_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return values_.size(); }

    std::span<double> block(ProblemId z);
    std::span<const double> block(ProblemId z) const;

    std::span<double> flat() { return values_; }
    std::span<const double> flat() const { return values_; }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    bool operator==(const JointWeights&) const = default;

private:
    std::size_t problems_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> values_;
};

/// tau_z: number of rounds in which problem z was served.
struct ObservationCounts {
    std::vector<std::int64_t> tau;

    explicit ObservationCounts(std::size_t problems = 0) : tau(problems, 0) {}
    std::int64_t total() const;
};

enum class LossKind { TrueIncentive, ConvexSurrogate };

struct LossSpec {
    LossKind kind = LossKind::ConvexSurrogate;
    double u = 40.0;      // platform utility gain
    double delta = 20.0;  // surrogate scale; u / delta is the reject slope

    void validate() const;
    /// Largest subgradient magnitude of the surrogate per unit feature norm.
    double gradient_bound() const;
};

struct RoundRecord {
    std::size_t t = 0;  // 1-based round index
    ProblemId problem = 0;
    FeatureVector features;
    double prediction = 0.0;
    double cost = 0.0;
    bool accepted = false;
    double true_loss = 0.0;
    double surrogate_loss = 0.0;
    double utility_gain = 0.0;
    /// Scalar slope s of the surrogate at the prediction; the gradient is s * x.
    double gradient_scale = 0.0;
    bool projected = false;
    double requested_accuracy = 0.0;
    double duality_gap = 0.0;
    std::chrono::nanoseconds projection_wall_time{0};
};

double true_loss(double p, double c, double u);
double surrogate_loss(double p, double c, double u, double delta);
double surrogate_gradient(double p, double c, double u, double delta);
double utility_gain(bool accepted, double p, double u);

/// Loss of the given kind at prediction p.
double loss_value(const LossSpec& loss, double p, double c);

double inner_product(std::span<const double> a, std::span<const double> b);

/// Prefix sums of l^t(w^t) - l^t(competitor) under the selected loss.
/// The competitor's prediction for a record is <u_z, x^t>. Feasibility of
/// the competitor in S* is checked by the overload in constraints.hpp.
std::vector<double> cumulative_regret(std::span<const RoundRecord> records,
                                      const JointWeights& competitor,
                                      const LossSpec& loss);

}  // namespace cool
