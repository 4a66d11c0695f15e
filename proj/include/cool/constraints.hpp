#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

#include "cool/core.hpp"

namespace cool {

/// Absolute tolerance for membership tests and for "exact" projections.
inline constexpr double kFeasibilityTolerance = 1e-9;

struct BoxSet {
    std::vector<double> lower;
    std::vector<double> upper;

    static BoxSet uniform(std::size_t dim, double lo, double hi);
    std::size_t dim() const { return lower.size(); }
    void validate() const;
    std::vector<double> midpoint() const;
};

/// Diagonal of Q: one nonnegative weight per problem, repeated over the d
/// coordinates of that problem's block.
struct DiagonalWeight {
    std::vector<double> entries;  // length d * K

    /// Q = diag(sqrt(tau_z)), each repeated d times.
    static DiagonalWeight from_counts(const ObservationCounts& counts, std::size_t dim);
    static DiagonalWeight identity(std::size_t problems, std::size_t dim);

    double block_weight(ProblemId z, std::size_t dim) const { return entries[z * dim]; }
};

enum class StructureKind { Independent, Shared, SharedPrefix, Hemimetric };

/// The joint set S* together with the per-problem box S_z common to all problems.
struct JointStructure {
    StructureKind kind = StructureKind::Independent;
    std::size_t problems = 0;
    std::size_t dim = 1;
    std::size_t shared_prefix = 0;  // SharedPrefix: number of leading shared coordinates
    std::size_t items = 0;          // Hemimetric: n
    double r = 0.0;                 // Hemimetric: upper bound
    BoxSet box;

    static JointStructure independent(std::size_t problems, BoxSet box);
    static JointStructure shared(std::size_t problems, BoxSet box);
    static JointStructure shared_prefix_of(std::size_t problems, std::size_t prefix, BoxSet box);
    static JointStructure hemimetric(std::size_t items, double r);

    void validate() const;
};

struct ProjectionResult {
    JointWeights point;
    /// Objective (w - wtilde)' Q (w - wtilde) at the returned point.
    double objective = 0.0;
    /// Certified upper bound on objective - min objective.
    double duality_gap = 0.0;
    int iterations = 0;
    std::chrono::nanoseconds wall_time{0};
    bool exact = true;
    /// Hemimetric only: dual value after each solver sweep.
    std::vector<double> dual_trace;
};

/// Euclidean projection onto a box: componentwise clamp.
std::vector<double> project_box(std::span<const double> w, const BoxSet& box);

/// (w - wtilde)' Q (w - wtilde)
double weighted_objective(const JointWeights& w, const JointWeights& wtilde,
                          const DiagonalWeight& q);

/// argmin over S* of (w - wtilde)' Q (w - wtilde), accurate to within
/// `accuracy` (certified by the returned duality gap). accuracy = 0 asks for
/// an exact projection, i.e. a gap of at most kFeasibilityTolerance.
///
/// Blocks whose weight is zero have no say in the objective. Shared
/// structures set them to the consensus value; the hemimetric solver picks a
/// feasible completion (see project_hemimetric).
ProjectionResult weighted_project(const JointWeights& wtilde, const DiagonalWeight& q,
                                  const JointStructure& structure, double accuracy,
                                  int max_sweeps = 1000);

bool is_feasible(const JointWeights& w, const JointStructure& structure,
                 double tol = kFeasibilityTolerance);

/// Per-problem diameter ||upper - lower||_2 of the box, used as ||S_max||.
double set_norm(const JointStructure& structure);

/// cumulative_regret after checking that the competitor lies in S*.
std::vector<double> cumulative_regret(std::span<const RoundRecord> records,
                                      const JointWeights& competitor,
                                      const JointStructure& structure, const LossSpec& loss);

}  // namespace cool
