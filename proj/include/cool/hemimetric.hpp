#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cool {

/// Dense n x n matrix of reals, row-major. The diagonal is ignored by the
/// hemimetric routines.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), values_(n * n, fill) {}
    SquareMatrix(std::size_t n, std::vector<double> values);

    std::size_t n() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    std::span<double> data() { return values_; }
    std::span<const double> data() const { return values_; }

    /// Off-diagonal entries in problem-id order (see pair_to_id).
    std::vector<double> to_pairs() const;
    static SquareMatrix from_pairs(std::span<const double> pairs, std::size_t n,
                                   double diagonal = 0.0);

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

/// Largest violation of the r-bounded hemimetric constraints: box [0, r] on
/// off-diagonal entries and w_ij <= w_ik + w_kj over distinct i, j, k.
double hemimetric_violation(const SquareMatrix& m, double r);

/// An n x n matrix known to lie in the r-bounded hemimetric polytope.
class HemimetricMatrix {
public:
    HemimetricMatrix() = default;

    /// Throws std::invalid_argument when m violates the polytope by more than tol.
    static HemimetricMatrix validated(SquareMatrix m, double r, double tol = 1e-9);

    std::size_t n() const { return values_.n(); }
    double r() const { return r_; }
    double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
    const SquareMatrix& values() const { return values_; }

private:
    friend HemimetricMatrix fw_repair(SquareMatrix m, double r);
    HemimetricMatrix(SquareMatrix m, double r) : values_(std::move(m)), r_(r) {}

    SquareMatrix values_;
    double r_ = 0.0;
};

/// Clamp to [0, r], zero the diagonal, then replace every entry by its
/// directed shortest-path distance. The result is always feasible.
HemimetricMatrix fw_repair(SquareMatrix m, double r);

/// Multipliers of the weighted projection's Lagrangian dual.
struct TriangleDuals {
    struct Triangle {
        std::size_t i, j, k;  // constraint w_ij <= w_ik + w_kj
        double lambda;
    };
    /// Constraint w_head <= sum of the path's edges, with head = (path.front(), path.back()).
    struct Path {
        std::vector<std::size_t> nodes;
        double lambda;
    };
    std::vector<Triangle> triangles;
    std::vector<Path> paths;
    SquareMatrix upper;  // multipliers of w_ij <= r
    SquareMatrix lower;  // multipliers of -w_ij <= 0
};

struct SolverOptions {
    /// Stop once primal - dual <= gap_tolerance.
    double gap_tolerance = 0.0;
    int max_sweeps = 1000;
};

struct SolverReport {
    HemimetricMatrix primal;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    int sweeps = 0;
    bool converged = false;  // gap_tolerance reached before max_sweeps
    std::chrono::nanoseconds wall_time{0};
    /// Dual value after each sweep.
    std::vector<double> dual_trace;
    TriangleDuals duals;
};

/// sum_{i != j} weights_ij (w_ij - target_ij)^2
double weighted_distance(const SquareMatrix& w, const SquareMatrix& target,
                         const SquareMatrix& weights);

/// Lagrangian dual of the weighted projection evaluated at the given
/// multipliers. A lower bound on the optimum for any nonnegative multipliers.
double dual_objective(const SquareMatrix& target, const SquareMatrix& weights, double r,
                      const TriangleDuals& duals);

/// Weighted projection of target onto the r-bounded hemimetric polytope by
/// dual coordinate ascent over triangle and box constraints.
///
/// Pairs with weight 0 carry no objective term. Among the optimal points the
/// one moving free pairs least (in squared distance to the target) is
/// returned. With free pairs the observed pairs may also be coupled by longer
/// paths; those constraints are added on demand.
///
/// Throws std::invalid_argument on negative or non-finite weights, r <= 0,
/// size mismatch, or a negative tolerance.
SolverReport project_hemimetric(const SquareMatrix& target, const SquareMatrix& weights,
                                double r, const SolverOptions& options = {});

inline double duality_gap(const SolverReport& report) {
    return report.primal_value - report.dual_value;
}

}  // namespace cool
