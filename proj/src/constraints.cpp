#include "cool/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cool/hemimetric.hpp"

namespace cool {

BoxSet BoxSet::uniform(std::size_t dim, double lo, double hi) {
    BoxSet box{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
    box.validate();
    return box;
}

void BoxSet::validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
        throw std::invalid_argument("BoxSet: lower and upper must have the same nonzero length");
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (std::isnan(lower[k]) || std::isnan(upper[k]) || lower[k] > upper[k]) {
            throw std::invalid_argument("BoxSet: empty in coordinate " + std::to_string(k));
        }
    }
}

std::vector<double> BoxSet::midpoint() const {
    std::vector<double> mid(dim());
    for (std::size_t k = 0; k < dim(); ++k) mid[k] = 0.5 * (lower[k] + upper[k]);
    return mid;
}

DiagonalWeight DiagonalWeight::from_counts(const ObservationCounts& counts, std::size_t dim) {
    DiagonalWeight q;
    q.entries.reserve(counts.tau.size() * dim);
    for (auto tau : counts.tau) {
        if (tau < 0) throw std::invalid_argument("DiagonalWeight: negative count");
        q.entries.insert(q.entries.end(), dim, std::sqrt(static_cast<double>(tau)));
    }
    return q;
}

DiagonalWeight DiagonalWeight::identity(std::size_t problems, std::size_t dim) {
    return DiagonalWeight{std::vector<double>(problems * dim, 1.0)};
}

JointStructure JointStructure::independent(std::size_t problems, BoxSet box) {
    JointStructure s;
    s.kind = StructureKind::Independent;
    s.problems = problems;
    s.dim = box.dim();
    s.box = std::move(box);
    s.validate();
    return s;
}

JointStructure JointStructure::shared(std::size_t problems, BoxSet box) {
    JointStructure s = independent(problems, std::move(box));
    s.kind = StructureKind::Shared;
    return s;
}

JointStructure JointStructure::shared_prefix_of(std::size_t problems, std::size_t prefix,
                                                BoxSet box) {
    JointStructure s = independent(problems, std::move(box));
    s.kind = StructureKind::SharedPrefix;
    s.shared_prefix = prefix;
    s.validate();
    return s;
}

JointStructure JointStructure::hemimetric(std::size_t items, double r) {
    JointStructure s;
    s.kind = StructureKind::Hemimetric;
    s.items = items;
    s.problems = pair_count(items);
    s.dim = 1;
    s.r = r;
    s.box = BoxSet{{0.0}, {r}};
    s.validate();
    return s;
}

void JointStructure::validate() const {
    box.validate();
    if (problems == 0) throw std::invalid_argument("structure: at least one problem required");
    if (box.dim() != dim) throw std::invalid_argument("structure: box dimension != d");
    switch (kind) {
        case StructureKind::Independent:
        case StructureKind::Shared:
            break;
        case StructureKind::SharedPrefix:
            if (shared_prefix < 1 || shared_prefix > dim) {
                throw std::invalid_argument("structure: shared prefix must satisfy 1 <= d' <= d");
            }
            break;
        case StructureKind::Hemimetric:
            if (items < 2) throw std::invalid_argument("structure: hemimetric needs n >= 2");
            if (dim != 1) throw std::invalid_argument("structure: hemimetric requires d = 1");
            if (problems != pair_count(items)) {
                throw std::invalid_argument("structure: hemimetric K = " +
                                            std::to_string(problems) + " but n^2 - n = " +
                                            std::to_string(pair_count(items)));
            }
            if (!(r > 0.0) || !std::isfinite(r)) {
                throw std::invalid_argument("structure: hemimetric r must be finite and > 0");
            }
            if (box.lower[0] != 0.0 || box.upper[0] != r) {
                throw std::invalid_argument("structure: hemimetric box must be [0, r]");
            }
            break;
    }
}

std::vector<double> project_box(std::span<const double> w, const BoxSet& box) {
    if (w.size() != box.dim()) throw std::invalid_argument("project_box: dimension mismatch");
    std::vector<double> out(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        out[k] = std::clamp(w[k], box.lower[k], box.upper[k]);
    }
    return out;
}

double weighted_objective(const JointWeights& w, const JointWeights& wtilde,
                          const DiagonalWeight& q) {
    if (w.size() != wtilde.size() || q.entries.size() != w.size()) {
        throw std::invalid_argument("weighted_objective: size mismatch");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double d = w[k] - wtilde[k];
        acc += q.entries[k] * d * d;
    }
    return acc;
}

namespace {

void check_weights(const DiagonalWeight& q, const JointStructure& s) {
    if (q.entries.size() != s.problems * s.dim) {
        throw std::invalid_argument("weighted_project: Q has " + std::to_string(q.entries.size()) +
                                    " entries, expected " + std::to_string(s.problems * s.dim));
    }
    bool any = false;
    for (std::size_t z = 0; z < s.problems; ++z) {
        const double w0 = q.entries[z * s.dim];
        for (std::size_t c = 0; c < s.dim; ++c) {
            const double v = q.entries[z * s.dim + c];
            if (!std::isfinite(v) || v < 0.0) {
                throw std::invalid_argument("weighted_project: Q entries must be finite and >= 0");
            }
            if (v != w0) throw std::invalid_argument("weighted_project: Q not constant per block");
        }
        any = any || w0 > 0.0;
    }
    if (!any) throw std::invalid_argument("weighted_project: zero weight on all blocks");
}

// Weighted mean of coordinate c across blocks, clamped to the common box.
double consensus(const JointWeights& wtilde, const DiagonalWeight& q, const BoxSet& box,
                 std::size_t c) {
    const std::size_t d = wtilde.dim();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t z = 0; z < wtilde.problems(); ++z) {
        const double qz = q.entries[z * d];
        num += qz * wtilde[z * d + c];
        den += qz;
    }
    return std::clamp(num / den, box.lower[c], box.upper[c]);
}

}  // namespace

ProjectionResult weighted_project(const JointWeights& wtilde, const DiagonalWeight& q,
                                  const JointStructure& structure, double accuracy,
                                  int max_sweeps) {
    const auto start = std::chrono::steady_clock::now();
    if (!(accuracy >= 0.0)) throw std::invalid_argument("weighted_project: accuracy must be >= 0");
    if (wtilde.problems() != structure.problems || wtilde.dim() != structure.dim) {
        throw std::invalid_argument("weighted_project: weights do not match the structure");
    }
    check_weights(q, structure);

    ProjectionResult result;
    result.point = wtilde;
    const std::size_t d = structure.dim;

    switch (structure.kind) {
        case StructureKind::Independent:
            for (std::size_t z = 0; z < structure.problems; ++z) {
                auto block = result.point.block(z);
                const auto clamped = project_box(block, structure.box);
                std::copy(clamped.begin(), clamped.end(), block.begin());
            }
            break;
        case StructureKind::Shared:
        case StructureKind::SharedPrefix: {
            const std::size_t shared =
                structure.kind == StructureKind::Shared ? d : structure.shared_prefix;
            for (std::size_t c = 0; c < d; ++c) {
                if (c < shared) {
                    const double v = consensus(wtilde, q, structure.box, c);
                    for (std::size_t z = 0; z < structure.problems; ++z) result.point[z * d + c] = v;
                } else {
                    for (std::size_t z = 0; z < structure.problems; ++z) {
                        double& v = result.point[z * d + c];
                        v = std::clamp(v, structure.box.lower[c], structure.box.upper[c]);
                    }
                }
            }
            break;
        }
        case StructureKind::Hemimetric: {
            const std::size_t n = structure.items;
            const SquareMatrix target = SquareMatrix::from_pairs(wtilde.flat(), n);
            const SquareMatrix weights = SquareMatrix::from_pairs(q.entries, n);
            SolverOptions options;
            options.gap_tolerance = std::max(accuracy, kFeasibilityTolerance);
            options.max_sweeps = max_sweeps;
            const SolverReport report = project_hemimetric(target, weights, structure.r, options);
            result.point = JointWeights(structure.problems, 1, report.primal.values().to_pairs());
            result.duality_gap = std::max(0.0, report.gap);
            result.iterations = report.sweeps;
            result.exact = report.gap <= kFeasibilityTolerance;
            result.dual_trace = report.dual_trace;
            break;
        }
    }
    result.objective = weighted_objective(result.point, wtilde, q);
    result.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    return result;
}

bool is_feasible(const JointWeights& w, const JointStructure& structure, double tol) {
    if (w.problems() != structure.problems || w.dim() != structure.dim) return false;
    const std::size_t d = structure.dim;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const std::size_t c = k % d;
        if (!std::isfinite(w[k])) return false;
        if (w[k] < structure.box.lower[c] - tol || w[k] > structure.box.upper[c] + tol) {
            return false;
        }
    }
    switch (structure.kind) {
        case StructureKind::Independent:
            return true;
        case StructureKind::Shared:
        case StructureKind::SharedPrefix: {
            const std::size_t shared =
                structure.kind == StructureKind::Shared ? d : structure.shared_prefix;
            for (std::size_t z = 1; z < structure.problems; ++z) {
                for (std::size_t c = 0; c < shared; ++c) {
                    if (std::abs(w[z * d + c] - w[c]) > tol) return false;
                }
            }
            return true;
        }
        case StructureKind::Hemimetric:
            return hemimetric_violation(SquareMatrix::from_pairs(w.flat(), structure.items),
                                        structure.r) <= tol;
    }
    return false;
}

double set_norm(const JointStructure& structure) {
    const BoxSet& box = structure.box;
    box.validate();
    double acc = 0.0;
    for (std::size_t k = 0; k < box.dim(); ++k) {
        const double span = box.upper[k] - box.lower[k];
        if (!std::isfinite(span)) throw std::invalid_argument("set_norm: unbounded box");
        acc += span * span;
    }
    return std::sqrt(acc);
}

std::vector<double> cumulative_regret(std::span<const RoundRecord> records,
                                      const JointWeights& competitor,
                                      const JointStructure& structure, const LossSpec& loss) {
    if (!is_feasible(competitor, structure)) {
        throw std::invalid_argument("cumulative_regret: competitor is not in S*");
    }
    return cumulative_regret(records, competitor, loss);
}

}  // namespace cool
