#include "cool/hemimetric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "cool/core.hpp"

namespace cool {

SquareMatrix::SquareMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
    if (values_.size() != n * n) throw std::invalid_argument("SquareMatrix: size is not n * n");
}

std::vector<double> SquareMatrix::to_pairs() const {
    std::vector<double> out;
    out.reserve(pair_count(n_));
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            if (i != j) out.push_back((*this)(i, j));
        }
    }
    return out;
}

SquareMatrix SquareMatrix::from_pairs(std::span<const double> pairs, std::size_t n,
                                      double diagonal) {
    if (pairs.size() != pair_count(n)) {
        throw std::invalid_argument("SquareMatrix::from_pairs: expected n^2 - n values");
    }
    SquareMatrix m(n, diagonal);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) m(i, j) = pairs[k++];
        }
    }
    return m;
}

double hemimetric_violation(const SquareMatrix& m, double r) {
    const std::size_t n = m.n();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = m(i, j);
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
            worst = std::max({worst, -v, v - r});
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                worst = std::max(worst, v - m(i, k) - m(k, j));
            }
        }
    }
    return worst;
}

HemimetricMatrix HemimetricMatrix::validated(SquareMatrix m, double r, double tol) {
    if (!(r > 0.0)) throw std::invalid_argument("hemimetric: r must be > 0");
    const double v = hemimetric_violation(m, r);
    if (v > tol) {
        throw std::invalid_argument("hemimetric: matrix violates the polytope by " +
                                    std::to_string(v));
    }
    for (std::size_t i = 0; i < m.n(); ++i) m(i, i) = 0.0;
    return fw_repair(std::move(m), r);
}

namespace {

void clamp_box(SquareMatrix& m, double r) {
    const std::size_t n = m.n();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = i == j ? 0.0 : std::clamp(m(i, j), 0.0, r);
        }
    }
}

void shortest_paths(SquareMatrix& m) {
    const std::size_t n = m.n();
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double ik = m(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                const double via = ik + m(k, j);
                if (via < m(i, j)) m(i, j) = via;
            }
        }
    }
}

// Shortest paths that also records the successor of i on a shortest path to j.
void shortest_paths(SquareMatrix& m, std::vector<std::size_t>& next) {
    const std::size_t n = m.n();
    next.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) next[i * n + j] = j;
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double ik = m(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                const double via = ik + m(k, j);
                if (via < m(i, j)) {
                    m(i, j) = via;
                    next[i * n + j] = next[i * n + k];
                }
            }
        }
    }
}

}  // namespace

HemimetricMatrix fw_repair(SquareMatrix m, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("fw_repair: r must be > 0");
    for (double v : m.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("fw_repair: non-finite entry");
    }
    clamp_box(m, r);
    shortest_paths(m);
    return HemimetricMatrix(std::move(m), r);
}

double weighted_distance(const SquareMatrix& w, const SquareMatrix& target,
                         const SquareMatrix& weights) {
    const std::size_t n = w.n();
    if (target.n() != n || weights.n() != n) {
        throw std::invalid_argument("weighted_distance: size mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || weights(i, j) == 0.0) continue;
            const double d = w(i, j) - target(i, j);
            acc += weights(i, j) * d * d;
        }
    }
    return acc;
}

double dual_objective(const SquareMatrix& target, const SquareMatrix& weights, double r,
                      const TriangleDuals& duals) {
    const std::size_t n = target.n();
    // s = A' lambda over all constraint rows.
    SquareMatrix s(n, 0.0);
    double rhs = 0.0;
    for (const auto& tri : duals.triangles) {
        s(tri.i, tri.j) += tri.lambda;
        s(tri.i, tri.k) -= tri.lambda;
        s(tri.k, tri.j) -= tri.lambda;
    }
    for (const auto& path : duals.paths) {
        s(path.nodes.front(), path.nodes.back()) += path.lambda;
        for (std::size_t e = 0; e + 1 < path.nodes.size(); ++e) {
            s(path.nodes[e], path.nodes[e + 1]) -= path.lambda;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (duals.upper.n() == n) {
                s(i, j) += duals.upper(i, j);
                rhs += duals.upper(i, j) * r;
            }
            if (duals.lower.n() == n) s(i, j) -= duals.lower(i, j);
        }
    }
    // inf_x sum q (x - t)^2 + s'x - lambda'b, attained at x = t - s / (2q).
    double value = -rhs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = weights(i, j);
            const double se = s(i, j);
            if (q == 0.0) {
                if (std::abs(se) > 0.0) return -std::numeric_limits<double>::infinity();
                continue;
            }
            value += se * target(i, j) - se * se / (4.0 * q);
        }
    }
    return value;
}

namespace {

constexpr double kSeparationTolerance = 1e-12;

// Dual coordinate ascent (Hildreth's method) on
//   min sum_e q_e (x_e - t_e)^2  s.t.  triangle, path, and box rows,
// with x = t - h .* (A' lambda) and h = 1 / (2q).
class TriangleFixer {
public:
    TriangleFixer(const SquareMatrix& target, const SquareMatrix& weights, double r)
        : n_(target.n()), r_(r), target_(target), weights_(weights), h_(n_, 0.0), x_(target) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i != j && weights(i, j) > 0.0) h_(i, j) = 0.5 / weights(i, j);
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i == j || !active(i, j)) continue;
                for (std::size_t k = 0; k < n_; ++k) {
                    if (k == i || k == j || !active(i, k) || !active(k, j)) continue;
                    triangles_.push_back({i * n_ + j, i * n_ + k, k * n_ + j});
                }
            }
        }
        tri_lambda_.assign(triangles_.size(), 0.0);
        upper_.assign(n_ * n_, 0.0);
        lower_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i != j && active(i, j)) {
                    active_edges_.push_back(i * n_ + j);
                } else if (i != j) {
                    has_free_ = true;
                }
            }
        }
    }

    bool active(std::size_t i, std::size_t j) const { return h_(i, j) > 0.0; }
    bool has_free_pairs() const { return has_free_; }

    void sweep() {
        auto x = x_.data();
        auto h = h_.data();
        for (std::size_t c = 0; c < triangles_.size(); ++c) {
            const auto& tri = triangles_[c];
            const double viol = x[tri.head] - x[tri.left] - x[tri.right];
            double& lam = tri_lambda_[c];
            if (viol <= 0.0 && lam == 0.0) continue;
            const double denom = h[tri.head] + h[tri.left] + h[tri.right];
            const double step = std::max(-lam, viol / denom);
            lam += step;
            x[tri.head] -= step * h[tri.head];
            x[tri.left] += step * h[tri.left];
            x[tri.right] += step * h[tri.right];
        }
        for (auto& path : paths_) {
            double viol = x[path.head];
            double denom = h[path.head];
            for (std::size_t e : path.edges) {
                viol -= x[e];
                denom += h[e];
            }
            if (viol <= 0.0 && path.lambda == 0.0) continue;
            const double step = std::max(-path.lambda, viol / denom);
            path.lambda += step;
            x[path.head] -= step * h[path.head];
            for (std::size_t e : path.edges) x[e] += step * h[e];
        }
        for (std::size_t e : active_edges_) {
            double step = std::max(-upper_[e], (x[e] - r_) / h[e]);
            upper_[e] += step;
            x[e] -= step * h[e];
            step = std::max(-lower_[e], -x[e] / h[e]);
            lower_[e] += step;
            x[e] += step * h[e];
        }
    }

    // Rebuilds x from the multipliers and returns the dual value.
    double refresh() {
        std::vector<double> s(n_ * n_, 0.0);
        double rhs = 0.0;
        for (std::size_t c = 0; c < triangles_.size(); ++c) {
            const double lam = tri_lambda_[c];
            if (lam == 0.0) continue;
            s[triangles_[c].head] += lam;
            s[triangles_[c].left] -= lam;
            s[triangles_[c].right] -= lam;
        }
        for (const auto& path : paths_) {
            if (path.lambda == 0.0) continue;
            s[path.head] += path.lambda;
            for (std::size_t e : path.edges) s[e] -= path.lambda;
        }
        double dual = 0.0;
        auto t = target_.data();
        auto h = h_.data();
        auto x = x_.data();
        for (std::size_t e : active_edges_) {
            s[e] += upper_[e] - lower_[e];
            rhs += upper_[e] * r_;
            x[e] = t[e] - h[e] * s[e];
            dual += s[e] * t[e] - 0.5 * h[e] * s[e] * s[e];
        }
        return dual - rhs;
    }

    // Candidate with free pairs filled by `fill`, repaired to feasibility.
    HemimetricMatrix candidate(const SquareMatrix* fill) const {
        SquareMatrix m(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i == j) continue;
                m(i, j) = active(i, j) ? x_(i, j) : (fill ? (*fill)(i, j) : r_);
            }
        }
        return fw_repair(std::move(m), r_);
    }

    // Adds constraints for active pairs that are longer than a path of three
    // or more active edges. Only needed when some pairs are free: with every
    // pair active, the triangles imply all path constraints.
    void separate_paths() {
        SquareMatrix m(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i != j) m(i, j) = active(i, j) ? std::clamp(x_(i, j), 0.0, r_) : r_;
            }
        }
        const SquareMatrix direct = m;
        std::vector<std::size_t> next;
        shortest_paths(m, next);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (i == j || !active(i, j)) continue;
                if (direct(i, j) - m(i, j) <= kSeparationTolerance * std::max(1.0, r_)) continue;
                std::vector<std::size_t> nodes{i};
                for (std::size_t v = i; v != j;) {
                    v = next[v * n_ + j];
                    nodes.push_back(v);
                }
                if (nodes.size() < 4) continue;  // two edges: already a triangle row
                if (!known_paths_.insert(nodes).second) continue;
                PathRow row{i * n_ + j, {}, 0.0, nodes};
                for (std::size_t e = 0; e + 1 < nodes.size(); ++e) {
                    row.edges.push_back(nodes[e] * n_ + nodes[e + 1]);
                }
                paths_.push_back(std::move(row));
            }
        }
    }

    TriangleDuals duals() const {
        TriangleDuals out;
        out.triangles.reserve(triangles_.size());
        for (std::size_t c = 0; c < triangles_.size(); ++c) {
            const auto& tri = triangles_[c];
            out.triangles.push_back(
                {tri.head / n_, tri.head % n_, tri.left % n_, tri_lambda_[c]});
        }
        for (const auto& path : paths_) out.paths.push_back({path.nodes, path.lambda});
        out.upper = SquareMatrix(n_, upper_);
        out.lower = SquareMatrix(n_, lower_);
        return out;
    }

private:
    struct TriangleRow {
        std::size_t head, left, right;
    };
    struct PathRow {
        std::size_t head;
        std::vector<std::size_t> edges;
        double lambda;
        std::vector<std::size_t> nodes;
    };

    std::size_t n_;
    double r_;
    const SquareMatrix& target_;
    const SquareMatrix& weights_;
    SquareMatrix h_;
    SquareMatrix x_;
    std::vector<TriangleRow> triangles_;
    std::vector<double> tri_lambda_;
    std::vector<PathRow> paths_;
    std::set<std::vector<std::size_t>> known_paths_;
    std::vector<double> upper_;
    std::vector<double> lower_;
    std::vector<std::size_t> active_edges_;
    bool has_free_ = false;
};

// Least-squares completion of the free pairs: with the active pairs held at
// their values in `base`, move the free pairs as little as possible from the
// target while keeping the matrix feasible. Hildreth again, with h = 0 on
// held pairs. Returns std::nullopt if the sweeps do not reach feasibility.
std::optional<SquareMatrix> complete_free_pairs(const SquareMatrix& base, const SquareMatrix& target,
                                                const SquareMatrix& weights, double r) {
    const std::size_t n = base.n();
    SquareMatrix x = base;
    std::vector<double> h(n * n, 0.0);
    std::vector<std::size_t> free_edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && weights(i, j) == 0.0) {
                h[i * n + j] = 1.0;
                x(i, j) = target(i, j);
                free_edges.push_back(i * n + j);
            }
        }
    }
    struct Row {
        std::size_t head, left, right;
        double lambda;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                if (i == j || k == i || k == j) continue;
                const std::size_t a = i * n + j, b = i * n + k, c = k * n + j;
                if (h[a] + h[b] + h[c] > 0.0) rows.push_back({a, b, c, 0.0});
            }
        }
    }
    std::vector<double> upper(n * n, 0.0), lower(n * n, 0.0);
    auto v = x.data();
    const double tol = kSeparationTolerance * std::max(1.0, r);
    constexpr int kMaxSweeps = 5000;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double worst = 0.0;
        for (auto& row : rows) {
            const double viol = v[row.head] - v[row.left] - v[row.right];
            worst = std::max(worst, viol);
            if (viol <= 0.0 && row.lambda == 0.0) continue;
            const double step =
                std::max(-row.lambda, viol / (h[row.head] + h[row.left] + h[row.right]));
            row.lambda += step;
            v[row.head] -= step * h[row.head];
            v[row.left] += step * h[row.left];
            v[row.right] += step * h[row.right];
        }
        for (std::size_t e : free_edges) {
            worst = std::max({worst, v[e] - r, -v[e]});
            double step = std::max(-upper[e], v[e] - r);
            upper[e] += step;
            v[e] -= step;
            step = std::max(-lower[e], -v[e]);
            lower[e] += step;
            v[e] += step;
        }
        if (worst <= tol) return x;
    }
    return std::nullopt;
}

void validate_inputs(const SquareMatrix& target, const SquareMatrix& weights, double r,
                     const SolverOptions& options) {
    const std::size_t n = target.n();
    if (n < 2) throw std::invalid_argument("project_hemimetric: n must be >= 2");
    if (weights.n() != n) throw std::invalid_argument("project_hemimetric: weights size mismatch");
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("project_hemimetric: r must be finite and > 0");
    }
    if (!(options.gap_tolerance >= 0.0)) {
        throw std::invalid_argument("project_hemimetric: gap_tolerance must be >= 0");
    }
    if (options.max_sweeps < 1) {
        throw std::invalid_argument("project_hemimetric: max_sweeps must be >= 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (!std::isfinite(target(i, j))) {
                throw std::invalid_argument("project_hemimetric: non-finite target");
            }
            const double q = weights(i, j);
            if (!std::isfinite(q) || q < 0.0) {
                throw std::invalid_argument("project_hemimetric: weight on pair (" +
                                            std::to_string(i) + ", " + std::to_string(j) +
                                            ") must be finite and >= 0");
            }
        }
    }
}

}  // namespace

SolverReport project_hemimetric(const SquareMatrix& target, const SquareMatrix& weights,
                                double r, const SolverOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    validate_inputs(target, weights, r, options);


    TriangleFixer fixer(target, weights, r);
    SolverReport report;
    double best_primal = std::numeric_limits<double>::infinity();
    double best_dual = -std::numeric_limits<double>::infinity();

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        fixer.sweep();
        const double dual = fixer.refresh();
        best_dual = std::max(best_dual, dual);
        report.dual_trace.push_back(dual);
        report.sweeps = sweep;

        // Keeping the target on free pairs is preferred whenever it costs
        // nothing over the maximal completion.
        HemimetricMatrix cand = fixer.candidate(&target);
        double value = weighted_distance(cand.values(), target, weights);
        if (fixer.has_free_pairs()) {
            HemimetricMatrix maximal = fixer.candidate(nullptr);
            const double maximal_value = weighted_distance(maximal.values(), target, weights);
            if (maximal_value < value) {
                cand = std::move(maximal);
                value = maximal_value;
            }
        }
        if (value < best_primal) {
            best_primal = value;
            report.primal = std::move(cand);
        }
        if (best_primal - best_dual <= options.gap_tolerance) {
            report.converged = true;
            break;
        }
        if (fixer.has_free_pairs()) fixer.separate_paths();
    }

    // Every completion of the optimal active values is optimal; prefer the one
    // closest to the target so free pairs only move when the structure forces
    // them to.
    if (fixer.has_free_pairs()) {
        if (auto completed = complete_free_pairs(report.primal.values(), target, weights, r)) {
            HemimetricMatrix cand = fw_repair(std::move(*completed), r);
            const double value = weighted_distance(cand.values(), target, weights);
            if (value - best_dual <= std::max(options.gap_tolerance, best_primal - best_dual)) {
                best_primal = value;
                report.primal = std::move(cand);
            }
        }
    }

    report.primal_value = best_primal;
    report.dual_value = best_dual;
    report.gap = best_primal - best_dual;
    report.duals = fixer.duals();
    report.wall_time = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    return report;
}

}  // namespace cool
