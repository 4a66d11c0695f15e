#include "cool/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cool {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}

}  // namespace

ProblemId pair_to_id(std::size_t i, std::size_t j, std::size_t n) {
    if (i >= n || j >= n || i == j) {
        throw std::out_of_range("pair_to_id: invalid pair (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") for n = " + std::to_string(n));
    }
    return i * (n - 1) + (j < i ? j : j - 1);
}

std::pair<std::size_t, std::size_t> id_to_pair(ProblemId id, std::size_t n) {
    if (n < 2 || id >= pair_count(n)) {
        throw std::out_of_range("id_to_pair: id " + std::to_string(id) + " out of range");
    }
    const std::size_t i = id / (n - 1);
    const std::size_t r = id % (n - 1);
    return {i, r < i ? r : r + 1};
}

JointWeights::JointWeights(std::size_t problems, std::size_t dim, double fill)
    : problems_(problems), dim_(dim), values_(problems * dim, fill) {
    if (dim == 0) throw std::invalid_argument("JointWeights: dimension must be >= 1");
}

JointWeights::JointWeights(std::size_t problems, std::size_t dim, std::vector<double> flat)
    : problems_(problems), dim_(dim), values_(std::move(flat)) {
    if (dim == 0) throw std::invalid_argument("JointWeights: dimension must be >= 1");
    if (values_.size() != problems * dim) {
        throw std::invalid_argument("JointWeights: flat size does not match K * d");
    }
}

std::span<double> JointWeights::block(ProblemId z) {
    if (z >= problems_) throw std::out_of_range("JointWeights: problem out of range");
    return std::span<double>(values_).subspan(z * dim_, dim_);
}

std::span<const double> JointWeights::block(ProblemId z) const {
    if (z >= problems_) throw std::out_of_range("JointWeights: problem out of range");
    return std::span<const double>(values_).subspan(z * dim_, dim_);
}

std::int64_t ObservationCounts::total() const {
    return std::accumulate(tau.begin(), tau.end(), std::int64_t{0});
}

void LossSpec::validate() const {
    if (!std::isfinite(u) || u < 0.0) throw std::invalid_argument("loss: u must be >= 0");
    if (!std::isfinite(delta) || delta <= 0.0) {
        throw std::invalid_argument("loss: delta must be > 0");
    }
}

double LossSpec::gradient_bound() const { return std::max(1.0, u / delta); }

double true_loss(double p, double c, double u) {
    require_finite(p, "p");
    require_finite(c, "c");
    require_finite(u, "u");
    if (u < 0.0) throw std::invalid_argument("true_loss: u must be >= 0");
    if (u < c) return 0.0;
    return p >= c ? p - c : u - c;
}

double surrogate_loss(double p, double c, double u, double delta) {
    require_finite(p, "p");
    require_finite(c, "c");
    require_finite(u, "u");
    require_finite(delta, "delta");
    if (delta <= 0.0) throw std::invalid_argument("surrogate_loss: delta must be > 0");
    return p >= c ? p - c : (u / delta) * (c - p);
}

double surrogate_gradient(double p, double c, double u, double delta) {
    require_finite(p, "p");
    require_finite(c, "c");
    require_finite(u, "u");
    require_finite(delta, "delta");
    if (delta <= 0.0) throw std::invalid_argument("surrogate_gradient: delta must be > 0");
    // The kink p == c takes the accept-side slope, matching the inclusive
    // acceptance rule.
    return p >= c ? 1.0 : -u / delta;
}

double utility_gain(bool accepted, double p, double u) { return accepted ? u - p : 0.0; }

double loss_value(const LossSpec& loss, double p, double c) {
    switch (loss.kind) {
        case LossKind::TrueIncentive:
            return true_loss(p, c, loss.u);
        case LossKind::ConvexSurrogate:
            return surrogate_loss(p, c, loss.u, loss.delta);
    }
    throw std::logic_error("unknown loss kind");
}

double inner_product(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner_product: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

std::vector<double> cumulative_regret(std::span<const RoundRecord> records,
                                      const JointWeights& competitor, const LossSpec& loss) {
    std::vector<double> out;
    out.reserve(records.size());
    double acc = 0.0;
    for (const auto& rec : records) {
        const auto block = competitor.block(rec.problem);
        const double reference =
            rec.features.empty() ? block[0] : inner_product(block, rec.features);
        acc += loss_value(loss, rec.prediction, rec.cost) - loss_value(loss, reference, rec.cost);
        out.push_back(acc);
    }
    return out;
}

}  // namespace cool
