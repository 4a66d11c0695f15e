#include "cool/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cool {

HemimetricWorld HemimetricWorld::two_clusters(std::size_t n, double intra, double inter, double r) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("world: n must be even and >= 2");
    if (!(intra >= 0.0) || !(inter >= 0.0)) throw std::invalid_argument("world: negative costs");
    HemimetricWorld w;
    w.n = n;
    w.intra = intra;
    w.inter = inter;
    w.r = r;
    w.cluster.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.cluster[i] = i < n / 2 ? 0 : 1;
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) m(i, j) = w.cluster[i] == w.cluster[j] ? intra : inter;
        }
    }
    w.ground_truth = HemimetricMatrix::validated(std::move(m), r);
    return w;
}

JointWeights HemimetricWorld::competitor() const {
    return JointWeights(problems(), 1, ground_truth.values().to_pairs());
}

ProblemSequence::ProblemSequence(OrderingPolicy policy, std::vector<ProblemId> pool,
                                 std::uint64_t seed)
    : policy_(policy), pool_(std::move(pool)), rng_(seed) {
    if (pool_.empty()) throw std::invalid_argument("ordering: empty problem pool");
    if (policy_.kind == OrderingKind::Batch && policy_.batch_size < 1) {
        throw std::invalid_argument("ordering: batch size must be >= 1");
    }
    if (policy_.kind == OrderingKind::Single &&
        std::find(pool_.begin(), pool_.end(), policy_.problem) == pool_.end()) {
        throw std::out_of_range("ordering: single problem " + std::to_string(policy_.problem) +
                                " is not in the problem pool");
    }
}

ProblemId ProblemSequence::next() {
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    switch (policy_.kind) {
        case OrderingKind::Random:
            return pool_[pick(rng_)];
        case OrderingKind::Batch:
            if (left_in_batch_ == 0) {
                current_ = pool_[pick(rng_)];
                left_in_batch_ = policy_.batch_size;
            }
            --left_in_batch_;
            return current_;
        case OrderingKind::Single:
            return policy_.problem;
    }
    return 0;
}

namespace {

std::vector<ProblemId> all_problems(std::size_t K) {
    std::vector<ProblemId> ids(K);
    std::iota(ids.begin(), ids.end(), ProblemId{0});
    return ids;
}

}  // namespace

HemimetricWorldEnv::HemimetricWorldEnv(HemimetricWorld world, OrderingPolicy ordering,
                                       std::uint64_t seed)
    : world_(std::move(world)),
      truth_(world_.competitor()),
      sequence_(ordering, all_problems(world_.problems()), seed) {}

std::optional<Round> HemimetricWorldEnv::next() {
    const ProblemId z = sequence_.next();
    return Round{z, {}, truth_[z]};
}

void MarketScenario::validate() const {
    if (n_items < 4 || n_items % 4 != 0) {
        throw std::invalid_argument("market: n_items must be a positive multiple of 4");
    }
    if (!(u > 0.0) || !(delta > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("market: u, delta and r must be > 0");
    }
    for (const auto& row : mean_discount) {
        for (double m : row) {
            if (!(m >= 0.0 && m <= r)) throw std::invalid_argument("market: mean discount outside [0, r]");
        }
    }
    if (cost_model == CostModel::Stochastic && !(noise_sd > 0.0)) {
        throw std::invalid_argument("market: noise_sd must be > 0");
    }
}

ReviewLevel MarketScenario::review(std::size_t item) const {
    return item < n_items / 2 ? ReviewLevel::High : ReviewLevel::Low;
}

bool MarketScenario::manhattan(std::size_t item) const {
    return item % (n_items / 2) < n_items / 4;
}

HemimetricMatrix MarketScenario::ground_truth() const {
    validate();
    SquareMatrix m(n_items);
    for (std::size_t i = 0; i < n_items; ++i) {
        for (std::size_t j = 0; j < n_items; ++j) {
            if (i == j) continue;
            m(i, j) = mean_discount[static_cast<int>(review(i))][static_cast<int>(review(j))];
        }
    }
    return HemimetricMatrix::validated(std::move(m), r);
}

std::vector<ProblemId> MarketScenario::offered_switches() const {
    std::vector<ProblemId> ids;
    for (std::size_t i = 0; i < n_items; ++i) {
        for (std::size_t j = 0; j < n_items; ++j) {
            if (i == j) continue;
            if (high_to_low_only &&
                !(review(i) == ReviewLevel::High && review(j) == ReviewLevel::Low)) {
                continue;
            }
            ids.push_back(pair_to_id(i, j, n_items));
        }
    }
    return ids;
}

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double truncated_mean(double location, double sd, double upper) {
    const double a = (0.0 - location) / sd;
    const double b = (upper - location) / sd;
    const double mass = normal_cdf(b) - normal_cdf(a);
    if (mass <= 0.0) return location < 0.0 ? 0.0 : upper;
    return location + sd * (normal_pdf(a) - normal_pdf(b)) / mass;
}

}  // namespace

TruncatedNormal::TruncatedNormal(double mean, double sd, double upper)
    : location_(mean), sd_(sd), upper_(upper) {
    if (!(sd > 0.0) || !(upper > 0.0) || !(mean > 0.0 && mean < upper)) {
        throw std::invalid_argument("truncated normal: need sd > 0 and 0 < mean < upper");
    }
    double lo = -10.0 * upper;
    double hi = 11.0 * upper;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (truncated_mean(mid, sd_, upper_) < mean ? lo : hi) = mid;
    }
    location_ = 0.5 * (lo + hi);
}

double TruncatedNormal::mean() const { return truncated_mean(location_, sd_, upper_); }

double TruncatedNormal::operator()(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal(location_, sd_);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double x = normal(rng);
        if (x >= 0.0 && x <= upper_) return x;
    }
    throw std::runtime_error("truncated normal: rejection sampling did not terminate");
}

MarketEnv::MarketEnv(MarketScenario scenario, OrderingPolicy ordering)
    : scenario_(std::move(scenario)),
      truth_(pair_count(scenario_.n_items), 1, scenario_.ground_truth().values().to_pairs()),
      sequence_(ordering, scenario_.offered_switches(), scenario_.rng_seed),
      cost_rng_(scenario_.rng_seed ^ 0x9e3779b97f4a7c15ULL) {
    if (scenario_.cost_model == CostModel::Stochastic) {
        noise_.reserve(truth_.size());
        for (std::size_t z = 0; z < truth_.size(); ++z) {
            noise_.emplace_back(truth_[z], scenario_.noise_sd, scenario_.r);
        }
    }
}

std::optional<Round> MarketEnv::next() {
    const ProblemId z = sequence_.next();
    const double cost =
        scenario_.cost_model == CostModel::Deterministic ? truth_[z] : noise_[z](cost_rng_);
    return Round{z, {}, cost};
}

CalibrationSummary calibration_targets(const MarketScenario& scenario, const JointWeights& offers,
                                       std::size_t draws) {
    MarketEnv env(scenario);
    if (offers.size() != pair_count(scenario.n_items)) {
        throw std::invalid_argument("calibration: one offer per problem required");
    }
    CalibrationSummary s;
    s.draws = draws;
    std::size_t accepted = 0;
    double cost_sum = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const Round round = *env.next();
        if (respond(offers[round.problem], round.cost)) {
            ++accepted;
            cost_sum += round.cost;
        }
    }
    s.acceptance_rate = draws ? static_cast<double>(accepted) / static_cast<double>(draws) : 0.0;
    s.mean_accepted_cost =
        accepted ? cost_sum / static_cast<double>(accepted) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

CalibrationSummary calibration_targets(const MarketScenario& scenario, double offer,
                                       std::size_t draws) {
    return calibration_targets(scenario, JointWeights(pair_count(scenario.n_items), 1, offer), draws);
}

LinearWorldEnv::LinearWorldEnv(JointWeights competitor, OrderingPolicy ordering,
                               std::uint64_t seed, double cost_noise)
    : truth_(std::move(competitor)),
      sequence_(ordering, all_problems(truth_.problems()), seed),
      rng_(seed ^ 0x2545f4914f6cdd1dULL),
      cost_noise_(cost_noise) {}

std::optional<Round> LinearWorldEnv::next() {
    Round round;
    round.problem = sequence_.next();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    round.features.resize(truth_.dim());
    for (auto& x : round.features) x = unit(rng_);
    round.cost = inner_product(truth_.block(round.problem), round.features);
    if (cost_noise_ > 0.0) round.cost += std::normal_distribution<double>(0.0, cost_noise_)(rng_);
    return round;
}

double LinearWorldEnv::feature_bound() const {
    return std::sqrt(static_cast<double>(truth_.dim()));
}

}  // namespace cool
