#include "cool/learners.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cool {

ProjectionSchedule ProjectionSchedule::never() {
    ProjectionSchedule s;
    s.mode = ScheduleMode::Never;
    s.alpha = 0.0;
    return s;
}

ProjectionSchedule ProjectionSchedule::always(AccuracyRule accuracy) {
    ProjectionSchedule s;
    s.mode = ScheduleMode::Always;
    s.accuracy = accuracy;
    return s;
}

ProjectionSchedule ProjectionSchedule::bernoulli(double c_alpha, std::int64_t horizon,
                                                 std::uint64_t seed) {
    ProjectionSchedule s;
    s.mode = ScheduleMode::Bernoulli;
    s.c_alpha = c_alpha;
    s.horizon = horizon;
    s.alpha = horizon > 0 ? c_alpha / std::sqrt(static_cast<double>(horizon)) : 0.0;
    s.rng_seed = seed;
    return s;
}

ProjectionSchedule ProjectionSchedule::every(std::int64_t k) {
    ProjectionSchedule s;
    s.mode = ScheduleMode::EveryKth;
    s.every_k = k;
    return s;
}

ProjectionSchedule& ProjectionSchedule::with_corollary_accuracy(double cb, double b) {
    accuracy = AccuracyRule::Corollary;
    c_beta = cb;
    beta = b;
    return *this;
}

void ProjectionSchedule::validate() const {
    if (mode == ScheduleMode::Bernoulli) {
        if (horizon < 1) throw std::invalid_argument("schedule: Bernoulli needs a horizon T >= 1");
        const double root = std::sqrt(static_cast<double>(horizon));
        if (!(c_alpha >= 0.0) || c_alpha > root) {
            throw std::invalid_argument("schedule: c_alpha must lie in [0, sqrt(T)]");
        }
        if (std::abs(alpha - c_alpha / root) > 1e-12) {
            throw std::invalid_argument("schedule: alpha must equal c_alpha / sqrt(T)");
        }
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha out of [0,1]");
    if (mode == ScheduleMode::EveryKth && every_k < 1) {
        throw std::invalid_argument("schedule: every_k must be >= 1");
    }
    if (accuracy == AccuracyRule::Corollary) {
        if (!(c_beta >= 0.0) || !std::isfinite(c_beta)) {
            throw std::invalid_argument("schedule: c_beta must be >= 0");
        }
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta out of [0,1]");
    }
}

double ProjectionSchedule::requested_accuracy(std::int64_t t, std::size_t problems,
                                              double set_norm) const {
    if (accuracy == AccuracyRule::Exact) return 0.0;
    const double one_minus = 1.0 - beta;
    return c_beta * one_minus * one_minus * std::sqrt(static_cast<double>(problems)) /
           std::sqrt(static_cast<double>(t)) * set_norm * set_norm;
}

const char* to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::OL: return "OL";
        case LearnerKind::IOL: return "IOL";
        case LearnerKind::CoOL: return "CoOL";
        case LearnerKind::UwCoOL: return "uwCoOL";
    }
    return "?";
}

void LearnerConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("learner: eta must be > 0");
    structure.validate();
    schedule.validate();
    loss.validate();
    if (!(gradient_bound > 0.0) || !std::isfinite(gradient_bound)) {
        throw std::invalid_argument("learner: gradient bound must be > 0");
    }
    if (initial_weights.problems() != structure.problems ||
        initial_weights.dim() != structure.dim) {
        throw std::invalid_argument("learner: initial weights do not match the structure");
    }
    if (!is_feasible(initial_weights, JointStructure::independent(structure.problems,
                                                                  structure.box))) {
        throw std::invalid_argument("learner: initial weights must lie in every S_z");
    }
}

LearnerConfig default_config(LearnerKind kind, JointStructure structure, LossSpec loss,
                             ProjectionSchedule schedule, double feature_bound) {
    LearnerConfig c;
    c.kind = kind;
    c.gradient_bound = loss.gradient_bound() * feature_bound;
    c.eta = set_norm(structure) / (2.0 * c.gradient_bound);
    const auto mid = structure.box.midpoint();
    std::vector<double> flat;
    flat.reserve(structure.problems * structure.dim);
    for (std::size_t z = 0; z < structure.problems; ++z) flat.insert(flat.end(), mid.begin(), mid.end());
    c.initial_weights = JointWeights(structure.problems, structure.dim, std::move(flat));
    c.structure = std::move(structure);
    c.loss = loss;
    c.schedule = schedule;
    return c;
}

LearnerState initial_state(const LearnerConfig& config) {
    LearnerState s;
    s.weights = config.initial_weights;
    s.counts.tau.assign(config.structure.problems, 0);
    return s;
}

namespace {

void gradient_step(LearnerState& state, std::span<const double> gradient, ProblemId z,
                   double eta) {
    auto block = state.weights.block(z);
    if (gradient.size() != block.size()) throw std::invalid_argument("gradient size != d");
    const double tau = static_cast<double>(++state.counts.tau[z]);
    const double rate = eta / std::sqrt(tau);
    for (std::size_t k = 0; k < block.size(); ++k) block[k] -= rate * gradient[k];
    ++state.t;
}

void clamp_block(LearnerState& state, ProblemId z, const BoxSet& box) {
    auto block = state.weights.block(z);
    for (std::size_t k = 0; k < block.size(); ++k) {
        block[k] = std::clamp(block[k], box.lower[k], box.upper[k]);
    }
}

}  // namespace

void ol_step(LearnerState& state, std::span<const double> gradient, ProblemId z, double eta,
             const BoxSet& box) {
    gradient_step(state, gradient, z, eta);
    clamp_block(state, z, box);
}

std::optional<ProjectionResult> cool_step(LearnerState& state, std::span<const double> gradient,
                                          ProblemId z, bool xi, double delta,
                                          const LearnerConfig& config) {
    const JointStructure& s = config.structure;
    if (!xi) {
        ol_step(state, gradient, z, config.eta, s.box);
        return std::nullopt;
    }
    gradient_step(state, gradient, z, config.eta);
    const DiagonalWeight q = config.kind == LearnerKind::UwCoOL
                                 ? DiagonalWeight::identity(s.problems, s.dim)
                                 : DiagonalWeight::from_counts(state.counts, s.dim);
    ProjectionResult result = weighted_project(state.weights, q, s, delta);
    state.weights = result.point;
    return result;
}

double inverse_sqrt_sum(std::int64_t T) {
    double acc = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) acc += 1.0 / std::sqrt(static_cast<double>(t));
    return acc;
}

namespace {

struct FixedTerms {
    double R1, R4, R4_corrected;
};

FixedTerms fixed_terms(std::int64_t T, std::size_t K, double eta, double S, double G) {
    const double root = std::sqrt(static_cast<double>(T) * static_cast<double>(K));
    const double observed = static_cast<double>(std::min<std::int64_t>(T, static_cast<std::int64_t>(K)));
    return {S * S * root / (2.0 * eta) + 2.0 * eta * G * G * root,
            S * S / (2.0 * eta) - 2.0 * eta * G * G * static_cast<double>(K),
            S * S / (2.0 * eta) - eta * G * G * observed};
}

double accuracy_term(double delta, std::int64_t t, std::size_t K, double S) {
    const double tk = static_cast<double>(t) * static_cast<double>(K);
    return delta + std::sqrt(2.0 * delta) * std::pow(tk, 0.25) * S;
}

}  // namespace

BoundCertificate theorem1_bound(std::int64_t T, std::size_t K, double eta, double set_norm,
                                double gradient_bound, const std::vector<bool>& xi,
                                std::span<const double> delta) {
    if (T < 0) throw std::invalid_argument("theorem1_bound: T must be >= 0");
    if (xi.size() != static_cast<std::size_t>(T) || delta.size() != xi.size()) {
        throw std::invalid_argument("theorem1_bound: xi and delta must have length T");
    }
    BoundCertificate c;
    if (T == 0) return c;
    const FixedTerms fixed = fixed_terms(T, K, eta, set_norm, gradient_bound);
    c.R1 = fixed.R1;
    c.R4 = fixed.R4;
    c.R4_corrected = fixed.R4_corrected;
    bool previous = false;
    double r3 = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (xi[i] && !previous) c.R2 += set_norm * gradient_bound;
        if (xi[i]) r3 += accuracy_term(std::max(0.0, delta[i]), static_cast<std::int64_t>(i) + 1, K, set_norm);
        previous = xi[i];
    }
    c.R3 = r3 / eta;
    c.total_bound = c.R1 + c.R2 + c.R3 + c.R4_corrected;
    c.uncorrected_total = c.R1 + c.R2 + c.R3 + c.R4;
    return c;
}

double iol_bound(std::int64_t T, std::size_t K, double set_norm, double gradient_bound) {
    if (T <= 0) return 0.0;
    return 1.5 * std::sqrt(static_cast<double>(T) * static_cast<double>(K)) * set_norm *
           gradient_bound;
}

double corollary1_bound(std::int64_t T, std::size_t K, double set_norm, double gradient_bound,
                        double c_alpha, double c_beta, double beta) {
    if (T <= 0) return 0.0;
    const double rootT = std::sqrt(static_cast<double>(T));
    const double rootK = std::sqrt(static_cast<double>(K));
    return 2.0 * rootT * rootK * set_norm * gradient_bound *
           (1.0 + c_alpha / (2.0 * rootK) * (1.0 - c_alpha / rootT) +
            c_alpha * (c_beta + std::sqrt(2.0 * c_beta)) * (1.0 - beta));
}

double theorem1_expectation(std::int64_t T, std::size_t K, double set_norm,
                            double gradient_bound, double c_alpha, double c_beta, double beta) {
    if (T <= 0) return 0.0;
    const double eta = set_norm / (2.0 * gradient_bound);
    const double alpha = c_alpha / std::sqrt(static_cast<double>(T));
    const FixedTerms fixed = fixed_terms(T, K, eta, set_norm, gradient_bound);
    const double r2 = set_norm * gradient_bound *
                      (alpha + static_cast<double>(T - 1) * alpha * (1.0 - alpha));
    ProjectionSchedule schedule = ProjectionSchedule::always();
    schedule.with_corollary_accuracy(c_beta, beta);
    double r3 = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) {
        r3 += accuracy_term(schedule.requested_accuracy(t, K, set_norm), t, K, set_norm);
    }
    return fixed.R1 + r2 + alpha * r3 / eta + fixed.R4_corrected;
}

RunResult run(const LearnerConfig& config, Environment& env, std::int64_t T,
              const ProjectionObserver& observer) {
    config.validate();
    if (T < 0) throw std::invalid_argument("run: T must be >= 0");
    const JointStructure& s = config.structure;
    const bool coordinated = config.kind == LearnerKind::CoOL || config.kind == LearnerKind::UwCoOL;
    const double S = set_norm(s);
    const JointWeights competitor = env.competitor();
    if (!is_feasible(competitor, s)) throw std::invalid_argument("run: competitor not in S*");

    LearnerState state = initial_state(config);
    std::mt19937_64 xi_rng(config.schedule.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    RunResult result;
    result.records.reserve(static_cast<std::size_t>(T));
    std::vector<bool> xi_seq;
    std::vector<double> delta_seq;
    std::vector<double> gradient(s.dim);
    double linearized = 0.0;

    for (std::int64_t t = 1; t <= T; ++t) {
        auto round = env.next();
        if (!round) {
            throw std::runtime_error("environment exhausted after " + std::to_string(t - 1) +
                                     " of " + std::to_string(T) + " rounds");
        }
        if (round->problem >= s.problems) throw std::out_of_range("run: problem id out of range");
        const bool linear = !round->features.empty();
        if (linear && round->features.size() != s.dim) {
            throw std::invalid_argument("run: feature length != d");
        }
        if (!linear && s.dim != 1) throw std::invalid_argument("run: d > 1 needs features");

        const auto block = state.weights.block(round->problem);
        const auto ref = competitor.block(round->problem);

        RoundRecord rec;
        rec.t = static_cast<std::size_t>(t);
        rec.problem = round->problem;
        rec.features = round->features;
        rec.cost = round->cost;
        rec.prediction = linear ? inner_product(block, round->features) : block[0];
        rec.accepted = env.respond(rec.prediction, rec.cost);
        rec.true_loss = true_loss(rec.prediction, rec.cost, config.loss.u);
        rec.surrogate_loss = surrogate_loss(rec.prediction, rec.cost, config.loss.u, config.loss.delta);
        rec.utility_gain = utility_gain(rec.accepted, rec.prediction, config.loss.u);
        // Learn from the response alone: +1 on accept, -u/delta on reject.
        rec.gradient_scale = rec.accepted ? 1.0 : -config.loss.u / config.loss.delta;

        double norm2 = 0.0;
        for (std::size_t k = 0; k < s.dim; ++k) {
            gradient[k] = rec.gradient_scale * (linear ? round->features[k] : 1.0);
            norm2 += gradient[k] * gradient[k];
            linearized += gradient[k] * (block[k] - ref[k]);
        }
        if (std::sqrt(norm2) > config.gradient_bound * (1.0 + 1e-12)) {
            throw std::logic_error("run: gradient exceeds the configured bound");
        }

        bool xi = false;
        double delta = 0.0;
        if (coordinated) {
            switch (config.schedule.mode) {
                case ScheduleMode::Never: xi = false; break;
                case ScheduleMode::Always: xi = true; break;
                case ScheduleMode::Bernoulli: xi = unit(xi_rng) < config.schedule.alpha; break;
                case ScheduleMode::EveryKth: xi = t % config.schedule.every_k == 0; break;
            }
            delta = config.schedule.requested_accuracy(t, s.problems, S);
        }
        rec.requested_accuracy = xi ? delta : 0.0;
        const auto projection = cool_step(state, gradient, round->problem, xi, delta, config);
        if (projection) {
            rec.projected = true;
            rec.duality_gap = projection->duality_gap;
            rec.projection_wall_time = projection->wall_time;
            if (observer) observer(t, *projection);
        }
        xi_seq.push_back(rec.projected);
        delta_seq.push_back(rec.duality_gap);
        result.records.push_back(std::move(rec));
    }

    result.certificate = theorem1_bound(T, s.problems, config.eta, S, config.gradient_bound,
                                        xi_seq, delta_seq);
    result.certificate.observed_linearized_regret = linearized;
    result.final_weights = std::move(state.weights);
    return result;
}

}  // namespace cool
