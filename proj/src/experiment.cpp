#include "cool/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cool {

const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Figure2a: return "figure2a";
        case ExperimentKind::Figure2b: return "figure2b";
        case ExperimentKind::Figure2c: return "figure2c";
        case ExperimentKind::SweepAlpha: return "sweep_alpha";
        case ExperimentKind::SweepBeta: return "sweep_beta";
        case ExperimentKind::ProjectionRuntime: return "projection_runtime";
        case ExperimentKind::Market: return "market";
    }
    return "?";
}

namespace {

std::optional<ExperimentKind> parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::Figure2a, ExperimentKind::Figure2b, ExperimentKind::Figure2c,
                   ExperimentKind::SweepAlpha, ExperimentKind::SweepBeta,
                   ExperimentKind::ProjectionRuntime, ExperimentKind::Market}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

std::optional<LearnerKind> parse_learner(const std::string& s) {
    for (auto k : {LearnerKind::OL, LearnerKind::IOL, LearnerKind::CoOL, LearnerKind::UwCoOL}) {
        if (s == to_string(k)) return k;
    }
    if (s == "uw-CoOL") return LearnerKind::UwCoOL;
    return std::nullopt;
}

bool is_sweep(ExperimentKind k) {
    return k == ExperimentKind::SweepAlpha || k == ExperimentKind::SweepBeta ||
           k == ExperimentKind::ProjectionRuntime;
}

// Reads YAML scalars into a config, recording every problem instead of
// stopping at the first.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    template <typename T>
    void read(const YAML::Node& node, const char* key, const std::string& where, T& out) {
        const YAML::Node value = node[key];
        if (!value) return;
        try {
            out = value.as<T>();
        } catch (const YAML::Exception&) {
            errors_.push_back(where + key + ": cannot parse '" + dump(value) + "'");
        }
    }

    template <typename T>
    void read(const YAML::Node& node, const char* key, const std::string& where,
              std::optional<T>& out) {
        if (!node[key]) return;
        T v{};
        read(node, key, where, v);
        out = v;
    }

    void allow(const YAML::Node& node, const std::string& where,
               std::initializer_list<const char*> keys) {
        if (!node) return;
        if (!node.IsMap()) {
            errors_.push_back((where.empty() ? std::string("config") : where) + " must be a mapping");
            return;
        }
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
                errors_.push_back("unknown key '" + where + key + "'");
            }
        }
    }

    static std::string dump(const YAML::Node& n) {
        YAML::Emitter e;
        e << YAML::Flow << n;
        return e.c_str();
    }

private:
    std::vector<std::string>& errors_;
};

void apply_defaults(ExperimentConfig& c, bool has_learners, bool has_ordering, bool has_seeds,
                    bool has_T, bool has_alpha_grid, bool has_beta_grid) {
    if (!has_seeds) {
        for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
    }
    switch (c.kind) {
        case ExperimentKind::Figure2b:
            if (!has_ordering) c.ordering = OrderingPolicy::batch(5);
            break;
        case ExperimentKind::Figure2c:
            if (!has_ordering) c.ordering = OrderingPolicy::single(0);
            if (!has_learners) c.learners = {LearnerKind::IOL, LearnerKind::CoOL, LearnerKind::UwCoOL};
            break;
        case ExperimentKind::SweepAlpha:
            if (!has_alpha_grid) c.alpha_grid = {0.0, 0.1, 0.25, 0.5, 1.0};
            if (!has_learners) c.learners = {LearnerKind::IOL};
            break;
        case ExperimentKind::SweepBeta:
        case ExperimentKind::ProjectionRuntime:
            if (!has_beta_grid) c.beta_grid = {0.5, 0.85, 0.95, 1.0};
            if (!has_learners) c.learners = {LearnerKind::IOL};
            break;
        case ExperimentKind::Market:
            if (!has_T) c.T = 323;
            break;
        case ExperimentKind::Figure2a:
            break;
    }
    if (c.learners.empty() && !has_learners) c.learners = {LearnerKind::IOL, LearnerKind::CoOL};
}

}  // namespace

ConfigResult parse_config(const std::string& yaml_text) {
    std::vector<std::string> errors;
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        return std::vector<std::string>{std::string("YAML syntax error: ") + e.what()};
    }
    if (!root || !root.IsMap()) return std::vector<std::string>{"config must be a YAML mapping"};

    Reader rd(errors);
    rd.allow(root, "", {"experiment", "name", "T", "world", "learners", "seeds", "ordering",
                        "loss", "eta", "init", "gradient_bound", "schedule", "alpha_grid",
                        "beta_grid", "market", "timing", "output"});

    ExperimentConfig c;
    std::string kind;
    rd.read(root, "experiment", "", kind);
    if (kind.empty()) {
        errors.push_back("experiment: missing (one of figure2a, figure2b, figure2c, sweep_alpha, "
                         "sweep_beta, projection_runtime, market)");
    } else if (auto k = parse_kind(kind)) {
        c.kind = *k;
    } else {
        errors.push_back("experiment: unknown kind '" + kind + "'");
    }
    rd.read(root, "name", "", c.name);
    rd.read(root, "T", "", c.T);

    bool has_K = false;
    if (const auto world = root["world"]) {
        rd.allow(world, "world.", {"n", "K", "r", "intra", "inter"});
        rd.read(world, "n", "world.", c.n);
        rd.read(world, "r", "world.", c.r);
        rd.read(world, "intra", "world.", c.intra);
        rd.read(world, "inter", "world.", c.inter);
        has_K = static_cast<bool>(world["K"]);
        rd.read(world, "K", "world.", c.K);
    }
    if (!has_K) c.K = pair_count(c.n);

    const bool has_learners = static_cast<bool>(root["learners"]);
    if (has_learners) {
        if (!root["learners"].IsSequence()) {
            errors.push_back("learners: must be a list");
        } else {
            for (const auto& item : root["learners"]) {
                const auto s = item.as<std::string>("");
                if (auto k = parse_learner(s)) {
                    c.learners.push_back(*k);
                } else {
                    errors.push_back("learners: unknown learner '" + s + "' (OL, IOL, CoOL, uwCoOL)");
                }
            }
        }
    }

    const bool has_seeds = static_cast<bool>(root["seeds"]);
    if (has_seeds) {
        const auto seeds = root["seeds"];
        if (seeds.IsSequence()) {
            for (const auto& item : seeds) {
                try {
                    c.seeds.push_back(item.as<std::uint64_t>());
                } catch (const YAML::Exception&) {
                    errors.push_back("seeds: cannot parse '" + Reader::dump(item) + "'");
                }
            }
        } else if (seeds.IsMap()) {
            rd.allow(seeds, "seeds.", {"count", "start"});
            std::int64_t count = 0;
            std::uint64_t start = 0;
            rd.read(seeds, "count", "seeds.", count);
            rd.read(seeds, "start", "seeds.", start);
            if (count < 1) errors.push_back("seeds.count: must be >= 1");
            for (std::int64_t k = 0; k < count; ++k) c.seeds.push_back(start + static_cast<std::uint64_t>(k));
        } else {
            errors.push_back("seeds: must be a list or {count, start}");
        }
    }

    const bool has_ordering = static_cast<bool>(root["ordering"]);
    if (has_ordering) {
        const auto ord = root["ordering"];
        rd.allow(ord, "ordering.", {"kind", "batch_size", "problem"});
        std::string ok = "random";
        rd.read(ord, "kind", "ordering.", ok);
        if (ok == "random") {
            c.ordering = OrderingPolicy::random();
        } else if (ok == "batch") {
            c.ordering = OrderingPolicy::batch(5);
        } else if (ok == "single") {
            c.ordering = OrderingPolicy::single(0);
        } else {
            errors.push_back("ordering.kind: unknown '" + ok + "' (random, batch, single)");
        }
        std::int64_t batch = static_cast<std::int64_t>(c.ordering.batch_size);
        std::int64_t problem = 0;
        rd.read(ord, "batch_size", "ordering.", batch);
        rd.read(ord, "problem", "ordering.", problem);
        if (batch < 1) errors.push_back("ordering.batch_size: must be >= 1");
        if (problem < 0) errors.push_back("ordering.problem: must be >= 0");
        c.ordering.batch_size = static_cast<std::size_t>(std::max<std::int64_t>(batch, 1));
        c.ordering.problem = static_cast<ProblemId>(std::max<std::int64_t>(problem, 0));
    }

    if (const auto loss = root["loss"]) {
        rd.allow(loss, "loss.", {"u", "delta", "report"});
        rd.read(loss, "u", "loss.", c.loss.u);
        rd.read(loss, "delta", "loss.", c.loss.delta);
        std::string report = "surrogate";
        rd.read(loss, "report", "loss.", report);
        if (report == "surrogate") {
            c.loss.kind = LossKind::ConvexSurrogate;
        } else if (report == "true") {
            c.loss.kind = LossKind::TrueIncentive;
        } else {
            errors.push_back("loss.report: unknown '" + report + "' (surrogate, true)");
        }
    }
    rd.read(root, "eta", "", c.eta);
    rd.read(root, "gradient_bound", "", c.gradient_bound);
    if (const auto init = root["init"]) {
        if (init.IsScalar() && init.Scalar() == "midpoint") {
            c.init.reset();
        } else {
            rd.read(root, "init", "", c.init);
        }
    }

    if (const auto sch = root["schedule"]) {
        rd.allow(sch, "schedule.", {"mode", "c_alpha", "alpha", "k", "c_beta", "beta"});
        std::string mode = "always";
        rd.read(sch, "mode", "schedule.", mode);
        if (mode == "always") {
            c.mode = ScheduleMode::Always;
        } else if (mode == "never") {
            c.mode = ScheduleMode::Never;
        } else if (mode == "bernoulli") {
            c.mode = ScheduleMode::Bernoulli;
        } else if (mode == "every_k") {
            c.mode = ScheduleMode::EveryKth;
        } else {
            errors.push_back("schedule.mode: unknown '" + mode + "' (always, never, bernoulli, every_k)");
        }
        const bool has_alpha = static_cast<bool>(sch["alpha"]);
        const bool has_c_alpha = static_cast<bool>(sch["c_alpha"]);
        rd.read(sch, "c_alpha", "schedule.", c.c_alpha);
        rd.read(sch, "alpha", "schedule.", c.alpha);
        if (has_alpha && has_c_alpha) {
            errors.push_back("schedule: give alpha or c_alpha, not both");
        } else if (has_alpha) {
            c.c_alpha = c.alpha * std::sqrt(static_cast<double>(std::max<std::int64_t>(c.T, 0)));
        } else if (has_c_alpha) {
            c.alpha = c.T > 0 ? c.c_alpha / std::sqrt(static_cast<double>(c.T)) : 0.0;
        }
        rd.read(sch, "k", "schedule.", c.every_k);
        rd.read(sch, "c_beta", "schedule.", c.c_beta);
        rd.read(sch, "beta", "schedule.", c.beta);
    }

    auto read_grid = [&](const char* key, std::vector<double>& grid) {
        const auto node = root[key];
        if (!node) return false;
        if (!node.IsSequence()) {
            errors.push_back(std::string(key) + ": must be a list");
            return true;
        }
        for (const auto& item : node) {
            try {
                grid.push_back(item.as<double>());
            } catch (const YAML::Exception&) {
                errors.push_back(std::string(key) + ": cannot parse '" + Reader::dump(item) + "'");
            }
        }
        return true;
    };
    const bool has_alpha_grid = read_grid("alpha_grid", c.alpha_grid);
    const bool has_beta_grid = read_grid("beta_grid", c.beta_grid);

    if (const auto m = root["market"]) {
        rd.allow(m, "market.", {"n_items", "r", "cost_model", "noise_sd", "switches",
                                "mean_discount"});
        rd.read(m, "n_items", "market.", c.market.n_items);
        rd.read(m, "r", "market.", c.market.r);
        rd.read(m, "noise_sd", "market.", c.market.noise_sd);
        std::string model = "deterministic";
        rd.read(m, "cost_model", "market.", model);
        if (model == "deterministic") {
            c.market.cost_model = CostModel::Deterministic;
        } else if (model == "stochastic") {
            c.market.cost_model = CostModel::Stochastic;
        } else {
            errors.push_back("market.cost_model: unknown '" + model + "' (deterministic, stochastic)");
        }
        std::string switches = "high_to_low";
        rd.read(m, "switches", "market.", switches);
        if (switches == "high_to_low") {
            c.market.high_to_low_only = true;
        } else if (switches == "all") {
            c.market.high_to_low_only = false;
        } else {
            errors.push_back("market.switches: unknown '" + switches + "' (high_to_low, all)");
        }
        if (const auto md = m["mean_discount"]) {
            rd.allow(md, "market.mean_discount.", {"high_high", "high_low", "low_high", "low_low"});
            rd.read(md, "high_high", "market.mean_discount.", c.market.mean_discount[0][0]);
            rd.read(md, "high_low", "market.mean_discount.", c.market.mean_discount[0][1]);
            rd.read(md, "low_high", "market.mean_discount.", c.market.mean_discount[1][0]);
            rd.read(md, "low_low", "market.mean_discount.", c.market.mean_discount[1][1]);
        }
    }
    rd.read(root, "timing", "", c.timing);
    std::string output;
    rd.read(root, "output", "", output);
    c.output = output.empty() ? std::filesystem::path(c.label() + ".csv") : std::filesystem::path(output);

    apply_defaults(c, has_learners, has_ordering, has_seeds, static_cast<bool>(root["T"]),
                   has_alpha_grid, has_beta_grid);
    c.market.u = c.loss.u;
    c.market.delta = c.loss.delta;

    for (auto& e : validate_config(c)) errors.push_back(std::move(e));
    if (!errors.empty()) return errors;
    return c;
}

ConfigResult load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::vector<std::string>{"cannot read config file '" + path.string() + "'"};
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> errors;
    auto err = [&](std::string s) { errors.push_back(std::move(s)); };
    const bool market = c.kind == ExperimentKind::Market;

    if (c.T < 0) err("T: must be >= 0");
    if (!market) {
        if (c.n < 2 || c.n % 2 != 0) err("world.n: must be even and >= 2");
        if (c.K != pair_count(c.n)) {
            err("world.K: K = " + std::to_string(c.K) + " does not match n^2 - n = " +
                std::to_string(pair_count(c.n)) + " for n = " + std::to_string(c.n));
        }
        if (!(c.r > 0.0) || !std::isfinite(c.r)) err("world.r: must be finite and > 0");
        if (!(c.intra >= 0.0 && c.intra <= c.r)) err("world.intra: must lie in [0, r]");
        if (!(c.inter >= 0.0 && c.inter <= c.r)) err("world.inter: must lie in [0, r]");
    } else {
        try {
            c.market.validate();
        } catch (const std::invalid_argument& e) {
            err(e.what());
        }
    }
    if (c.learners.empty() && !is_sweep(c.kind)) err("learners: must not be empty");
    const std::size_t K = market ? pair_count(c.market.n_items) : c.K;
    for (auto k : c.learners) {
        if (k == LearnerKind::OL && c.ordering.kind != OrderingKind::Single) {
            err("learners: OL learns a single problem and needs ordering.kind: single");
        }
    }
    if (c.seeds.empty()) err("seeds: must not be empty");
    std::set<std::uint64_t> distinct(c.seeds.begin(), c.seeds.end());
    if (distinct.size() != c.seeds.size()) err("seeds: must be distinct");
    if (c.ordering.kind == OrderingKind::Batch && c.ordering.batch_size < 1) {
        err("ordering.batch_size: must be >= 1");
    }
    if (c.ordering.kind == OrderingKind::Single && c.ordering.problem >= K) {
        err("ordering.problem: " + std::to_string(c.ordering.problem) + " out of range [0, " +
            std::to_string(K) + ")");
    }
    if (!std::isfinite(c.loss.u) || c.loss.u < 0.0) err("loss.u: must be >= 0");
    if (!(c.loss.delta > 0.0) || !std::isfinite(c.loss.delta)) err("loss.delta: must be > 0");
    if (c.eta && !(*c.eta > 0.0 && std::isfinite(*c.eta))) err("eta: must be > 0");
    if (c.gradient_bound && !(*c.gradient_bound >= c.loss.gradient_bound())) {
        err("gradient_bound: must be >= max(1, u/delta) = " + std::to_string(c.loss.gradient_bound()));
    }
    const double r = market ? c.market.r : c.r;
    if (c.init && !(*c.init >= 0.0 && *c.init <= r)) err("init: must lie in [0, r]");
    const double rootT = std::sqrt(static_cast<double>(std::max<std::int64_t>(c.T, 0)));
    if (c.mode == ScheduleMode::Bernoulli) {
        if (!(c.c_alpha >= 0.0 && c.c_alpha <= rootT)) err("schedule.c_alpha: must lie in [0, sqrt(T)]");
        if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) err("alpha out of [0,1]");
    }
    if (c.mode == ScheduleMode::EveryKth && c.every_k < 1) err("schedule.k: must be >= 1");
    if (!(c.c_beta >= 0.0) || !std::isfinite(c.c_beta)) err("schedule.c_beta: must be >= 0");
    if (!(c.beta >= 0.0 && c.beta <= 1.0)) err("beta out of [0,1]");
    if (c.kind == ExperimentKind::SweepAlpha) {
        if (c.alpha_grid.empty()) err("alpha_grid: must not be empty");
        for (double a : c.alpha_grid) {
            if (!(a >= 0.0 && a <= 1.0)) err("alpha_grid: alpha out of [0,1] (" + std::to_string(a) + ")");
        }
    }
    if (c.kind == ExperimentKind::SweepBeta || c.kind == ExperimentKind::ProjectionRuntime) {
        if (c.beta_grid.empty()) err("beta_grid: must not be empty");
        for (double b : c.beta_grid) {
            if (!(b >= 0.0 && b <= 1.0)) err("beta_grid: beta out of [0,1] (" + std::to_string(b) + ")");
        }
    }
    return errors;
}

namespace {

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

JointStructure structure_of(const ExperimentConfig& c) {
    if (c.kind == ExperimentKind::Market) return c.market.structure();
    return JointStructure::hemimetric(c.n, c.r);
}

LearnerConfig make_learner(const ExperimentConfig& c, LearnerKind kind, ProjectionSchedule schedule) {
    LearnerConfig lc = default_config(kind, structure_of(c), c.loss, schedule);
    if (c.gradient_bound) {
        lc.gradient_bound = *c.gradient_bound;
        lc.eta = set_norm(lc.structure) / (2.0 * lc.gradient_bound);
    }
    if (c.eta) lc.eta = *c.eta;
    if (c.init) {
        lc.initial_weights = JointWeights(lc.structure.problems, lc.structure.dim, *c.init);
    }
    return lc;
}

ProjectionSchedule base_schedule(const ExperimentConfig& c, LearnerKind kind) {
    if (kind == LearnerKind::OL || kind == LearnerKind::IOL) return ProjectionSchedule::never();
    ProjectionSchedule s;
    switch (c.mode) {
        case ScheduleMode::Never: s = ProjectionSchedule::never(); break;
        case ScheduleMode::Always: s = ProjectionSchedule::always(); break;
        case ScheduleMode::Bernoulli: s = ProjectionSchedule::bernoulli(c.c_alpha, c.T, 0); break;
        case ScheduleMode::EveryKth: s = ProjectionSchedule::every(c.every_k); break;
    }
    if (c.beta < 1.0) s.with_corollary_accuracy(c.c_beta, c.beta);
    return s;
}

// Separate stream for xi so that sweeps over alpha see the same environment
// and nested projection rounds.
std::uint64_t xi_seed(std::uint64_t seed) { return seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL; }

std::unique_ptr<Environment> make_env(const ExperimentConfig& c, std::uint64_t seed) {
    if (c.kind == ExperimentKind::Market) {
        MarketScenario m = c.market;
        m.rng_seed = seed;
        return std::make_unique<MarketEnv>(m, c.ordering);
    }
    return std::make_unique<HemimetricWorldEnv>(
        HemimetricWorld::two_clusters(c.n, c.intra, c.inter, c.r), c.ordering, seed);
}

}  // namespace

std::vector<RunSpec> plan_runs(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, LearnerConfig>> groups;
    for (auto kind : c.learners) {
        groups.emplace_back(to_string(kind), make_learner(c, kind, base_schedule(c, kind)));
    }
    if (c.kind == ExperimentKind::SweepAlpha) {
        for (double a : c.alpha_grid) {
            const double c_alpha = a * std::sqrt(static_cast<double>(c.T));
            ProjectionSchedule s = ProjectionSchedule::bernoulli(c_alpha, std::max<std::int64_t>(c.T, 1), 0);
            s.alpha = a;  // exact grid value; c_alpha / sqrt(T) may differ in the last bit
            s.c_alpha = a * std::sqrt(static_cast<double>(s.horizon));
            if (c.beta < 1.0) s.with_corollary_accuracy(c.c_beta, c.beta);
            groups.emplace_back("CoOL[alpha=" + format_g(a) + "]", make_learner(c, LearnerKind::CoOL, s));
        }
    }
    if (c.kind == ExperimentKind::SweepBeta || c.kind == ExperimentKind::ProjectionRuntime) {
        for (double b : c.beta_grid) {
            ProjectionSchedule s = ProjectionSchedule::always();
            if (b < 1.0) s.with_corollary_accuracy(c.c_beta, b);
            groups.emplace_back("CoOL[beta=" + format_g(b) + "]", make_learner(c, LearnerKind::CoOL, s));
        }
    }
    std::vector<RunSpec> specs;
    for (const auto& [label, lc] : groups) {
        for (auto seed : c.seeds) {
            RunSpec spec{label, lc, seed};
            spec.config.schedule.rng_seed = xi_seed(seed);
            specs.push_back(std::move(spec));
        }
    }
    return specs;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads,
                                const RunObserver& observer) {
    if (auto errors = validate_config(config); !errors.empty()) {
        throw std::invalid_argument("invalid config: " + errors.front());
    }
    ExperimentResult result;
    result.config = config;
    const auto specs = plan_runs(config);
    for (const auto& s : specs) {
        if (std::find(result.learners.begin(), result.learners.end(), s.learner) == result.learners.end()) {
            result.learners.push_back(s.learner);
        }
    }
    result.runs.resize(specs.size());

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(specs.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            try {
                auto env = make_env(config, specs[i].seed);
                ProjectionObserver watch;
                if (observer) {
                    watch = [&](std::int64_t t, const ProjectionResult& p) { observer(specs[i], t, p); };
                }
                RunOutcome out{specs[i], run(specs[i].config, *env, config.T, watch), {}, {}};
                out.regret = cumulative_regret(out.result.records, env->competitor(), config.loss);
                double acc = 0.0;
                out.utility.reserve(out.result.records.size());
                for (const auto& rec : out.result.records) out.utility.push_back(acc += rec.utility_gain);
                result.runs[i] = std::move(out);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(specs.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
        worker();
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return result;
}

bool ExperimentResult::certificates_hold() const {
    return std::all_of(runs.begin(), runs.end(),
                       [](const RunOutcome& r) { return r.result.certificate.holds(); });
}

double ExperimentResult::mean_final_regret(const std::string& learner) const {
    double acc = 0.0;
    int count = 0;
    for (const auto& r : runs) {
        if (r.spec.learner != learner) continue;
        acc += r.regret.empty() ? 0.0 : r.regret.back();
        ++count;
    }
    return count ? acc / count : std::nan("");
}

double ExperimentResult::mean_final_utility(const std::string& learner) const {
    double acc = 0.0;
    int count = 0;
    for (const auto& r : runs) {
        if (r.spec.learner != learner) continue;
        acc += r.utility.empty() ? 0.0 : r.utility.back();
        ++count;
    }
    return count ? acc / count : std::nan("");
}

double ExperimentResult::median_projection_us(const std::string& learner) const {
    std::vector<double> times;
    for (const auto& r : runs) {
        if (r.spec.learner != learner) continue;
        for (const auto& rec : r.result.records) {
            if (rec.projected) times.push_back(static_cast<double>(rec.projection_wall_time.count()) / 1000.0);
        }
    }
    if (times.empty()) return std::nan("");
    const auto mid = times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2);
    std::nth_element(times.begin(), mid, times.end());
    if (times.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(times.begin(), mid);
    return 0.5 * (lower + upper);
}

void write_csv(const ExperimentResult& result, std::ostream& out) {
    const auto& c = result.config;
    const std::string exp = c.label();
    out << "experiment,learner,seed,t,regret,utility_gain,projected,gap,proj_time_us\n";
    auto time_us = [&](const RoundRecord& rec) {
        return c.timing ? static_cast<double>(rec.projection_wall_time.count()) / 1000.0 : 0.0;
    };
    for (const auto& learner : result.learners) {
        std::vector<const RunOutcome*> group;
        for (const auto& r : result.runs) {
            if (r.spec.learner == learner) group.push_back(&r);
        }
        for (const auto* r : group) {
            for (std::size_t i = 0; i < r->result.records.size(); ++i) {
                const auto& rec = r->result.records[i];
                out << exp << ',' << learner << ',' << r->spec.seed << ',' << rec.t << ','
                    << format_g(r->regret[i]) << ',' << format_g(r->utility[i]) << ','
                    << (rec.projected ? 1 : 0) << ',' << format_g(rec.duality_gap) << ','
                    << format_g(time_us(rec)) << '\n';
            }
        }
        if (group.empty()) continue;
        const std::size_t T = group.front()->result.records.size();
        const double m = static_cast<double>(group.size());
        for (std::size_t i = 0; i < T; ++i) {
            double regret = 0, utility = 0, projected = 0, gap = 0, time = 0;
            for (const auto* r : group) {
                const auto& rec = r->result.records[i];
                regret += r->regret[i];
                utility += r->utility[i];
                projected += rec.projected ? 1.0 : 0.0;
                gap += rec.duality_gap;
                time += time_us(rec);
            }
            out << exp << ',' << learner << ",mean," << (i + 1) << ',' << format_g(regret / m) << ','
                << format_g(utility / m) << ',' << format_g(projected / m) << ',' << format_g(gap / m)
                << ',' << format_g(time / m) << '\n';
        }
    }
}

void write_report(const ExperimentResult& result, std::ostream& out) {
    const auto& c = result.config;
    out << "experiment " << c.label() << " (" << to_string(c.kind) << "), T = " << c.T
        << ", seeds = " << c.seeds.size() << ", runs = " << result.runs.size() << "\n\n";
    out << "Regret certificates (corrected R4 enters the total; uncorrected R4 shown alongside)\n";
    out << "learner,seed,R1,R2,R3,R4,R4_corrected,total_bound,uncorrected_total,linearized_regret,holds\n";
    std::size_t violations = 0;
    for (const auto& r : result.runs) {
        const auto& b = r.result.certificate;
        if (!b.holds()) ++violations;
        out << r.spec.learner << ',' << r.spec.seed << ',' << format_g(b.R1) << ',' << format_g(b.R2)
            << ',' << format_g(b.R3) << ',' << format_g(b.R4) << ',' << format_g(b.R4_corrected) << ','
            << format_g(b.total_bound) << ',' << format_g(b.uncorrected_total) << ','
            << format_g(b.observed_linearized_regret) << ',' << (b.holds() ? "yes" : "NO") << '\n';
    }
    out << "\nSummary\n";
    for (const auto& learner : result.learners) {
        out << learner << ": mean final regret " << format_g(result.mean_final_regret(learner))
            << ", mean final utility gain " << format_g(result.mean_final_utility(learner));
        if (c.timing) {
            const double med = result.median_projection_us(learner);
            if (!std::isnan(med)) out << ", median projection " << format_g(med) << " us";
        }
        out << '\n';
    }
    if (c.kind == ExperimentKind::SweepAlpha && !result.runs.empty()) {
        const auto& lc = result.runs.front().spec.config;
        const double S = set_norm(lc.structure);
        out << "\nClosed-form bound and expected certificate at eta = ||S||/(2||g||), c_beta = " << format_g(c.c_beta)
            << ", beta = " << format_g(c.beta) << "\n";
        out << "alpha,closed_form_bound,expected_certificate\n";
        const double cb = c.beta < 1.0 ? c.c_beta : 0.0;
        for (double a : c.alpha_grid) {
            const double ca = a * std::sqrt(static_cast<double>(c.T));
            out << format_g(a) << ','
                << format_g(corollary1_bound(c.T, lc.structure.problems, S, lc.gradient_bound, ca, cb, c.beta))
                << ','
                << format_g(theorem1_expectation(c.T, lc.structure.problems, S, lc.gradient_bound, ca, cb, c.beta))
                << '\n';
        }
    }
    out << "\ncertificate violations: " << violations << '\n';
}

}  // namespace cool
