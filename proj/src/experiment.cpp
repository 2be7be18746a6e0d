#include "ddctrl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>
#include <omp.h>

namespace ddctrl {

using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

enum Stream : std::uint64_t { kDataStream = 1, kNoiseStream = 2, kPrefixNoiseStream = 3, kInitialStream = 4 };

template <class E>
struct Names {
    E value;
    const char* name;
};

constexpr Names<ScenarioKind> kScenarioNames[] = {
    {ScenarioKind::lambda_sweep, "lambda_sweep"},
    {ScenarioKind::two_norm_vs_proj, "two_norm_vs_proj"},
    {ScenarioKind::hybrid_grid, "hybrid_grid"},
    {ScenarioKind::data_length_sweep, "data_length_sweep"},
    {ScenarioKind::noise_sweep, "noise_sweep"},
    {ScenarioKind::nonlinearity_sweep, "nonlinearity_sweep"},
};
constexpr Names<PlantKind> kPlantNames[] = {
    {PlantKind::benchmark, "benchmark"},
    {PlantKind::lotka_volterra, "lotka_volterra"},
};
constexpr Names<ReferenceKind> kReferenceNames[] = {
    {ReferenceKind::sine, "sine"},
    {ReferenceKind::equilibrium, "equilibrium"},
    {ReferenceKind::zero, "zero"},
};

template <class E, std::size_t K>
const char* name_of(const Names<E> (&table)[K], E v) {
    for (const auto& e : table) {
        if (e.value == v) return e.name;
    }
    return "unknown";
}

template <class E, std::size_t K>
E parse_name(const Names<E> (&table)[K], const std::string& s, const char* what) {
    for (const auto& e : table) {
        if (s == e.name) return e.value;
    }
    throw Error(ErrorKind::config, std::string("unknown ") + what + " '" + s + "'");
}

const std::set<std::string> kMethods{"direct_l1",   "direct_two_norm", "direct_proj", "direct_hybrid",
                                     "direct_none", "spc",             "subspace_id"};

bool is_direct(const std::string& m) { return m.rfind("direct_", 0) == 0; }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// One noise-free experiment: data record, the prefix that follows it and the
// true state at the first horizon sample.
struct Experiment {
    Trajectory data;
    Trajectory w_ini;
    Vector x_start;
};

Experiment benchmark_experiment(const StateSpaceModel& plant, Index T, Index tini, double input_std,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, input_std);
    Matrix u(T + tini, plant.inputs());
    for (Index t = 0; t < u.rows(); ++t) {
        for (Index j = 0; j < u.cols(); ++j) u(t, j) = normal(rng);
    }
    Vector x_end;
    const Trajectory full = simulate_lti(plant, Vector::Zero(plant.states()), u, &x_end);
    return Experiment{full.slice(0, T), full.slice(T, tini), x_end};
}

Experiment lv_experiment(const LotkaVolterraParams& p, const Vector& x0, Index T, Index tini, double sigma,
                         std::uint64_t seed) {
    const Vector u = lotka_volterra_input(T + tini, p.dt, sigma, seed);
    Vector x_end;
    const Trajectory full = simulate_lotka_volterra(p, x0, u, &x_end);
    return Experiment{full.slice(0, T), full.slice(T, tini), x_end};
}

struct MethodOutcome {
    Vector u;
    double predicted_cost = 0.0;
};

Regularizer regularizer_for(const std::string& method, double lambda, double lambda2) {
    if (method == "direct_l1") return Regularizer::one_norm(lambda);
    if (method == "direct_two_norm") return Regularizer::two_norm_sq(lambda);
    if (method == "direct_proj") return Regularizer::proj_two_norm_sq(lambda);
    if (method == "direct_hybrid") return Regularizer::hybrid(lambda, lambda2);
    return Regularizer::none();
}

// Hyper-parameter points (param a, param b) a method is evaluated at for one
// setting of the swept variable.
struct MethodPoint {
    std::string method;
    double lambda = 0.0;
    double lambda2 = 0.0;
    Index order = 0;
};

std::vector<MethodPoint> method_points(const ExperimentConfig& cfg) {
    std::vector<MethodPoint> pts;
    for (const auto& m : cfg.methods) {
        if (m == "direct_hybrid") {
            for (double l1 : cfg.lambdas) {
                for (double l2 : cfg.lambdas2) pts.push_back({m, l1, l2, 0});
            }
        } else if (m == "direct_none") {
            pts.push_back({m, 0.0, 0.0, 0});
        } else if (is_direct(m)) {
            for (double l : cfg.lambdas) pts.push_back({m, l, 0.0, 0});
        } else if (m == "subspace_id") {
            for (Index n : cfg.orders) pts.push_back({m, 0.0, 0.0, n});
        } else {
            pts.push_back({m, 0.0, 0.0, 0});
        }
    }
    return pts;
}

// Report coordinates of a method point within a scenario.
std::pair<double, double> report_params(const ExperimentConfig& cfg, const MethodPoint& pt, double setting) {
    const double hyper = pt.method == "subspace_id" ? static_cast<double>(pt.order) : pt.lambda;
    switch (cfg.scenario) {
        case ScenarioKind::lambda_sweep:
        case ScenarioKind::two_norm_vs_proj:
            return {is_direct(pt.method) ? pt.lambda : 0.0, pt.method == "subspace_id" ? hyper : 0.0};
        case ScenarioKind::hybrid_grid:
            if (pt.method == "direct_hybrid") return {pt.lambda, pt.lambda2};
            return {is_direct(pt.method) ? pt.lambda : 0.0, pt.method == "subspace_id" ? hyper : 0.0};
        case ScenarioKind::data_length_sweep:
        case ScenarioKind::noise_sweep:
        case ScenarioKind::nonlinearity_sweep:
            return {setting, hyper};
    }
    return {0.0, 0.0};
}

struct Setting {
    double value = 0.0;  // swept variable, reported as param1 where applicable
    Index T = 0;
    double nsr = 0.0;
    double epsilon = 0.0;
};

std::vector<Setting> settings_of(const ExperimentConfig& cfg) {
    std::vector<Setting> out;
    const double nsr0 = cfg.nsr.front();
    const double eps0 = cfg.epsilons.front();
    switch (cfg.scenario) {
        case ScenarioKind::data_length_sweep:
            for (Index T : cfg.data_lengths) out.push_back({static_cast<double>(T), T, nsr0, eps0});
            break;
        case ScenarioKind::noise_sweep:
            for (double s : cfg.nsr) out.push_back({s, cfg.data_length, s, eps0});
            break;
        case ScenarioKind::nonlinearity_sweep:
            for (double e : cfg.epsilons) out.push_back({e, cfg.data_length, nsr0, e});
            break;
        default:
            out.push_back({0.0, cfg.data_length, nsr0, eps0});
            break;
    }
    return out;
}

}  // namespace

const char* to_string(ScenarioKind k) { return name_of(kScenarioNames, k); }
const char* to_string(PlantKind k) { return name_of(kPlantNames, k); }
const char* to_string(ReferenceKind k) { return name_of(kReferenceNames, k); }

bool is_known_method(const std::string& tag) { return kMethods.count(tag) > 0; }

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, msg); };
    if (trials < 1) fail("trials must be >= 1");
    if (tini < 1 || horizon < 1) fail("tini and horizon must be positive");
    if (methods.empty()) fail("methods must not be empty");
    for (const auto& m : methods) {
        if (!is_known_method(m)) fail("unknown method '" + m + "'");
    }
    const Index q = plant == PlantKind::benchmark ? 2 : 3;
    if (static_cast<Index>(weights.size()) != q) fail("weights needs one entry per channel (" + std::to_string(q) + ")");
    for (double w : weights) {
        if (!(w >= 0.0)) fail("weights must be nonnegative");
    }
    if (nsr.empty() || epsilons.empty()) fail("nsr and epsilons must not be empty");
    for (double s : nsr) {
        if (!(s >= 0.0)) fail("nsr entries must be nonnegative");
    }
    for (double e : epsilons) {
        if (!(e >= 0.0 && e <= 1.0)) fail("epsilon entries must lie in [0, 1]");
    }
    const bool any_direct = std::any_of(methods.begin(), methods.end(), is_direct);
    const bool any_lambda = std::any_of(methods.begin(), methods.end(),
                                        [](const std::string& m) { return is_direct(m) && m != "direct_none"; });
    if (any_lambda && lambdas.empty()) fail("lambdas must not be empty");
    for (double l : lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) fail("lambdas must be finite and nonnegative");
    }
    if (std::find(methods.begin(), methods.end(), "direct_hybrid") != methods.end() && lambdas2.empty()) {
        fail("lambdas2 must not be empty for direct_hybrid");
    }
    for (double l : lambdas2) {
        if (!(l >= 0.0) || !std::isfinite(l)) fail("lambdas2 must be finite and nonnegative");
    }
    if (std::find(methods.begin(), methods.end(), "subspace_id") != methods.end()) {
        if (orders.empty()) fail("orders must not be empty for subspace_id");
        for (Index n : orders) {
            if (n < 1) fail("orders must be positive");
        }
    }
    if (scenario == ScenarioKind::nonlinearity_sweep && plant != PlantKind::lotka_volterra) {
        fail("nonlinearity_sweep requires the lotka_volterra plant");
    }
    if (scenario == ScenarioKind::data_length_sweep && data_lengths.empty()) fail("data_lengths must not be empty");
    if (!(input_std > 0.0) || !(lv_input_sigma >= 0.0) || !(lv_initial_spread >= 0.0)) {
        fail("input_std must be positive; lv_input_sigma and lv_initial_spread nonnegative");
    }

    // Data must allow a depth-(Tini+L) Hankel matrix of full rank m(Tini+L)+n.
    std::vector<Index> lengths = scenario == ScenarioKind::data_length_sweep ? data_lengths
                                                                             : std::vector<Index>{data_length};
    for (Index T : lengths) {
        if (T < tini + horizon) fail("data length " + std::to_string(T) + " is shorter than tini + horizon");
        if (plant == PlantKind::benchmark && any_direct) {
            const Index need = minimum_data_length(1, 5, tini, horizon);
            if (T < need) {
                fail("data length " + std::to_string(T) + " is below the persistency bound " + std::to_string(need));
            }
        }
    }
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
    if (std::isinf(values[hi])) return values[hi];
    return values[lo] + frac * (values[hi] - values[lo]);
}

Trajectory add_measurement_noise(const Trajectory& w, double nsr, std::uint64_t seed, bool include_inputs) {
    if (!(nsr >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise-to-signal ratio must be nonnegative");
    if (nsr == 0.0) return w;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto perturb = [&](Matrix M) {
        for (Index c = 0; c < M.cols(); ++c) {
            const double rms = std::sqrt(M.col(c).squaredNorm() / static_cast<double>(M.rows()));
            for (Index t = 0; t < M.rows(); ++t) M(t, c) += nsr * rms * normal(rng);
        }
        return M;
    };
    Trajectory out = w.with_outputs(perturb(w.output_samples()));
    if (include_inputs && w.inputs() > 0) out = out.with_inputs(perturb(w.input_samples()));
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // SplitMix64 finalizer over the combined words.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t trial_seed(std::uint64_t master, Index trial) {
    return derive_seed(master, 1000 + static_cast<std::uint64_t>(trial));
}

ControlSpec make_control_spec(const ExperimentConfig& cfg) {
    const Index m = 1;
    const Index p = cfg.plant == PlantKind::benchmark ? 1 : 2;
    const Index L = cfg.horizon;
    Matrix U = Matrix::Zero(L, m);
    Matrix Y = Matrix::Zero(L, p);
    switch (cfg.reference) {
        case ReferenceKind::sine:
            for (Index t = 0; t < L; ++t) {
                const double s = L > 1 ? std::sin(2.0 * kPi * static_cast<double>(t) / static_cast<double>(L - 1)) : 0.0;
                Y.row(t).setConstant(s);
            }
            break;
        case ReferenceKind::equilibrium: {
            Vector xbar = LotkaVolterraParams{}.equilibrium();
            if (p != 2) throw Error(ErrorKind::config, "equilibrium reference needs the lotka_volterra plant");
            for (Index t = 0; t < L; ++t) Y.row(t) = xbar.transpose();
            break;
        }
        case ReferenceKind::zero:
            break;
    }
    const Vector w = Eigen::Map<const Vector>(cfg.weights.data(), static_cast<Index>(cfg.weights.size()));
    return ControlSpec::kron(cfg.tini, L, Trajectory(std::move(U), std::move(Y)), w);
}

std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, Index trial) {
    using Clock = std::chrono::steady_clock;
    const std::uint64_t tseed = trial_seed(cfg.seed, trial);
    const ControlSpec spec = make_control_spec(cfg);
    const StateSpaceModel bench = make_benchmark_plant();
    const auto points = method_points(cfg);
    const std::string scenario = to_string(cfg.scenario);
    const std::uint64_t data_seed = derive_seed(cfg.fresh_data ? tseed : cfg.seed, kDataStream);

    Vector lv_x0;
    if (cfg.plant == PlantKind::lotka_volterra) {
        std::mt19937_64 rng(derive_seed(tseed, kInitialStream));
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        const Vector xbar = LotkaVolterraParams{}.equilibrium();
        lv_x0 = xbar;
        for (Index i = 0; i < 2; ++i) lv_x0(i) *= 1.0 + cfg.lv_initial_spread * unif(rng);
    }

    std::vector<TrialResult> out;
    for (const Setting& s : settings_of(cfg)) {
        Experiment ex{spec.reference, spec.reference, Vector()};
        TruePlant plant = bench;
        if (cfg.plant == PlantKind::benchmark) {
            ex = benchmark_experiment(bench, s.T, cfg.tini, cfg.input_std, data_seed);
        } else {
            LotkaVolterraParams p;
            p.epsilon = s.epsilon;
            ex = lv_experiment(p, lv_x0, s.T, cfg.tini, cfg.lv_input_sigma, data_seed);
            plant = p;
        }
        const Trajectory data = add_measurement_noise(ex.data, s.nsr, derive_seed(tseed, kNoiseStream),
                                                      cfg.noisy_inputs);
        const Trajectory w_ini = cfg.noisy_prefix
                                     ? add_measurement_noise(ex.w_ini, s.nsr, derive_seed(tseed, kPrefixNoiseStream),
                                                             cfg.noisy_inputs)
                                     : ex.w_ini;

        double c_star = 0.0;
        if (cfg.plant == PlantKind::benchmark) c_star = solve_model_control(bench, ex.x_start, spec).predicted_cost;

        std::optional<DeepcData> deepc_data;
        std::optional<SpcPredictor> spc;
        for (const MethodPoint& pt : points) {
            TrialResult r;
            r.scenario = scenario;
            r.trial = trial;
            r.seed = tseed;
            r.method = pt.method;
            std::tie(r.param1, r.param2) = report_params(cfg, pt, s.value);
            const auto t0 = Clock::now();
            try {
                MethodOutcome mo;
                if (is_direct(pt.method)) {
                    if (!deepc_data) deepc_data.emplace(partition_past_future(data, cfg.tini, cfg.horizon));
                    const DeepcSolution sol =
                        solve_deepc(*deepc_data, w_ini, spec, regularizer_for(pt.method, pt.lambda, pt.lambda2));
                    if (!sol.report.converged) {
                        throw Error(ErrorKind::invalid_argument, "solver did not converge (residuals " +
                                                                     format_double(sol.report.constraint_residual) +
                                                                     ", " + format_double(sol.report.optimality_residual) +
                                                                     ")");
                    }
                    mo = {sol.u(), sol.predicted_cost};
                } else if (pt.method == "spc") {
                    if (!spc) spc = fit_spc_predictor(partition_past_future(data, cfg.tini, cfg.horizon));
                    const ControlResult res = solve_spc_control(*spc, w_ini, spec);
                    mo = {res.u, res.predicted_cost};
                } else {
                    const StateSpaceModel model = subspace_id(data, pt.order, cfg.tini, cfg.horizon);
                    const ControlResult res =
                        certainty_equivalence_control(model, w_ini, spec, StateEstimate::least_norm);
                    mo = {res.u, res.predicted_cost};
                }
                const Realized real = realized_error(plant, mo.u, ex.x_start, spec, c_star);
                r.predicted_err_pct = error_percentage(mo.predicted_cost, c_star);
                if (!std::isfinite(r.predicted_err_pct)) throw Error(ErrorKind::invalid_argument, "non-finite prediction");
                // A true-plant response that overflows scores as an infinite cost.
                r.realized_err_pct = real.error_pct;
                if (!std::isfinite(r.realized_err_pct)) {
                    r.realized_err_pct = std::numeric_limits<double>::infinity();
                    r.message = "true-plant response diverged";
                }
            } catch (const std::exception& e) {
                r.ok = false;
                r.message = e.what();
                r.predicted_err_pct = std::nan("");
                r.realized_err_pct = std::nan("");
            }
            if (cfg.record_timing) {
                r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::vector<TrialResult> run_scenario(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    std::vector<std::vector<TrialResult>> per_trial(static_cast<std::size_t>(cfg.trials));
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
    for (Index t = 0; t < cfg.trials; ++t) per_trial[static_cast<std::size_t>(t)] = run_trial(cfg, t);
    std::vector<TrialResult> out;
    for (auto& v : per_trial) {
        for (auto& r : v) out.push_back(std::move(r));
    }
    return out;
}

std::vector<TrialResult> reference::run_scenario(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<TrialResult> out;
    for (Index t = 0; t < cfg.trials; ++t) {
        auto v = run_trial(cfg, t);
        out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialResult>& results) {
    using Key = std::tuple<std::string, double, double>;
    struct Acc {
        std::vector<double> realized;
        std::vector<double> predicted;
        Index failures = 0;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : results) {
        Acc& a = groups[Key{r.method, r.param1, r.param2}];
        if (!r.ok) {
            ++a.failures;
            continue;
        }
        a.realized.push_back(r.realized_err_pct);
        a.predicted.push_back(r.predicted_err_pct);
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, a] : groups) {
        AggregateRow row;
        std::tie(row.method, row.param1, row.param2) = key;
        row.count = static_cast<Index>(a.realized.size());
        row.failures = a.failures;
        auto mean = [](const std::vector<double>& v) {
            if (v.empty()) return std::nan("");
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        row.realized_mean = mean(a.realized);
        row.realized_median = quantile(a.realized, 0.5);
        row.realized_q1 = quantile(a.realized, 0.25);
        row.realized_q3 = quantile(a.realized, 0.75);
        row.predicted_mean = mean(a.predicted);
        row.predicted_median = quantile(a.predicted, 0.5);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

json config_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = to_string(c.scenario);
    j["plant"] = to_string(c.plant);
    j["data_length"] = c.data_length;
    j["tini"] = c.tini;
    j["horizon"] = c.horizon;
    j["weights"] = c.weights;
    j["reference"] = to_string(c.reference);
    j["nsr"] = c.nsr;
    j["lambdas"] = c.lambdas;
    j["lambdas2"] = c.lambdas2;
    j["data_lengths"] = c.data_lengths;
    j["epsilons"] = c.epsilons;
    j["orders"] = c.orders;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["methods"] = c.methods;
    j["fresh_data"] = c.fresh_data;
    j["noisy_inputs"] = c.noisy_inputs;
    j["noisy_prefix"] = c.noisy_prefix;
    j["input_std"] = c.input_std;
    j["lv_input_sigma"] = c.lv_input_sigma;
    j["lv_initial_spread"] = c.lv_initial_spread;
    j["record_timing"] = c.record_timing;
    return j;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");

    ExperimentConfig c;
    const json defaults = config_json(c);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!defaults.contains(it.key())) throw Error(ErrorKind::config, "unknown config field '" + it.key() + "'");
    }
    auto get = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config, std::string("config field '") + key + "': " + e.what());
        }
    };
    std::string scenario = to_string(c.scenario), plant = to_string(c.plant), reference = to_string(c.reference);
    get("scenario", scenario);
    get("plant", plant);
    get("reference", reference);
    c.scenario = parse_name(kScenarioNames, scenario, "scenario");
    c.plant = parse_name(kPlantNames, plant, "plant");
    c.reference = parse_name(kReferenceNames, reference, "reference");
    if (c.plant == PlantKind::lotka_volterra && !j.contains("reference")) c.reference = ReferenceKind::equilibrium;
    if (c.plant == PlantKind::lotka_volterra && !j.contains("weights")) c.weights = {1.0, 1.0, 1.0};
    get("data_length", c.data_length);
    get("tini", c.tini);
    get("horizon", c.horizon);
    get("weights", c.weights);
    get("nsr", c.nsr);
    get("lambdas", c.lambdas);
    get("lambdas2", c.lambdas2);
    get("data_lengths", c.data_lengths);
    get("epsilons", c.epsilons);
    get("orders", c.orders);
    get("trials", c.trials);
    get("seed", c.seed);
    get("methods", c.methods);
    get("fresh_data", c.fresh_data);
    get("noisy_inputs", c.noisy_inputs);
    get("noisy_prefix", c.noisy_prefix);
    get("input_std", c.input_std);
    get("lv_input_sigma", c.lv_input_sigma);
    get("lv_initial_spread", c.lv_initial_spread);
    get("record_timing", c.record_timing);
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

std::string results_to_csv(const std::vector<TrialResult>& results) {
    std::ostringstream os;
    os << "scenario,trial,seed,method,param1,param2,predicted_err_pct,realized_err_pct,wall_ms\n";
    for (const auto& r : results) {
        os << r.scenario << ',' << r.trial << ',' << r.seed << ',' << r.method << ',' << format_double(r.param1) << ','
           << format_double(r.param2) << ',' << format_double(r.predicted_err_pct) << ','
           << format_double(r.realized_err_pct) << ',' << format_double(r.wall_ms) << '\n';
    }
    return os.str();
}

std::vector<TrialResult> results_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty results CSV");
    std::vector<TrialResult> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw Error(ErrorKind::io, "results CSV row needs 9 fields: " + line);
        TrialResult r;
        r.scenario = f[0];
        r.trial = std::stoll(f[1]);
        r.seed = std::stoull(f[2]);
        r.method = f[3];
        r.param1 = std::strtod(f[4].c_str(), nullptr);
        r.param2 = std::strtod(f[5].c_str(), nullptr);
        r.predicted_err_pct = std::strtod(f[6].c_str(), nullptr);
        r.realized_err_pct = std::strtod(f[7].c_str(), nullptr);
        r.wall_ms = std::strtod(f[8].c_str(), nullptr);
        r.ok = !std::isnan(r.realized_err_pct);
        out.push_back(std::move(r));
    }
    return out;
}

std::string results_to_json(const std::vector<TrialResult>& results, const ExperimentConfig& cfg) {
    json j;
    j["config"] = config_json(cfg);
    json recs = json::array();
    for (const auto& r : results) {
        json o;
        o["scenario"] = r.scenario;
        o["trial"] = r.trial;
        o["seed"] = r.seed;
        o["method"] = r.method;
        o["param1"] = r.param1;
        o["param2"] = r.param2;
        o["predicted_err_pct"] = r.ok ? json(r.predicted_err_pct) : json(nullptr);
        o["realized_err_pct"] = !r.ok ? json(nullptr) : std::isinf(r.realized_err_pct) ? json("inf") : json(r.realized_err_pct);
        o["wall_ms"] = r.wall_ms;
        o["status"] = r.ok ? "ok" : "failed";
        if (!r.ok) o["message"] = r.message;
        recs.push_back(std::move(o));
    }
    j["records"] = std::move(recs);
    return j.dump(2) + "\n";
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream os;
    os << "method,param1,param2,count,failures,realized_mean,realized_median,realized_q1,realized_q3,"
          "predicted_mean,predicted_median\n";
    for (const auto& r : rows) {
        os << r.method << ',' << format_double(r.param1) << ',' << format_double(r.param2) << ',' << r.count << ','
           << r.failures << ',' << format_double(r.realized_mean) << ',' << format_double(r.realized_median) << ','
           << format_double(r.realized_q1) << ',' << format_double(r.realized_q3) << ','
           << format_double(r.predicted_mean) << ',' << format_double(r.predicted_median) << '\n';
    }
    return os.str();
}

void emit_results(const std::vector<TrialResult>& results, const ExperimentConfig& cfg, ResultFormat format,
                  const std::filesystem::path& dir) {
    if (results.empty()) throw Error(ErrorKind::invalid_argument, "no results to emit");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create '" + dir.string() + "': " + ec.message());
    auto write = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
        f << text;
        if (!f) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
    };
    if (format == ResultFormat::csv) write(dir / "results.csv", results_to_csv(results));
    else write(dir / "results.json", results_to_json(results, cfg));
    write(dir / "aggregate.csv", aggregate_to_csv(aggregate(results)));
}

}  // namespace ddctrl
