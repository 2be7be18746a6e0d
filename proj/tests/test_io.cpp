#include "ddctrl/io.hpp"
#include "ddctrl/experiment.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>

using namespace ddctrl;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ddctrl_test_io_" + name);
    std::filesystem::remove_all(p);
    return p;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("results CSV has the fixed header and one line per record") {
    TrialResult r;
    r.scenario = "lambda_sweep";
    r.method = "direct_l1";
    r.param1 = 10.0;
    r.realized_err_pct = 12.5;
    const std::string csv = results_to_csv({r});
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.rfind("scenario,trial,seed,method,param1,param2,predicted_err_pct,realized_err_pct,wall_ms\n", 0) == 0);
}

TEST_CASE("results CSV round-trips 100 random records") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1e3);
    std::vector<TrialResult> rs;
    const char* methods[] = {"direct_l1", "direct_proj", "spc", "subspace_id"};
    for (int i = 0; i < 100; ++i) {
        TrialResult r;
        r.scenario = i % 2 ? "noise_sweep" : "hybrid_grid";
        r.trial = i;
        r.seed = rng();
        r.method = methods[i % 4];
        r.param1 = n(rng);
        r.param2 = std::ldexp(n(rng), -40);
        r.predicted_err_pct = n(rng);
        r.realized_err_pct = std::abs(n(rng));
        r.wall_ms = i % 3 ? 0.0 : std::abs(n(rng));
        rs.push_back(r);
    }
    const auto back = results_from_csv(results_to_csv(rs));
    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) CHECK(back[i] == rs[i]);
    CHECK(results_to_csv(back) == results_to_csv(rs));
}

TEST_CASE("failed records serialize as nan and parse back as failures") {
    TrialResult r;
    r.method = "spc";
    r.ok = false;
    r.predicted_err_pct = r.realized_err_pct = std::nan("");
    const auto back = results_from_csv(results_to_csv({r}));
    REQUIRE(back.size() == 1);
    CHECK(!back[0].ok);
    CHECK(std::isnan(back[0].realized_err_pct));
}

TEST_CASE("emit writes byte-stable files and a JSON echo of the config") {
    ExperimentConfig c;
    c.trials = 2;
    c.lambdas = {10.0};
    c.methods = {"direct_l1", "spc"};
    const auto res = run_scenario(c, 1);
    const auto a = scratch_dir("a"), b = scratch_dir("b");
    emit_results(res, c, ResultFormat::csv, a);
    emit_results(res, c, ResultFormat::csv, b);
    CHECK(read_file(a / "results.csv") == read_file(b / "results.csv"));
    CHECK(read_file(a / "aggregate.csv") == read_file(b / "aggregate.csv"));

    const auto j = scratch_dir("json");
    emit_results(res, c, ResultFormat::json, j);
    const auto doc = nlohmann::json::parse(read_file(j / "results.json"));
    CHECK(doc.at("records").size() == res.size());
    const ExperimentConfig echo = config_from_json(doc.at("config").dump());
    const auto rerun = run_scenario(echo, 1);
    REQUIRE(rerun.size() == res.size());
    for (std::size_t i = 0; i < res.size(); ++i) {
        CHECK(same_bits(rerun[i].realized_err_pct, res[i].realized_err_pct));
        CHECK(same_bits(doc["records"][i]["realized_err_pct"].get<double>(), res[i].realized_err_pct));
    }
    CHECK_THROWS_AS(emit_results({}, c, ResultFormat::csv, a), Error);
}

TEST_CASE("config JSON round-trip and rejection") {
    ExperimentConfig c;
    c.scenario = ScenarioKind::hybrid_grid;
    c.lambdas = {0.0, 10.0};
    c.lambdas2 = {1.0, 100.0};
    c.methods = {"direct_hybrid"};
    c.seed = 18446744073709551557ULL;
    c.noisy_prefix = true;
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.seed == c.seed);
    CHECK(back.lambdas2 == c.lambdas2);
    CHECK(back.noisy_prefix);

    auto kind_of = [](const std::string& text) {
        try {
            config_from_json(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::invalid_argument;
    };
    CHECK(kind_of("{not json") == ErrorKind::config);
    CHECK(kind_of(R"({"scenario": "nope"})") == ErrorKind::config);
    CHECK(kind_of(R"({"trials": "many"})") == ErrorKind::config);
}

TEST_CASE("shipped scenario configs parse and validate") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(DDCTRL_SOURCE_DIR) / "configs";
    int count = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(config_from_json(read_file(e.path())).validate());
        ++count;
    }
    CHECK(count >= 7);
}

TEST_CASE("trajectory CSV and JSON") {
    std::mt19937_64 rng(5);
    const Trajectory w(oracle::gaussian(rng, 7, 2), oracle::gaussian(rng, 7, 1));
    const std::string csv = trajectory_to_csv(w);
    CHECK(csv.rfind("u1,u2,y1\n", 0) == 0);
    CHECK(trajectory_from_csv(csv) == w);
    CHECK(trajectory_from_json(trajectory_to_json(w)) == w);
    CHECK_THROWS_AS(trajectory_from_csv("a,b\n1,2\n"), Error);
    CHECK_THROWS_AS(trajectory_from_csv("u1,y1\n1\n"), Error);
    CHECK_THROWS_AS(trajectory_from_json(R"({"T": 2, "q": 2, "m": 1, "data": [[1, 2]]})"), Error);
}

TEST_CASE("model JSON round-trip") {
    const StateSpaceModel s = make_benchmark_plant();
    const StateSpaceModel back = model_from_json(model_to_json(s));
    CHECK(back.A == s.A);
    CHECK(back.B == s.B);
    CHECK(back.C == s.C);
    CHECK(back.D == s.D);
    CHECK(back.lag == s.lag);
    CHECK_THROWS_AS(model_from_json(R"({"A": [[1]], "B": [[1]], "C": [[1, 2]], "D": [[0]], "order": 1, "lag": 1})"),
                    Error);
    const auto lv = nlohmann::json::parse(lotka_volterra_to_json(LotkaVolterraParams{}));
    CHECK(lv.at("a").get<double>() == 0.5);
}

TEST_CASE("file errors carry the path") {
    try {
        read_file("/nonexistent/dir/file.csv");
        FAIL("expected an I/O error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
        CHECK(std::string(e.what()).find("/nonexistent/dir/file.csv") != std::string::npos);
    }
}
