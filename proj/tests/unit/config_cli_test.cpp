#include "setbp/experiment/runner.hpp"
#include "setbp/io/config.hpp"
#include "setbp/io/records.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using namespace setbp;
namespace fs = std::filesystem;

namespace {

std::string error_path(const std::string& text) {
    try {
        io::parse_experiment(io::Json::parse(text));
    } catch (const io::ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SETBP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("setbp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

constexpr const char* kTiny = R"({
  "schema": 1, "trials": 2, "base_seed": 5,
  "scenario": {"area": {"x_min": 0, "x_max": 30, "y_min": -60, "y_max": 60},
               "n_landmarks": 6, "horizon": 8, "initial_state_mean": [15, -70, 0, 20]},
  "filter": {"particle_count": 50}
})";

}  // namespace

TEST(Config, DefaultsAndVariants) {
    const auto spec = io::parse_experiment(io::Json::parse(kTiny));
    EXPECT_EQ(spec.trials, 2);
    EXPECT_EQ(spec.trial_seed(1), 6U);
    EXPECT_EQ(spec.scenario.n_landmarks, 6);
    ASSERT_EQ(spec.variants.size(), 3U);
    EXPECT_FALSE(spec.variant("pmb_baseline").filter.use_new_target_sensor_messages);
    EXPECT_EQ(spec.variant("mb").filter.mode, FilterMode::MB);
    EXPECT_EQ(spec.variant("pmb_full").filter.particle_count, 50U);
    EXPECT_EQ(spec.filter.clutter_intensity, 1.6e-4);
    EXPECT_THROW(spec.variant("nope"), io::ConfigError);
}

TEST(Config, ErrorsNameKeyPath) {
    EXPECT_EQ(error_path(R"({"trials": 1})"), "schema");
    EXPECT_EQ(error_path(R"({"schema": 2})"), "schema");
    EXPECT_EQ(error_path(R"({"schema": 1, "scenario": {"horizon": "long"}})"), "scenario.horizon");
    EXPECT_EQ(error_path(R"({"schema": 1, "scenario": {"area": {"x_min": "a"}}})"), "scenario.area.x_min");
    EXPECT_EQ(error_path(R"({"schema": 1, "filter": {"p_detect": 1.5}})"), "filter");
    EXPECT_EQ(error_path(R"({"schema": 1, "filter": {"birth": "sometimes"}})"), "filter.birth");
    EXPECT_EQ(error_path(R"({"schema": 1, "variants": [{"name": "a"}, {"name": "b", "filter": {"mode": "X"}}]})"),
              "variants[1].filter.mode");
    EXPECT_EQ(error_path(R"({"schema": 1, "variants": [{"name": "a"}, {"name": "a"}]})"), "variants[1].name");
    EXPECT_EQ(error_path(R"({"schema": 1, "trials": 0})"), "trials");
    EXPECT_EQ(error_path(R"({"schema": 1, "scenario": {"n_landmark": 3}})"), "scenario.n_landmark");
}

TEST(Records, DatasetRoundTrip) {
    const auto spec = io::parse_experiment(io::Json::parse(kTiny));
    const io::Dataset d = experiment::make_dataset(spec, 1);
    const fs::path dir = scratch("roundtrip");
    io::write_atomic(dir / io::trial_file_name(d.trial), io::dataset_to_ndjson(d));
    const io::Dataset back = io::read_dataset(dir / io::trial_file_name(d.trial));
    EXPECT_EQ(back.trial, 1);
    EXPECT_EQ(back.seed, 6U);
    EXPECT_EQ(io::dataset_to_ndjson(back), io::dataset_to_ndjson(d));

    const io::TrialResult r = experiment::run_trial(d, spec.variant("pmb_full"));
    io::write_atomic(dir / "result.ndjson", io::result_to_ndjson(r));
    EXPECT_EQ(io::result_to_ndjson(io::read_result(dir / "result.ndjson")), io::result_to_ndjson(r));
    fs::remove_all(dir);
}

TEST(Cli, MalformedConfigExitsWithUsageCode) {
    const fs::path dir = scratch("malformed");
    std::ofstream(dir / "bad.json") << "{ \"schema\": 1, ";
    EXPECT_EQ(run_cli("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "data").string()), 2);
    std::ofstream(dir / "badkey.json") << R"({"schema": 1, "filter": {"mode": "X"}})";
    EXPECT_EQ(run_cli("simulate --config " + (dir / "badkey.json").string() + " --out " + (dir / "data").string()), 2);
    EXPECT_EQ(run_cli("simulate --out " + (dir / "data").string()), 2);
    fs::remove_all(dir);
}

TEST(Cli, MissingDatasetExitsWithUsageCode) {
    const fs::path dir = scratch("missing");
    std::ofstream(dir / "tiny.json") << kTiny;
    EXPECT_EQ(run_cli("run --dataset " + (dir / "absent").string() + " --config " + (dir / "tiny.json").string() +
                      " --variant pmb_full --out " + (dir / "out").string()),
              2);
    EXPECT_EQ(run_cli("eval --results " + (dir / "absent").string() + " --truth " + (dir / "absent").string() +
                      " --out " + (dir / "m.csv").string()),
              2);
    fs::remove_all(dir);
}

TEST(Cli, SimulateRunEvalProducesTables) {
    const fs::path dir = scratch("pipeline");
    std::ofstream(dir / "tiny.json") << kTiny;
    const std::string cfg = (dir / "tiny.json").string();
    ASSERT_EQ(run_cli("simulate --config " + cfg + " --out " + (dir / "data").string()), 0);
    ASSERT_EQ(run_cli("run --dataset " + (dir / "data").string() + " --config " + cfg + " --variant mb --out " +
                      (dir / "mb").string()),
              0);
    ASSERT_EQ(run_cli("eval --results " + (dir / "mb").string() + " --truth " + (dir / "data").string() + " --out " +
                      (dir / "metrics.csv").string() + " --steady-after 4"),
              0);
    std::ifstream in(dir / "metrics.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, experiment::kSeriesHeader);
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 8);
    EXPECT_TRUE(fs::exists(dir / "metrics_steady.csv"));

    // MB runs carry no undetected PPP mass.
    for (const auto& f : io::trial_files(dir / "mb")) {
        for (const auto& s : io::read_result(f).steps) EXPECT_EQ(s.diag.ppp_mass, 0.0);
    }
    fs::remove_all(dir);
}
