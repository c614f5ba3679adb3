// setbp: scenario simulation, SLAM filter runs, metric evaluation and oracle checks.

#include "setbp/experiment/runner.hpp"
#include "setbp/io/config.hpp"
#include "setbp/io/records.hpp"
#include "setbp/oracle/discrete_sets.hpp"
#include "setbp/oracle/random_graphs.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace setbp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

void simulate(const std::string& config, const std::string& out) {
    const io::ExperimentSpec spec = io::load_experiment(config);
    fs::create_directories(out);
    experiment::parallel_for(static_cast<std::size_t>(spec.trials), [&](std::size_t t) {
        const io::Dataset d = experiment::make_dataset(spec, static_cast<int>(t));
        io::write_atomic(fs::path(out) / io::trial_file_name(d.trial), io::dataset_to_ndjson(d));
    });
    std::cout << "wrote " << spec.trials << " dataset files to " << out << "\n";
}

void run_variant(const io::ExperimentSpec& spec, const fs::path& dataset, const std::string& variant,
                 const fs::path& out) {
    const io::Variant& v = spec.variant(variant);
    const auto files = io::trial_files(dataset);
    if (files.empty()) throw InputError("no dataset files in " + dataset.string());
    fs::create_directories(out);
    experiment::parallel_for(files.size(), [&](std::size_t i) {
        const io::Dataset d = io::read_dataset(files[i]);
        const io::TrialResult r = experiment::run_trial(d, v);
        io::write_atomic(out / io::trial_file_name(r.trial), io::result_to_ndjson(r));
    });
    std::cout << "ran " << files.size() << " trials of " << variant << " into " << out.string() << "\n";
}

std::map<int, GroundTruth> load_truth(const fs::path& dir) {
    std::map<int, GroundTruth> truth;
    for (const auto& f : io::trial_files(dir)) {
        io::Dataset d = io::read_dataset(f);
        truth.emplace(d.trial, std::move(d.truth));
    }
    if (truth.empty()) throw InputError("no dataset files in " + dir.string());
    return truth;
}

void eval(const std::vector<std::string>& results, const std::string& truth_dir, const std::string& out,
          int steady_after) {
    const auto truth = load_truth(truth_dir);
    std::vector<experiment::VariantEvaluation> evs;
    for (const auto& dir : results) {
        std::vector<io::TrialResult> rs;
        for (const auto& f : io::trial_files(dir)) rs.push_back(io::read_result(f));
        if (rs.empty()) throw InputError("no result files in " + dir);
        if (rs.size() != truth.size()) {
            throw InputError(dir + ": " + std::to_string(rs.size()) + " result trials but " +
                             std::to_string(truth.size()) + " truth trials");
        }
        evs.push_back(experiment::evaluate(truth, rs, steady_after));
    }
    const fs::path out_path(out);
    io::write_atomic(out_path, experiment::series_csv(evs));
    const fs::path steady = out_path.parent_path() / (out_path.stem().string() + "_steady.csv");
    io::write_atomic(steady, experiment::steady_csv(evs));
    std::cout << "wrote " << out_path.string() << " and " << steady.string() << "\n";
}

void sweep(const std::string& config, const std::vector<std::string>& datasets, std::vector<std::string> variants,
           const std::string& out, int steady_after) {
    const io::ExperimentSpec spec = io::load_experiment(config);
    if (variants.empty()) {
        for (const auto& v : spec.variants) variants.push_back(v.name);
    }
    for (const auto& ds : datasets) {
        const fs::path base = fs::path(out) / fs::path(ds).filename();
        std::vector<std::string> dirs;
        for (const auto& v : variants) {
            run_variant(spec, ds, v, base / v);
            dirs.push_back((base / v).string());
        }
        eval(dirs, ds, (base / "metrics.csv").string(), steady_after);
    }
}

/// Desk-oracle checks: tree exactness, fixed point, partition messages.
int oracle_test(int graphs, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    double worst_fixed = 0.0;
    for (int n = 0; n < graphs; ++n) {
        const auto g = oracle::random_tree_graph(rng);
        const auto exact = oracle::exact_marginals(g);
        oracle::SetBeliefPropagation bp(g);
        const auto schedule = oracle::tree_schedule(g);
        bp.run(schedule, 1);
        const auto once = bp.beliefs();
        bp.run(schedule, 1);
        const auto twice = bp.beliefs();
        for (std::size_t v = 0; v < exact.size(); ++v) {
            for (std::size_t s = 0; s < exact[v].mass.size(); ++s) {
                worst = std::max(worst, std::abs(once[v].mass[s] - exact[v].mass[s]));
                worst_fixed = std::max(worst_fixed, std::abs(twice[v].mass[s] - once[v].mass[s]));
            }
        }
    }

    // Partition factor with a Poisson-like incoming message, cap large enough to be exact.
    const std::vector<double> rate{0.3, 0.7, 1.1};
    oracle::DiscreteFactorGraph g;
    const int whole = g.add_variable(oracle::SetSpace(3, 3));
    const int part_a = g.add_variable(oracle::SetSpace(3, 3));
    const int part_b = g.add_variable(oracle::SetSpace(3, 3));
    g.add_factor({whole}, oracle::ppp_mass(g.space(whole), rate).mass);
    g.add_factor({whole, part_a, part_b}, [](std::span<const oracle::SubsetMask> m) {
        const oracle::SubsetMask parts[] = {m[1], m[2]};
        return oracle::partition_indicator(m[0], parts);
    });
    const auto beliefs = oracle::run_set_bp(g, oracle::tree_schedule(g), 1);
    double partition_err = 0.0;
    const auto& sp = g.space(part_a);
    std::vector<double> expect(sp.size());
    double z = 0.0;
    for (std::size_t k = 0; k < sp.size(); ++k) {
        double v = 1.0;
        for (int x = 0; x < 3; ++x) {
            v *= (sp.mask(k) >> x) & 1U ? rate[static_cast<std::size_t>(x)] : 1.0 + rate[static_cast<std::size_t>(x)];
        }
        expect[k] = v;
        z += v;
    }
    for (std::size_t k = 0; k < sp.size(); ++k) {
        partition_err = std::max(partition_err, std::abs(beliefs[static_cast<std::size_t>(part_a)].mass[k] - expect[k] / z));
    }

    const bool ok = worst <= 1e-10 && worst_fixed <= 1e-12 && partition_err <= 1e-12;
    std::cout << "tree exactness over " << graphs << " graphs: max error " << worst << "\n"
              << "extra sweep change: " << worst_fixed << "\n"
              << "partition message error: " << partition_err << "\n"
              << (ok ? "oracle-test: PASS" : "oracle-test: FAIL") << "\n";
    return ok ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Set-type belief propagation SLAM: simulate, run, evaluate"};
    app.require_subcommand(1);

    std::string config, out, dataset, variant, truth;
    std::vector<std::string> results, datasets, variants;
    int steady_after = 40;
    int graphs = 50;
    std::uint64_t seed = 7;

    auto* sim = app.add_subcommand("simulate", "Generate one dataset file per trial");
    sim->add_option("--config", config, "Experiment JSON")->required();
    sim->add_option("--out", out, "Output directory")->required();

    auto* run = app.add_subcommand("run", "Run one filter variant over a dataset directory");
    run->add_option("--dataset", dataset, "Dataset directory")->required();
    run->add_option("--config", config, "Experiment JSON")->required();
    run->add_option("--variant", variant, "Variant name")->required();
    run->add_option("--out", out, "Output directory")->required();

    auto* ev = app.add_subcommand("eval", "Compute RMSE and GOSPA tables");
    ev->add_option("--results", results, "Result directories, one per variant")->required();
    ev->add_option("--truth", truth, "Dataset directory")->required();
    ev->add_option("--out", out, "Output CSV")->required();
    ev->add_option("--steady-after", steady_after, "Steady-state summary over k greater than this");

    auto* sw = app.add_subcommand("sweep", "Run every variant on every dataset and evaluate");
    sw->add_option("--config", config, "Experiment JSON")->required();
    sw->add_option("--datasets", datasets, "Dataset directories")->required();
    sw->add_option("--variants", variants, "Variant names (default: all)")->delimiter(',');
    sw->add_option("--out", out, "Output directory")->required();
    sw->add_option("--steady-after", steady_after, "Steady-state summary over k greater than this");

    auto* ot = app.add_subcommand("oracle-test", "Check set-type BP against exhaustive enumeration");
    ot->add_option("--graphs", graphs, "Random tree graphs to check");
    ot->add_option("--seed", seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*sim) simulate(config, out);
        if (*run) run_variant(io::load_experiment(config), dataset, variant, out);
        if (*ev) eval(results, truth, out, steady_after);
        if (*sw) sweep(config, datasets, variants, out, steady_after);
        if (*ot) return oracle_test(graphs, seed);
    } catch (const io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
