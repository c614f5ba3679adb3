#pragma once

#include "setbp/io/config.hpp"
#include "setbp/io/records.hpp"
#include "setbp/metrics/gospa.hpp"
#include "setbp/scenario/scenario.hpp"
#include "setbp/slam/filter.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace setbp::experiment {

/// Worker count: hardware concurrency, capped by SETBP_THREADS when set.
inline unsigned worker_count() {
    unsigned n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SETBP_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

/// Runs fn(0..count-1) on a small worker pool; rethrows the first failure.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         unsigned workers = worker_count()) {
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline io::Dataset make_dataset(const io::ExperimentSpec& spec, int trial) {
    ScenarioConfig cfg = spec.scenario;
    cfg.seed = spec.trial_seed(trial);
    return io::Dataset{trial, cfg.seed, generate(cfg)};
}

inline StepInput to_step_input(const ScenarioStep& st) { return StepInput{st.k, st.measurements, st.birth_hints}; }

inline io::TrialResult run_trial(const io::Dataset& d, const io::Variant& v) {
    SlamFilter filter(v.filter, d.truth.prior_mean, derive_seed(d.seed, "filter"));
    io::TrialResult r;
    r.trial = d.trial;
    r.variant = v.name;
    r.steps.reserve(d.truth.steps.size());
    for (const auto& st : d.truth.steps) {
        io::StepResult out;
        out.k = st.k;
        out.diag = filter.step(to_step_input(st));
        const Estimates e = filter.estimates();
        out.sensor = e.sensor;
        out.map = e.map;
        r.steps.push_back(std::move(out));
    }
    return r;
}

struct MetricRow {
    int k = 0;
    double rmse = 0.0;
    double gospa_total = 0.0;
    double gospa_loc = 0.0;
    double gospa_missed = 0.0;
    double gospa_false = 0.0;
};

struct VariantEvaluation {
    std::string variant;
    std::vector<MetricRow> series;
    /// Steady-state values per trial (in trial order) and for the averaged series.
    std::vector<std::pair<int, MetricRow>> steady_per_trial;
    MetricRow steady_mean;
};

/// Per-time RMSE of the sensor position and trial-averaged GOSPA of the map
/// against the landmarks observed so far, plus steady-state summaries over k > steady_after.
inline VariantEvaluation evaluate(const std::map<int, GroundTruth>& truth, const std::vector<io::TrialResult>& results,
                                  int steady_after, const GospaParams& prm = {}) {
    if (results.empty()) throw InputError("evaluate: no result files");
    VariantEvaluation ev;
    ev.variant = results.front().variant;
    const std::size_t horizon = results.front().steps.size();
    std::vector<std::vector<double>> err(results.size());
    std::vector<std::vector<GospaResult>> g(results.size());
    for (std::size_t t = 0; t < results.size(); ++t) {
        const auto& r = results[t];
        if (r.variant != ev.variant) throw InputError("evaluate: mixed variants in one result set");
        const auto it = truth.find(r.trial);
        if (it == truth.end()) throw InputError("evaluate: no truth for trial " + std::to_string(r.trial));
        const GroundTruth& gt = it->second;
        if (r.steps.size() != horizon || gt.steps.size() != horizon) {
            throw InputError("evaluate: horizon mismatch for trial " + std::to_string(r.trial));
        }
        for (std::size_t k = 0; k < horizon; ++k) {
            const auto& st = r.steps[k];
            if (st.k != gt.steps[k].k) throw InputError("evaluate: time index mismatch for trial " + std::to_string(r.trial));
            err[t].push_back((position(st.sensor) - position(gt.steps[k].state)).norm());
            g[t].push_back(gospa(gt.observed_map(st.k), st.map, prm));
        }
    }
    const std::vector<double> rmse = rmse_series(err);
    const double n_trials = static_cast<double>(results.size());
    for (std::size_t k = 0; k < horizon; ++k) {
        MetricRow row;
        row.k = results.front().steps[k].k;
        row.rmse = rmse[k];
        for (std::size_t t = 0; t < results.size(); ++t) {
            row.gospa_total += g[t][k].total / n_trials;
            row.gospa_loc += g[t][k].localization / n_trials;
            row.gospa_missed += g[t][k].missed / n_trials;
            row.gospa_false += g[t][k].false_comp / n_trials;
        }
        ev.series.push_back(row);
    }

    std::size_t steady = 0;
    for (const auto& row : ev.series) steady += row.k > steady_after ? 1 : 0;
    if (steady == 0) throw InputError("evaluate: no time steps after k = " + std::to_string(steady_after));
    const double n_steady = static_cast<double>(steady);
    for (std::size_t t = 0; t < results.size(); ++t) {
        MetricRow row;
        double sq = 0.0;
        for (std::size_t k = 0; k < horizon; ++k) {
            if (ev.series[k].k <= steady_after) continue;
            sq += err[t][k] * err[t][k];
            row.gospa_total += g[t][k].total / n_steady;
            row.gospa_loc += g[t][k].localization / n_steady;
            row.gospa_missed += g[t][k].missed / n_steady;
            row.gospa_false += g[t][k].false_comp / n_steady;
        }
        row.rmse = std::sqrt(sq / n_steady);
        ev.steady_per_trial.emplace_back(results[t].trial, row);
    }
    for (const auto& row : ev.series) {
        if (row.k <= steady_after) continue;
        ev.steady_mean.rmse += row.rmse / n_steady;
        ev.steady_mean.gospa_total += row.gospa_total / n_steady;
        ev.steady_mean.gospa_loc += row.gospa_loc / n_steady;
        ev.steady_mean.gospa_missed += row.gospa_missed / n_steady;
        ev.steady_mean.gospa_false += row.gospa_false / n_steady;
    }
    return ev;
}

namespace detail {

inline void append_values(std::ostringstream& s, const MetricRow& r) {
    s << r.rmse << ',' << r.gospa_total << ',' << r.gospa_loc << ',' << r.gospa_missed << ',' << r.gospa_false << '\n';
}

}  // namespace detail

inline constexpr const char* kSeriesHeader = "variant,k,rmse,gospa_total,gospa_loc,gospa_missed,gospa_false";
inline constexpr const char* kSteadyHeader = "variant,trial,rmse,gospa_total,gospa_loc,gospa_missed,gospa_false";

inline std::string series_csv(const std::vector<VariantEvaluation>& evs) {
    std::ostringstream s;
    s.precision(10);
    s << kSeriesHeader << '\n';
    for (const auto& ev : evs) {
        for (const auto& r : ev.series) {
            s << ev.variant << ',' << r.k << ',';
            detail::append_values(s, r);
        }
    }
    return s.str();
}

inline std::string steady_csv(const std::vector<VariantEvaluation>& evs) {
    std::ostringstream s;
    s.precision(10);
    s << kSteadyHeader << '\n';
    for (const auto& ev : evs) {
        for (const auto& [trial, r] : ev.steady_per_trial) {
            s << ev.variant << ',' << trial << ',';
            detail::append_values(s, r);
        }
        s << ev.variant << ",mean,";
        detail::append_values(s, ev.steady_mean);
    }
    return s.str();
}

}  // namespace setbp::experiment
