#pragma once

#include "setbp/core/errors.hpp"
#include "setbp/metrics/hungarian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace setbp {

struct GospaParams {
    double p = 1.0;
    double c = 2.0;
    double alpha = 2.0;
};

/// GOSPA value and its decomposition. The parts are in p-th power units and sum
/// to total^p (for p = 1 they sum to total).
struct GospaResult {
    double total = 0.0;
    double localization = 0.0;
    double missed = 0.0;
    double false_comp = 0.0;
    /// (truth index, estimate index) pairs closer than the cutoff.
    std::vector<std::pair<int, int>> assignment;
};

/// GOSPA of a given truth-to-estimate assignment (`est_of_truth[i] = -1` leaves
/// truth i unassigned). Pairs at or beyond the cutoff count as one missed and one
/// false element. Terms are summed in truth-index order.
inline GospaResult gospa_of_assignment(const std::vector<Eigen::Vector2d>& truth,
                                       const std::vector<Eigen::Vector2d>& estimate,
                                       const std::vector<int>& est_of_truth, const GospaParams& prm = {}) {
    const double half = std::pow(prm.c, prm.p) / prm.alpha;
    GospaResult r;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int j = est_of_truth[i];
        if (j < 0) continue;
        const double d = (truth[i] - estimate[static_cast<std::size_t>(j)]).norm();
        if (d < prm.c) {
            r.localization += std::pow(d, prm.p);
            r.assignment.emplace_back(static_cast<int>(i), j);
            ++matched;
        }
    }
    r.missed = half * static_cast<double>(truth.size() - matched);
    r.false_comp = half * static_cast<double>(estimate.size() - matched);
    const double sum = r.localization + r.missed + r.false_comp;
    r.total = prm.p == 1.0 ? sum : std::pow(sum, 1.0 / prm.p);
    return r;
}

/// Optimal-assignment GOSPA between two finite point sets.
inline GospaResult gospa(const std::vector<Eigen::Vector2d>& truth, const std::vector<Eigen::Vector2d>& estimate,
                         const GospaParams& prm = {}) {
    if (!(prm.c > 0.0)) throw InputError("gospa: cutoff c must be positive");
    if (!(prm.p >= 1.0)) throw InputError("gospa: order p must be >= 1");
    if (!(prm.alpha > 0.0 && prm.alpha <= 2.0)) throw InputError("gospa: alpha must lie in (0, 2]");
    const auto m = static_cast<Eigen::Index>(truth.size());
    const auto n = static_cast<Eigen::Index>(estimate.size());
    const double cp = std::pow(prm.c, prm.p);
    // Square padding: real pairs cost min(d, c)^p - c^p relative to leaving both
    // unassigned; dummy rows/columns cost nothing.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m + n, m + n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = (truth[static_cast<std::size_t>(i)] - estimate[static_cast<std::size_t>(j)]).norm();
            cost(i, j) = std::pow(std::min(d, prm.c), prm.p) - cp;
        }
    }
    std::vector<int> est_of_truth(truth.size(), -1);
    if (m > 0 && n > 0) {
        const std::vector<int> col = hungarian(cost);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (col[static_cast<std::size_t>(i)] < n) est_of_truth[static_cast<std::size_t>(i)] = col[static_cast<std::size_t>(i)];
        }
    }
    return gospa_of_assignment(truth, estimate, est_of_truth, prm);
}

/// Per-time RMSE over runs: rmse[k] = sqrt(mean_r errors[r][k]^2).
inline std::vector<double> rmse_series(const std::vector<std::vector<double>>& errors) {
    if (errors.empty()) return {};
    const std::size_t horizon = errors.front().size();
    std::vector<double> out(horizon, 0.0);
    for (std::size_t r = 0; r < errors.size(); ++r) {
        if (errors[r].size() != horizon) {
            throw InputError("rmse_series: run " + std::to_string(r) + " has horizon " +
                             std::to_string(errors[r].size()) + ", expected " + std::to_string(horizon));
        }
        for (std::size_t k = 0; k < horizon; ++k) out[k] += errors[r][k] * errors[r][k];
    }
    for (double& v : out) v = std::sqrt(v / static_cast<double>(errors.size()));
    return out;
}

/// Per-time RMSE of 2-D position error vectors (2-norm per time, then RMSE over runs).
inline std::vector<double> rmse_series(const std::vector<std::vector<Eigen::Vector2d>>& errors) {
    std::vector<std::vector<double>> norms;
    norms.reserve(errors.size());
    for (const auto& run : errors) {
        std::vector<double> row;
        row.reserve(run.size());
        for (const auto& e : run) row.push_back(e.norm());
        norms.push_back(std::move(row));
    }
    return rmse_series(norms);
}

}  // namespace setbp
