#pragma once

#include "setbp/assoc/loopy_bp.hpp"
#include "setbp/metrics/gospa.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace setbp::oracles {

/// Exact association marginals by enumerating every target-to-measurement map in
/// which no measurement is claimed twice. Weight of a map c is
/// prod_i beta(i, c_i) * prod_{j unclaimed} w(j).
inline AssociationMarginals enumerate_association(const AssociationProblem& p) {
    const auto n_t = static_cast<int>(p.num_targets());
    const auto n_m = static_cast<int>(p.num_measurements());
    AssociationMarginals out;
    out.p_c = Eigen::MatrixXd::Zero(n_t, n_m + 1);
    out.p_d = Eigen::MatrixXd::Zero(n_m, n_t + 1);
    std::vector<int> c(static_cast<std::size_t>(n_t), 0);
    std::vector<int> owner(static_cast<std::size_t>(n_m), -1);
    double z = 0.0;
    std::function<void(int, double)> rec = [&](int i, double w) {
        if (w == 0.0) return;
        if (i == n_t) {
            double total = w;
            for (int j = 0; j < n_m; ++j) {
                if (owner[static_cast<std::size_t>(j)] < 0) total *= p.measurement_weights(j);
            }
            z += total;
            for (int t = 0; t < n_t; ++t) out.p_c(t, c[static_cast<std::size_t>(t)]) += total;
            for (int j = 0; j < n_m; ++j) out.p_d(j, owner[static_cast<std::size_t>(j)] + 1) += total;
            return;
        }
        c[static_cast<std::size_t>(i)] = 0;
        rec(i + 1, w * p.target_weights(i, 0));
        for (int j = 0; j < n_m; ++j) {
            if (owner[static_cast<std::size_t>(j)] >= 0) continue;
            owner[static_cast<std::size_t>(j)] = i;
            c[static_cast<std::size_t>(i)] = j + 1;
            rec(i + 1, w * p.target_weights(i, j + 1));
            owner[static_cast<std::size_t>(j)] = -1;
        }
        c[static_cast<std::size_t>(i)] = 0;
    };
    rec(0, 1.0);
    out.p_c /= z;
    out.p_d /= z;
    return out;
}

/// True when the bipartite graph of positive target-measurement weights has no cycle.
inline bool association_is_tree(const AssociationProblem& p) {
    const auto n_t = static_cast<int>(p.num_targets());
    const auto n_m = static_cast<int>(p.num_measurements());
    std::vector<int> parent(static_cast<std::size_t>(n_t + n_m));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    for (int i = 0; i < n_t; ++i) {
        for (int j = 0; j < n_m; ++j) {
            if (!(p.target_weights(i, j + 1) > 0.0)) continue;
            const int a = find(i);
            const int b = find(n_t + j);
            if (a == b) return false;
            parent[static_cast<std::size_t>(a)] = b;
        }
    }
    return true;
}

/// Random association problem with up to max_t targets and max_m measurements.
template <typename Engine>
AssociationProblem random_association(Engine& rng, int max_t = 3, int max_m = 3, double zero_fraction = 0.3) {
    const int n_t = std::uniform_int_distribution<int>(0, max_t)(rng);
    const int n_m = std::uniform_int_distribution<int>(0, max_m)(rng);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::bernoulli_distribution zero(zero_fraction);
    AssociationProblem p;
    p.target_weights = Eigen::MatrixXd::Zero(n_t, n_m + 1);
    p.measurement_weights = Eigen::VectorXd::Zero(n_m);
    for (int i = 0; i < n_t; ++i) {
        p.target_weights(i, 0) = u(rng);
        for (int j = 1; j <= n_m; ++j) {
            const double v = u(rng);
            p.target_weights(i, j) = zero(rng) ? 0.0 : v;
        }
    }
    for (int j = 0; j < n_m; ++j) p.measurement_weights(j) = u(rng);
    return p;
}

/// Largest total-variation distance over the rows of two marginal tables.
inline double max_row_tv(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < a.rows(); ++r) worst = std::max(worst, 0.5 * (a.row(r) - b.row(r)).cwiseAbs().sum());
    return worst;
}

/// GOSPA by exhaustive search over all partial injective truth-to-estimate maps,
/// summing localization in truth order followed by the missed and false terms.
inline double brute_force_gospa(const std::vector<Eigen::Vector2d>& truth, const std::vector<Eigen::Vector2d>& est,
                                const GospaParams& prm = {}) {
    const double half = std::pow(prm.c, prm.p) / prm.alpha;
    std::vector<int> map(truth.size(), -1);
    std::vector<bool> used(est.size(), false);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == truth.size()) {
            double loc = 0.0;
            std::size_t matched = 0;
            for (std::size_t t = 0; t < truth.size(); ++t) {
                if (map[t] < 0) continue;
                const double d = (truth[t] - est[static_cast<std::size_t>(map[t])]).norm();
                if (d < prm.c) {
                    loc += std::pow(d, prm.p);
                    ++matched;
                }
            }
            double sum = loc + half * static_cast<double>(truth.size() - matched) +
                         half * static_cast<double>(est.size() - matched);
            if (prm.p != 1.0) sum = std::pow(sum, 1.0 / prm.p);
            best = std::min(best, sum);
            return;
        }
        map[i] = -1;
        rec(i + 1);
        for (std::size_t j = 0; j < est.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            map[i] = static_cast<int>(j);
            rec(i + 1);
            used[j] = false;
        }
        map[i] = -1;
    };
    rec(0);
    return best;
}

template <typename Engine>
std::vector<Eigen::Vector2d> random_points(Engine& rng, int max_count, double extent) {
    const int n = std::uniform_int_distribution<int>(0, max_count)(rng);
    std::uniform_real_distribution<double> u(0.0, extent);
    std::vector<Eigen::Vector2d> out;
    for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng));
    return out;
}

/// Sum-product marginals of a chain of discrete vector variables:
/// p(x) ∝ prod_v unary[v](x_v) prod_v pair[v](x_v, x_{v+1}).
inline std::vector<std::vector<double>> chain_marginals(const std::vector<std::vector<double>>& unary,
                                                        const std::vector<Eigen::MatrixXd>& pair) {
    const std::size_t n = unary.size();
    std::vector<std::vector<double>> fwd(n), bwd(n), out(n);
    for (std::size_t v = 0; v < n; ++v) {
        fwd[v].assign(unary[v].size(), 1.0);
        bwd[v].assign(unary[v].size(), 1.0);
    }
    for (std::size_t v = 1; v < n; ++v) {
        for (std::size_t b = 0; b < unary[v].size(); ++b) {
            double s = 0.0;
            for (std::size_t a = 0; a < unary[v - 1].size(); ++a) {
                s += fwd[v - 1][a] * unary[v - 1][a] * pair[v - 1](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
            fwd[v][b] = s;
        }
    }
    for (std::size_t v = n - 1; v-- > 0;) {
        for (std::size_t a = 0; a < unary[v].size(); ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < unary[v + 1].size(); ++b) {
                s += bwd[v + 1][b] * unary[v + 1][b] * pair[v](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
            bwd[v][a] = s;
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        double z = 0.0;
        out[v].resize(unary[v].size());
        for (std::size_t a = 0; a < unary[v].size(); ++a) {
            out[v][a] = fwd[v][a] * unary[v][a] * bwd[v][a];
            z += out[v][a];
        }
        for (double& x : out[v]) x /= z;
    }
    return out;
}

}  // namespace setbp::oracles
