#pragma once

#include "setbp/oracle/discrete_sets.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace setbp::oracle {

struct RandomGraphOptions {
    int max_variables = 4;
    int max_points = 3;
    int max_cap = 2;
    /// Probability that a factor-table entry is zero.
    double zero_fraction = 0.15;
};

namespace detail {

template <typename Engine>
std::vector<double> random_table(const DiscreteFactorGraph& g, const std::vector<int>& nb, Engine& rng,
                                 double zero_fraction) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::bernoulli_distribution zero(zero_fraction);
    std::vector<double> t(g.table_size(nb));
    for (double& x : t) {
        const double v = u(rng);
        x = zero(rng) ? 0.0 : v;
    }
    t[0] = std::max(t[0], 0.05);
    return t;
}

}  // namespace detail

/// Random cycle-free factor graph: a unary factor on every variable plus
/// pairwise and occasional three-way factors forming a tree.
template <typename Engine>
DiscreteFactorGraph random_tree_graph(Engine& rng, const RandomGraphOptions& opt = {}) {
    DiscreteFactorGraph g;
    std::uniform_int_distribution<int> n_vars(1, opt.max_variables);
    std::uniform_int_distribution<int> n_pts(1, opt.max_points);
    std::uniform_int_distribution<int> caps(1, opt.max_cap);
    const int nv = n_vars(rng);
    for (int v = 0; v < nv; ++v) {
        const int pts = n_pts(rng);
        const int cap = caps(rng);
        g.add_variable(SetSpace(pts, std::min(cap, pts)));
    }
    for (int v = 0; v < nv; ++v) {
        const std::vector<int> nb{v};
        g.add_factor(nb, detail::random_table(g, nb, rng, opt.zero_fraction));
    }
    std::bernoulli_distribution three_way(0.3);
    int next = 1;
    while (next < nv) {
        const int anchor = std::uniform_int_distribution<int>(0, next - 1)(rng);
        std::vector<int> nb;
        if (next + 1 < nv && three_way(rng)) {
            nb = {anchor, next, next + 1};
            next += 2;
        } else {
            nb = {anchor, next};
            next += 1;
        }
        std::shuffle(nb.begin(), nb.end(), rng);
        g.add_factor(nb, detail::random_table(g, nb, rng, opt.zero_fraction));
    }
    return g;
}

}  // namespace setbp::oracle
