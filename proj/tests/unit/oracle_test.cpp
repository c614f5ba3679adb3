#include "oracles.hpp"

#include "setbp/core/seed.hpp"
#include "setbp/oracle/discrete_sets.hpp"
#include "setbp/oracle/random_graphs.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace setbp;
using namespace setbp::oracle;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

}  // namespace

TEST(SetSpace, CanonicalOrder) {
    const SetSpace sp(3, 2);
    ASSERT_EQ(sp.size(), 7U);
    EXPECT_EQ(sp.mask(0), 0U);
    EXPECT_EQ(sp.elements(1), std::vector<int>{0});
    EXPECT_EQ(sp.elements(3), std::vector<int>{2});
    EXPECT_EQ(sp.elements(4), (std::vector<int>{0, 1}));
    EXPECT_EQ(sp.elements(6), (std::vector<int>{1, 2}));
    EXPECT_EQ(sp.index(0b111), -1);
    EXPECT_EQ(sp.index(0b101), 5);
}

TEST(SetSpace, RejectsBadSizes) {
    EXPECT_THROW(SetSpace(21, 1), InputError);
    EXPECT_THROW(SetSpace(3, -1), InputError);
}

// Two set-variables joined as f_A(X1) f_B(X2) f_C(X1, X2), checked against a double sum.
TEST(ExactMarginals, TwoVariableChainMatchesDoubleSum) {
    DiscreteFactorGraph g;
    const int x1 = g.add_variable(SetSpace(2, 1));
    const int x2 = g.add_variable(SetSpace(2, 1));
    const std::vector<double> fa{0.2, 0.5, 0.3};
    const std::vector<double> fb{0.6, 0.1, 0.9};
    const std::vector<double> fc{1.0, 0.3, 0.2, 0.4, 0.8, 0.0, 0.7, 0.1, 0.5};
    g.add_factor({x1}, fa);
    g.add_factor({x2}, fb);
    g.add_factor({x1, x2}, fc);

    std::vector<double> m1(3, 0.0), m2(3, 0.0);
    double z = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double w = fa[a] * fb[b] * fc[a * 3 + b];
            m1[a] += w;
            m2[b] += w;
            z += w;
        }
    }
    for (auto* m : {&m1, &m2}) {
        for (double& v : *m) v /= z;
    }
    const auto exact = exact_marginals(g);
    EXPECT_LE(max_abs_diff(exact[0].mass, m1), 1e-15);
    EXPECT_LE(max_abs_diff(exact[1].mass, m2), 1e-15);

    const auto bp = run_set_bp(g, tree_schedule(g), 1);
    EXPECT_LE(max_abs_diff(bp[0].mass, m1), 1e-14);
    EXPECT_LE(max_abs_diff(bp[1].mass, m2), 1e-14);
}

TEST(ExactMarginals, CapacityErrorCarriesSize) {
    DiscreteFactorGraph g(100.0);
    g.add_variable(SetSpace(4, 4));
    g.add_variable(SetSpace(4, 4));
    try {
        exact_marginals(g);
        FAIL() << "expected CapacityError";
    } catch (const CapacityError& e) {
        EXPECT_EQ(e.required_size(), 256.0);
    }
}

TEST(SetBp, TreeSchedulesAreExactOnRandomTrees) {
    Rng rng(11);
    for (int n = 0; n < 40; ++n) {
        const auto g = random_tree_graph(rng);
        const auto exact = exact_marginals(g);
        const auto bp = run_set_bp(g, tree_schedule(g), 1);
        for (std::size_t v = 0; v < exact.size(); ++v) EXPECT_LE(max_abs_diff(bp[v].mass, exact[v].mass), 1e-10);
    }
}

TEST(SetBp, ExtraSweepIsFixedPoint) {
    Rng rng(12);
    for (int n = 0; n < 20; ++n) {
        const auto g = random_tree_graph(rng);
        SetBeliefPropagation bp(g);
        const auto s = tree_schedule(g);
        bp.run(s, 1);
        const auto once = bp.beliefs();
        bp.run(s, 1);
        const auto twice = bp.beliefs();
        for (std::size_t v = 0; v < once.size(); ++v) EXPECT_LE(max_abs_diff(once[v].mass, twice[v].mass), 1e-12);
    }
}

TEST(SetBp, FloodingConvergesOnTrees) {
    Rng rng(13);
    for (int n = 0; n < 20; ++n) {
        const auto g = random_tree_graph(rng);
        const auto exact = exact_marginals(g);
        const auto bp = run_set_bp(g, flooding_schedule(g), 2 * (g.num_variables() + g.num_factors()));
        for (std::size_t v = 0; v < exact.size(); ++v) EXPECT_LE(max_abs_diff(bp[v].mass, exact[v].mass), 1e-10);
    }
}

TEST(SetBp, CycleBeliefsStayNormalized) {
    DiscreteFactorGraph g;
    for (int v = 0; v < 3; ++v) g.add_variable(SetSpace(2, 2));
    Rng rng(14);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    auto table = [&](std::size_t n) {
        std::vector<double> t(n);
        for (double& x : t) x = u(rng);
        return t;
    };
    for (int v = 0; v < 3; ++v) g.add_factor({v}, table(4));
    g.add_factor({0, 1}, table(16));
    g.add_factor({1, 2}, table(16));
    g.add_factor({2, 0}, table(16));
    EXPECT_THROW(tree_schedule(g), InputError);
    const auto bp = run_set_bp(g, flooding_schedule(g), 50);
    for (const auto& b : bp) {
        EXPECT_NEAR(b.total(), 1.0, 1e-12);
        for (double m : b.mass) {
            EXPECT_TRUE(std::isfinite(m));
            EXPECT_GE(m, 0.0);
        }
    }
}

TEST(SetBp, PartitionMessageOfPoissonInput) {
    const std::vector<double> rate{0.3, 0.7, 1.1};
    DiscreteFactorGraph g;
    const int whole = g.add_variable(SetSpace(3, 3));
    const int a = g.add_variable(SetSpace(3, 3));
    const int b = g.add_variable(SetSpace(3, 3));
    g.add_factor({whole}, ppp_mass(g.space(whole), rate).mass);
    g.add_factor({whole, a, b}, [](std::span<const SubsetMask> m) {
        const SubsetMask parts[] = {m[1], m[2]};
        return partition_indicator(m[0], parts);
    });
    const auto bel = run_set_bp(g, tree_schedule(g), 1);
    const auto& sp = g.space(a);
    std::vector<double> expect(sp.size());
    double z = 0.0;
    for (std::size_t k = 0; k < sp.size(); ++k) {
        expect[k] = 1.0;
        for (int x = 0; x < 3; ++x) expect[k] *= (sp.mask(k) >> x) & 1U ? rate[x] : 1.0 + rate[x];
        z += expect[k];
    }
    for (double& v : expect) v /= z;
    EXPECT_LE(max_abs_diff(bel[static_cast<std::size_t>(a)].mass, expect), 1e-12);
}

TEST(SetBp, MergeOfPoissonInputsAddsRates) {
    const std::vector<double> r1{0.2, 0.5};
    const std::vector<double> r2{0.4, 0.1};
    DiscreteFactorGraph g;
    const int p1 = g.add_variable(SetSpace(2, 2));
    const int p2 = g.add_variable(SetSpace(2, 2));
    const int whole = g.add_variable(SetSpace(2, 2));
    g.add_factor({p1}, ppp_mass(g.space(p1), r1).mass);
    g.add_factor({p2}, ppp_mass(g.space(p2), r2).mass);
    g.add_factor({whole, p1, p2}, [](std::span<const SubsetMask> m) {
        const SubsetMask parts[] = {m[1], m[2]};
        return partition_indicator(m[0], parts);
    });
    const auto bel = run_set_bp(g, tree_schedule(g), 1);
    const std::vector<double> sum{r1[0] + r2[0], r1[1] + r2[1]};
    auto expect = ppp_mass(g.space(whole), sum);
    expect.normalize();
    EXPECT_LE(max_abs_diff(bel[static_cast<std::size_t>(whole)].mass, expect.mass), 1e-14);
}

TEST(SetBp, CardinalityOneReducesToVectorBp) {
    // Unary factors vanish on the empty set, so each set holds exactly one element.
    Rng rng(15);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const int n_var = 4;
    const int n_pts = 3;
    std::vector<std::vector<double>> unary(n_var, std::vector<double>(n_pts));
    std::vector<Eigen::MatrixXd> pair(n_var - 1, Eigen::MatrixXd(n_pts, n_pts));
    for (auto& v : unary) {
        for (double& x : v) x = u(rng);
    }
    for (auto& m : pair) m = m.unaryExpr([&](double) { return u(rng); });

    DiscreteFactorGraph g;
    for (int v = 0; v < n_var; ++v) g.add_variable(SetSpace(n_pts, 1));
    for (int v = 0; v < n_var; ++v) {
        std::vector<double> t{0.0};
        t.insert(t.end(), unary[v].begin(), unary[v].end());
        g.add_factor({v}, t);
    }
    for (int v = 0; v + 1 < n_var; ++v) {
        std::vector<double> t(16, 0.0);
        for (int a = 0; a < n_pts; ++a) {
            for (int b = 0; b < n_pts; ++b) t[(a + 1) * 4 + (b + 1)] = pair[v](a, b);
        }
        g.add_factor({v, v + 1}, t);
    }
    const auto bel = run_set_bp(g, tree_schedule(g), 1);
    const auto vec = oracles::chain_marginals(unary, pair);
    for (int v = 0; v < n_var; ++v) {
        EXPECT_EQ(bel[v].mass[0], 0.0);
        for (int a = 0; a < n_pts; ++a) EXPECT_NEAR(bel[v].mass[a + 1], vec[v][a], 1e-13);
    }
}

TEST(SetBp, FactorMessageMatchesMarginalOfLeaf) {
    DiscreteFactorGraph g;
    const int x = g.add_variable(SetSpace(1, 1));
    g.add_factor({x}, std::vector<double>{0.25, 0.75});
    SetBeliefPropagation bp(g);
    bp.run(tree_schedule(g), 1);
    EXPECT_DOUBLE_EQ(bp.factor_message(0, 0)[1], 0.75);
}

TEST(DiscreteFactorGraph, RejectsBadTables) {
    DiscreteFactorGraph g;
    g.add_variable(SetSpace(2, 1));
    EXPECT_THROW(g.add_factor({0}, std::vector<double>{1.0, 2.0}), DimensionError);
    EXPECT_THROW(g.add_factor({0}, std::vector<double>{1.0, -2.0, 0.5}), InputError);
    EXPECT_THROW(g.add_factor({3}, std::vector<double>{1.0}), InputError);
}
