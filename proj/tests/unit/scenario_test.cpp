#include "setbp/scenario/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace setbp;

namespace {

ScenarioConfig small_config() {
    ScenarioConfig c;
    c.area = Rect{0.0, 30.0, -100.0, 100.0};
    c.n_landmarks = 30;
    c.horizon = 12;
    c.initial_state_mean = SensorState(15.0, -110.0, 0.0, 20.0);
    c.seed = 77;
    return c;
}

}  // namespace

TEST(Scenario, SameSeedSameData) {
    const auto a = generate(small_config());
    const auto b = generate(small_config());
    ASSERT_EQ(a.steps.size(), b.steps.size());
    EXPECT_EQ(a.landmarks, b.landmarks);
    EXPECT_EQ(a.prior_mean, b.prior_mean);
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        EXPECT_EQ(a.steps[k].state, b.steps[k].state);
        EXPECT_EQ(a.steps[k].measurements, b.steps[k].measurements);
        EXPECT_EQ(a.steps[k].origins, b.steps[k].origins);
        EXPECT_EQ(a.steps[k].birth_hints, b.steps[k].birth_hints);
    }
    auto other = small_config();
    other.seed = 78;
    EXPECT_NE(generate(other).landmarks, a.landmarks);
}

TEST(Scenario, NoDetectionsNoClutterLeavesOnlyBs) {
    auto c = small_config();
    c.p_detect = 0.0;
    c.clutter_mean = 0.0;
    const auto gt = generate(c);
    for (const auto& s : gt.steps) {
        ASSERT_EQ(s.measurements.size(), 1U);
        EXPECT_EQ(s.origins[0], kOriginBs);
        EXPECT_TRUE(s.newly_detected.empty());
    }
}

TEST(Scenario, NoiselessUnboundedViewGivesExactOffsets) {
    auto c = small_config();
    c.fov_radius = 1e9;
    c.sigma_meas = 0.0;
    c.p_detect = 1.0;
    c.clutter_mean = 0.0;
    c.landmark_visible_from = 1;
    const auto gt = generate(c);
    for (const auto& s : gt.steps) {
        ASSERT_EQ(s.measurements.size(), gt.landmarks.size() + 1);
        for (std::size_t m = 0; m < s.measurements.size(); ++m) {
            const int o = s.origins[m];
            if (o == kOriginBs) {
                EXPECT_EQ(s.measurements[m], position(s.state));
            } else {
                ASSERT_GE(o, 0);
                EXPECT_EQ(s.measurements[m], gt.landmarks[static_cast<std::size_t>(o)] - position(s.state));
            }
        }
    }
    EXPECT_EQ(gt.steps.front().newly_detected.size(), gt.landmarks.size());
    EXPECT_EQ(gt.observed_map(1).size(), gt.landmarks.size());
}

TEST(Scenario, LandmarksStayHiddenBeforeVisibilityStep) {
    auto c = small_config();
    c.clutter_mean = 0.0;
    c.fov_radius = 1e9;
    const auto gt = generate(c);
    for (const auto& s : gt.steps) {
        if (s.k < c.landmark_visible_from) {
            EXPECT_EQ(s.measurements.size(), 1U);
        }
    }
    EXPECT_TRUE(gt.observed_map(c.landmark_visible_from - 1).empty());
}

TEST(Scenario, DetectionRateWithinThreeSigma) {
    auto c = small_config();
    c.n_landmarks = 100;
    c.horizon = 100;
    c.fov_radius = 1e9;
    c.clutter_mean = 0.0;
    c.landmark_visible_from = 1;
    const auto gt = generate(c);
    double visible = 0.0;
    double detected = 0.0;
    for (const auto& s : gt.steps) {
        visible += static_cast<double>(s.visible.size());
        detected += static_cast<double>(s.measurements.size() - 1);
    }
    ASSERT_EQ(visible, 1e4);
    const double sd = std::sqrt(visible * c.p_detect * (1.0 - c.p_detect));
    EXPECT_NEAR(detected, visible * c.p_detect, 3.0 * sd);
}

TEST(Scenario, ClutterCountAndRegion) {
    auto c = small_config();
    c.n_landmarks = 0;
    c.horizon = 10000;
    c.clutter_mean = 1.0;
    const auto gt = generate(c);
    const double half = 0.5 * c.clutter_side();
    EXPECT_NEAR(half, 0.5 * std::sqrt(1.0 / 1.6e-4), 1e-12);
    double count = 0.0;
    for (const auto& s : gt.steps) {
        for (std::size_t m = 0; m < s.measurements.size(); ++m) {
            if (s.origins[m] != kOriginClutter) continue;
            count += 1.0;
            EXPECT_LE(s.measurements[m].cwiseAbs().maxCoeff(), half);
        }
    }
    const double n = static_cast<double>(c.horizon) * c.clutter_mean;
    EXPECT_NEAR(count, n, 3.0 * std::sqrt(n));
}

TEST(Scenario, TrajectoryResidualMatchesProcessNoise) {
    auto c = small_config();
    c.n_landmarks = 0;
    c.clutter_mean = 0.0;
    c.horizon = 2000;
    const auto gt = generate(c);
    const ConstantVelocityModel motion{c.dt, c.sigma_process};
    double sq = 0.0;
    double n = 0.0;
    SensorState prev = gt.initial_state;
    for (const auto& s : gt.steps) {
        // Velocity residual is dt * q.
        const Eigen::Vector2d q = (s.state.tail<2>() - motion.transition().bottomRows<2>() * prev) / c.dt;
        EXPECT_NEAR((q - s.process_noise).norm(), 0.0, 1e-9);
        sq += q.squaredNorm();
        n += 2.0;
        prev = s.state;
    }
    EXPECT_NEAR(std::sqrt(sq / n), c.sigma_process, 0.1 * c.sigma_process);
}

TEST(Scenario, RejectsBadConfig) {
    auto c = small_config();
    c.p_detect = 1.5;
    EXPECT_THROW(generate(c), InputError);
    c = small_config();
    c.horizon = 0;
    EXPECT_THROW(generate(c), InputError);
}

TEST(ExtractBs, PicksClosestAndReturnsRest) {
    const std::vector<Eigen::Vector2d> z{{10, 0}, {1, 1}, {-4, 2}};
    const auto ex = extract_bs_measurement(z, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity());
    EXPECT_EQ(ex.index, 1U);
    EXPECT_EQ(ex.measurement, Eigen::Vector2d(1, 1));
    EXPECT_EQ(ex.remainder, (std::vector<Eigen::Vector2d>{{10, 0}, {-4, 2}}));
}

TEST(ExtractBs, MahalanobisAndTieBreak) {
    const std::vector<Eigen::Vector2d> z{{3, 0}, {0, 2}};
    Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
    cov(0, 0) = 9.0;
    EXPECT_EQ(extract_bs_measurement(z, Eigen::Vector2d::Zero(), cov).index, 0U);
    const std::vector<Eigen::Vector2d> tie{{1, 0}, {0, 1}, {-1, 0}};
    EXPECT_EQ(extract_bs_measurement(tie, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()).index, 0U);
}

TEST(ExtractBs, Errors) {
    EXPECT_THROW(extract_bs_measurement({}, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()), InputError);
    EXPECT_THROW(extract_bs_measurement({{0, 0}}, Eigen::Vector2d::Zero(), -Eigen::Matrix2d::Identity()),
                 NumericalFailure);
}
