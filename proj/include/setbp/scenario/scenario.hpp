#pragma once

#include "setbp/core/errors.hpp"
#include "setbp/core/seed.hpp"
#include "setbp/slam/sensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace setbp {

struct Rect {
    double x_min = 0.0;
    double x_max = 30.0;
    double y_min = -400.0;
    double y_max = 470.0;

    double area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// Bistatic radio-SLAM scenario: one BS, static scattering points, one moving sensor.
struct ScenarioConfig {
    Rect area;
    int n_landmarks = 176;
    Eigen::Vector2d bs_position = Eigen::Vector2d::Zero();
    int horizon = 80;
    double dt = 0.5;
    double sigma_process = 0.1;
    double sigma_meas = 0.707;
    double fov_radius = 20.0;
    double p_detect = 0.95;
    double clutter_mean = 1.0;
    /// Clutter intensity c(z) in 1/m^2. Clutter is drawn uniformly on a square of
    /// area clutter_mean / clutter_density centered at the zero relative offset,
    /// so that the intensity integrates to clutter_mean.
    double clutter_density = 1.6e-4;
    int landmark_visible_from = 5;
    SensorState initial_state_mean{15.0, -420.0, 0.0, 20.0};
    Eigen::Vector4d initial_cov_diag{0.5, 0.5, 0.005, 0.005};
    /// Variance of the informative birth means around the true landmark.
    double birth_hint_variance = 0.01;
    std::uint64_t seed = 1;

    Eigen::Matrix4d initial_cov() const { return initial_cov_diag.asDiagonal(); }

    double clutter_side() const {
        if (clutter_mean <= 0.0 || clutter_density <= 0.0) return 0.0;
        return std::sqrt(clutter_mean / clutter_density);
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw InputError(std::string("scenario.") + name + " must be positive");
        };
        if (!(area.x_max > area.x_min && area.y_max > area.y_min)) throw InputError("scenario.area is empty");
        if (n_landmarks < 0) throw InputError("scenario.n_landmarks must be nonnegative");
        if (horizon < 1) throw InputError("scenario.horizon must be >= 1");
        positive(dt, "dt");
        if (!(sigma_process >= 0.0)) throw InputError("scenario.sigma_process must be nonnegative");
        if (!(sigma_meas >= 0.0)) throw InputError("scenario.sigma_meas must be nonnegative");
        positive(fov_radius, "fov_radius");
        if (!(p_detect >= 0.0 && p_detect <= 1.0)) throw InputError("scenario.p_detect must lie in [0, 1]");
        if (!(clutter_mean >= 0.0)) throw InputError("scenario.clutter_mean must be nonnegative");
        if (clutter_mean > 0.0) positive(clutter_density, "clutter_density");
        if (!(initial_cov_diag.minCoeff() > 0.0)) throw InputError("scenario.initial_cov must be positive");
        if (!(birth_hint_variance >= 0.0)) throw InputError("scenario.birth_hint_variance must be nonnegative");
    }
};

/// Origin tag of a generated measurement. Landmark origins are the landmark index (>= 0).
inline constexpr int kOriginBs = -1;
inline constexpr int kOriginClutter = -2;

struct ScenarioStep {
    int k = 0;
    SensorState state;
    Eigen::Vector2d process_noise = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> measurements;
    /// Evaluation only, never shown to the filter.
    std::vector<int> origins;
    std::vector<int> visible;
    std::vector<int> newly_detected;
    /// Informative birth means for the landmarks first detected at this step.
    std::vector<Eigen::Vector2d> birth_hints;
};

struct GroundTruth {
    std::vector<Eigen::Vector2d> landmarks;
    SensorState initial_state;
    /// Prior mean handed to the filter, drawn around the true initial state.
    SensorState prior_mean;
    /// steps[k-1] holds time k = 1..K.
    std::vector<ScenarioStep> steps;

    /// Landmarks inside the field of view at some step up to and including k.
    std::vector<Eigen::Vector2d> observed_map(int k) const {
        std::vector<bool> seen(landmarks.size(), false);
        for (const auto& s : steps) {
            if (s.k > k) break;
            for (int id : s.visible) seen[static_cast<std::size_t>(id)] = true;
        }
        std::vector<Eigen::Vector2d> out;
        for (std::size_t i = 0; i < landmarks.size(); ++i) {
            if (seen[i]) out.push_back(landmarks[i]);
        }
        return out;
    }
};

inline GroundTruth generate(const ScenarioConfig& cfg) {
    cfg.validate();
    const ConstantVelocityModel motion{cfg.dt, cfg.sigma_process};
    GroundTruth gt;

    {
        Rng rng = make_rng(cfg.seed, "landmarks");
        std::uniform_real_distribution<double> ux(cfg.area.x_min, cfg.area.x_max);
        std::uniform_real_distribution<double> uy(cfg.area.y_min, cfg.area.y_max);
        for (int i = 0; i < cfg.n_landmarks; ++i) {
            const double x = ux(rng);
            const double y = uy(rng);
            gt.landmarks.emplace_back(x, y);
        }
    }
    {
        Rng rng = make_rng(cfg.seed, "prior");
        const Eigen::Matrix4d l = Eigen::LLT<Eigen::Matrix4d>(cfg.initial_cov()).matrixL();
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::Vector4d u;
        for (int d = 0; d < 4; ++d) u(d) = n(rng);
        gt.initial_state = cfg.initial_state_mean;
        gt.prior_mean = cfg.initial_state_mean + l * u;
    }

    Rng traj_rng = make_rng(cfg.seed, "trajectory");
    std::vector<bool> detected_before(gt.landmarks.size(), false);
    SensorState s = gt.initial_state;
    const double side = cfg.clutter_side();
    for (int k = 1; k <= cfg.horizon; ++k) {
        ScenarioStep step;
        step.k = k;
        step.process_noise = motion.sample_noise(traj_rng);
        s = motion.propagate(s, step.process_noise);
        step.state = s;
        const Eigen::Vector2d xs = position(s);

        Rng meas_rng = make_rng(cfg.seed, "measurement", static_cast<std::uint64_t>(k));
        Rng det_rng = make_rng(cfg.seed, "detection", static_cast<std::uint64_t>(k));
        Rng clutter_rng = make_rng(cfg.seed, "clutter", static_cast<std::uint64_t>(k));
        Rng birth_rng = make_rng(cfg.seed, "birth", static_cast<std::uint64_t>(k));
        Rng shuffle_rng = make_rng(cfg.seed, "shuffle", static_cast<std::uint64_t>(k));
        std::normal_distribution<double> noise(0.0, cfg.sigma_meas);
        std::normal_distribution<double> hint(0.0, std::sqrt(cfg.birth_hint_variance));
        std::bernoulli_distribution detect(cfg.p_detect);

        std::vector<Eigen::Vector2d> z;
        std::vector<int> origin;
        {
            const double a = noise(meas_rng);
            const double b = noise(meas_rng);
            z.push_back(xs + Eigen::Vector2d(a, b));
            origin.push_back(kOriginBs);
        }
        if (k >= cfg.landmark_visible_from) {
            for (std::size_t i = 0; i < gt.landmarks.size(); ++i) {
                if (!((gt.landmarks[i] - xs).norm() < cfg.fov_radius)) continue;
                step.visible.push_back(static_cast<int>(i));
                if (!detect(det_rng)) continue;
                const double a = noise(meas_rng);
                const double b = noise(meas_rng);
                z.push_back(gt.landmarks[i] - xs + Eigen::Vector2d(a, b));
                origin.push_back(static_cast<int>(i));
                if (!detected_before[i]) {
                    detected_before[i] = true;
                    step.newly_detected.push_back(static_cast<int>(i));
                    const double hx = hint(birth_rng);
                    const double hy = hint(birth_rng);
                    step.birth_hints.push_back(gt.landmarks[i] + Eigen::Vector2d(hx, hy));
                }
            }
        }
        if (side > 0.0) {
            const int n_clutter = std::poisson_distribution<int>(cfg.clutter_mean)(clutter_rng);
            std::uniform_real_distribution<double> u(-0.5 * side, 0.5 * side);
            for (int c = 0; c < n_clutter; ++c) {
                const double a = u(clutter_rng);
                const double b = u(clutter_rng);
                z.emplace_back(a, b);
                origin.push_back(kOriginClutter);
            }
        }

        std::vector<std::size_t> order(z.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(shuffle_rng);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t i : order) {
            step.measurements.push_back(z[i]);
            step.origins.push_back(origin[i]);
        }
        gt.steps.push_back(std::move(step));
    }
    return gt;
}

struct BsExtraction {
    Eigen::Vector2d measurement;
    std::size_t index;
    std::vector<Eigen::Vector2d> remainder;
};

/// Picks the measurement closest to `reference` in Mahalanobis distance under
/// `gate_cov` (lowest index wins ties) and returns it with the rest of the set.
inline BsExtraction extract_bs_measurement(const std::vector<Eigen::Vector2d>& zset,
                                           const Eigen::Vector2d& reference, const Eigen::Matrix2d& gate_cov) {
    if (zset.empty()) throw InputError("extract_bs_measurement: measurement set is empty");
    const Eigen::LLT<Eigen::Matrix2d> llt(gate_cov);
    if (llt.info() != Eigen::Success) throw NumericalFailure("extract_bs_measurement: gate covariance is not positive definite");
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < zset.size(); ++j) {
        const double d2 = llt.matrixL().solve(zset[j] - reference).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = j;
        }
    }
    BsExtraction out{zset[best], best, {}};
    out.remainder.reserve(zset.size() - 1);
    for (std::size_t j = 0; j < zset.size(); ++j) {
        if (j != best) out.remainder.push_back(zset[j]);
    }
    return out;
}

}  // namespace setbp
