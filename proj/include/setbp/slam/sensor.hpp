#pragma once

#include "setbp/core/errors.hpp"
#include "setbp/core/log_math.hpp"
#include "setbp/core/seed.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace setbp {

/// [x, y, vx, vy] in m and m/s.
using SensorState = Eigen::Vector4d;

inline Eigen::Vector2d position(const SensorState& s) { return s.head<2>(); }

/// s_k = F s_{k-1} + B q_k, q_k ~ N(0, sigma^2 I).
struct ConstantVelocityModel {
    double dt = 0.5;
    double sigma_process = 0.1;

    Eigen::Matrix4d transition() const {
        Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
        f.topRightCorner<2, 2>() = dt * Eigen::Matrix2d::Identity();
        return f;
    }

    Eigen::Matrix<double, 4, 2> noise_gain() const {
        Eigen::Matrix<double, 4, 2> b;
        b.topRows<2>() = 0.5 * dt * dt * Eigen::Matrix2d::Identity();
        b.bottomRows<2>() = dt * Eigen::Matrix2d::Identity();
        return b;
    }

    SensorState propagate(const SensorState& s, const Eigen::Vector2d& q) const {
        return transition() * s + noise_gain() * q;
    }

    template <typename Engine>
    Eigen::Vector2d sample_noise(Engine& rng) const {
        std::normal_distribution<double> n(0.0, sigma_process);
        const double a = n(rng);
        const double b = n(rng);
        return {a, b};
    }
};

/// Weighted particle approximation of the sensor-state belief.
struct ParticleBelief {
    std::vector<SensorState> particles;
    std::vector<double> log_weights;

    std::size_t size() const { return particles.size(); }

    /// Shifts log-weights so that they log-sum-exp to zero.
    void normalize(int time_index = -1) {
        if (particles.empty()) throw NumericalFailure("particle set is empty" + at(time_index));
        const double z = log_sum_exp(log_weights);
        if (!std::isfinite(z)) throw NumericalFailure("particle weights are degenerate" + at(time_index));
        for (double& w : log_weights) {
            w -= z;
            if (std::isnan(w)) throw NumericalFailure("particle weight is NaN" + at(time_index));
        }
    }

    std::vector<double> weights() const {
        std::vector<double> w(log_weights.size());
        for (std::size_t p = 0; p < w.size(); ++p) w[p] = std::exp(log_weights[p]);
        return w;
    }

    double ess() const {
        double s2 = 0.0;
        for (double lw : log_weights) s2 += std::exp(2.0 * lw);
        return s2 > 0.0 ? 1.0 / s2 : 0.0;
    }

    SensorState mean() const {
        SensorState m = SensorState::Zero();
        for (std::size_t p = 0; p < particles.size(); ++p) m += std::exp(log_weights[p]) * particles[p];
        return m;
    }

    Eigen::Matrix4d covariance() const {
        const SensorState m = mean();
        Eigen::Matrix4d c = Eigen::Matrix4d::Zero();
        for (std::size_t p = 0; p < particles.size(); ++p) {
            const SensorState d = particles[p] - m;
            c += std::exp(log_weights[p]) * d * d.transpose();
        }
        return c;
    }

private:
    static std::string at(int k) { return k >= 0 ? " at time " + std::to_string(k) : std::string(); }
};

inline ParticleBelief sample_particles(const SensorState& mean, const Eigen::Matrix4d& cov, std::size_t count,
                                       std::uint64_t seed) {
    if (count == 0) throw InputError("sample_particles: particle count must be positive");
    Eigen::LLT<Eigen::Matrix4d> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalFailure("sample_particles: covariance is not positive definite");
    const Eigen::Matrix4d l = llt.matrixL();
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    ParticleBelief b;
    b.particles.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        Eigen::Vector4d u;
        for (int d = 0; d < 4; ++d) u(d) = n(rng);
        b.particles.push_back(mean + l * u);
    }
    b.log_weights.assign(count, -std::log(static_cast<double>(count)));
    return b;
}

/// Systematic resampling: one uniform offset, `count` evenly spaced pointers
/// (`count` = 0 keeps the particle count).
inline ParticleBelief resample(const ParticleBelief& b, std::uint64_t seed, std::size_t count = 0) {
    const std::size_t src_n = b.size();
    if (src_n == 0) throw NumericalFailure("resample: particle set is empty");
    const std::size_t n = count == 0 ? src_n : count;
    const std::vector<double> w = b.weights();
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalFailure("resample: all particle weights are zero");

    Rng rng(seed);
    const double step = 1.0 / static_cast<double>(n);
    const double offset = std::uniform_real_distribution<double>(0.0, step)(rng);

    ParticleBelief out;
    out.particles.reserve(n);
    double cumulative = w[0] / total;
    std::size_t src = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = offset + static_cast<double>(k) * step;
        while (u >= cumulative && src + 1 < src_n) cumulative += w[++src] / total;
        out.particles.push_back(b.particles[src]);
    }
    out.log_weights.assign(n, -std::log(static_cast<double>(n)));
    return out;
}

}  // namespace setbp
