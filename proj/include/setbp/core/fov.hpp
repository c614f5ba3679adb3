#pragma once

#include "setbp/core/gaussian.hpp"
#include "setbp/core/log_math.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace setbp {

/// Probability mass of a 2-D Gaussian with fixed covariance inside a disk.
///
/// The covariance is factored once so that the per-particle loops only pay for
/// the mean-dependent part. Three regimes:
///  - narrow compared with the disk: normal approximation of the distance to
///    the center, with its mean shifted outward by the boundary curvature;
///  - broad compared with the disk: density at the center times the disk area;
///  - otherwise polar quadrature (Gauss-Legendre in radius, trapezoid in angle).
class DiskIntegrator {
public:
    static constexpr double kNarrow = 20.0;

    DiskIntegrator(const Eigen::Matrix2d& cov, double radius) : cov_(cov), radius_(radius) {
        const double half_trace = 0.5 * (cov(0, 0) + cov(1, 1));
        const double half_gap = std::hypot(0.5 * (cov(0, 0) - cov(1, 1)), cov(0, 1));
        sigma_max_ = std::sqrt(std::max(half_trace + half_gap, 0.0));
        sigma_min_ = std::sqrt(std::max(half_trace - half_gap, 0.0));
        if (sigma_min_ > 0.0) {
            info_ = cov.inverse();
            norm_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
        }
    }

    double sigma_max() const { return sigma_max_; }
    double radius() const { return radius_; }

    /// True when the result is exactly zero for every mean at least `dist` from the center.
    bool vanishes_beyond(double dist) const {
        return sigma_max_ <= radius_ / kNarrow && dist >= radius_ + 10.0 * sigma_max_;
    }

    double operator()(const Eigen::Vector2d& mean, const Eigen::Vector2d& center) const {
        if (!(radius_ > 0.0)) return 0.0;
        if (std::isinf(radius_)) return 1.0;
        const Eigen::Vector2d offset = mean - center;
        const double dist = offset.norm();

        if (sigma_max_ <= radius_ / kNarrow) {
            if (sigma_max_ == 0.0) return dist <= radius_ ? 1.0 : 0.0;
            if (dist <= radius_ - 10.0 * sigma_max_) return 1.0;
            if (dist >= radius_ + 10.0 * sigma_max_) return 0.0;
            // Here dist >= radius / 2, so the second-order expansion of |mean + e| holds.
            const Eigen::Vector2d u = offset / dist;
            const Eigen::Vector2d v(-u(1), u(0));
            const double sigma_u = std::sqrt(u.dot(cov_ * u));
            const double shift = v.dot(cov_ * v) / (2.0 * dist);
            return normal_cdf((radius_ - dist - shift) / sigma_u);
        }
        if (sigma_min_ >= 8.0 * radius_) {
            const double density = norm_ * std::exp(-0.5 * offset.dot(info_ * offset));
            return std::min(1.0, std::numbers::pi * radius_ * radius_ * density);
        }

        constexpr int kAngles = 64;
        auto ring = [&](double rho) {
            double acc = 0.0;
            for (int a = 0; a < kAngles; ++a) {
                const double theta = 2.0 * std::numbers::pi * a / kAngles;
                const Eigen::Vector2d d = center + rho * Eigen::Vector2d(std::cos(theta), std::sin(theta)) - mean;
                acc += std::exp(-0.5 * d.dot(info_ * d));
            }
            return norm_ * rho * acc * (2.0 * std::numbers::pi / kAngles);
        };
        const double p = boost::math::quadrature::gauss<double, 30>::integrate(ring, 0.0, radius_);
        return std::clamp(p, 0.0, 1.0);
    }

private:
    Eigen::Matrix2d cov_;
    Eigen::Matrix2d info_ = Eigen::Matrix2d::Zero();
    double norm_ = 0.0;
    double radius_;
    double sigma_max_;
    double sigma_min_;
};

/// Probability mass of N(g.mean, g.cov) inside the disk of `radius` around `center`.
inline double disk_probability(const Gaussian2& g, const Eigen::Vector2d& center, double radius) {
    return DiskIntegrator(g.cov, radius)(g.mean, center);
}

/// Constant detection probability inside a sensor-centered disk, zero outside.
struct DiskDetectionModel {
    double p_detect = 0.95;
    double fov_radius = 20.0;

    double operator()(const Eigen::Vector2d& sensor, const Eigen::Vector2d& landmark) const {
        return (landmark - sensor).norm() < fov_radius ? p_detect : 0.0;
    }

    /// E[p_D] for a Gaussian landmark seen from a fixed sensor position.
    double expected(const Eigen::Vector2d& sensor, const Gaussian2& landmark) const {
        return p_detect * disk_probability(landmark, sensor, fov_radius);
    }
};

}  // namespace setbp
