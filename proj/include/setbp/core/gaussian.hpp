#pragma once

#include "setbp/core/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace setbp {

/// Multivariate Gaussian N(mean, cov). Dim may be Eigen::Dynamic.
template <int Dim = Eigen::Dynamic>
struct Gaussian {
    using Vector = Eigen::Matrix<double, Dim, 1>;
    using Matrix = Eigen::Matrix<double, Dim, Dim>;

    Vector mean;
    Matrix cov;

    Eigen::Index dim() const { return mean.size(); }

    friend bool operator==(const Gaussian& a, const Gaussian& b) {
        return a.mean.size() == b.mean.size() && a.cov.rows() == b.cov.rows() &&
               a.cov.cols() == b.cov.cols() && a.mean == b.mean && a.cov == b.cov;
    }
};

using Gaussian2 = Gaussian<2>;

template <typename Derived>
auto symmetrized(const Eigen::MatrixBase<Derived>& m) {
    return (0.5 * (m + m.transpose())).eval();
}

/// Throws NumericalFailure unless the covariance is symmetric (1e-9 relative) and positive definite.
template <int Dim>
void validate(const Gaussian<Dim>& g, std::string_view what = "gaussian") {
    if (g.cov.rows() != g.mean.size() || g.cov.cols() != g.mean.size()) {
        throw DimensionError(std::string(what) + ": mean and covariance dimensions disagree");
    }
    if (!g.mean.allFinite() || !g.cov.allFinite()) {
        throw NumericalFailure(std::string(what) + ": non-finite parameters");
    }
    const double scale = std::max(1.0, g.cov.cwiseAbs().maxCoeff());
    if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw NumericalFailure(std::string(what) + ": covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<typename Gaussian<Dim>::Matrix> eig(g.cov, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalFailure(std::string(what) + ": covariance is not positive definite");
    }
}

template <int Dim>
double log_density(const Gaussian<Dim>& g, const typename Gaussian<Dim>::Vector& x) {
    Eigen::LLT<typename Gaussian<Dim>::Matrix> llt(g.cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalFailure("log_density: covariance is not positive definite");
    }
    const typename Gaussian<Dim>::Vector white = llt.matrixL().solve(x - g.mean);
    const auto& L = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < g.dim(); ++i) log_det += 2.0 * std::log(L(i, i));
    return -0.5 * (white.squaredNorm() + log_det +
                   static_cast<double>(g.dim()) * std::log(2.0 * std::numbers::pi));
}

template <int Dim, int MDim>
struct GaussianUpdate {
    Gaussian<Dim> posterior;
    double log_evidence;
};

/// Conjugate linear-Gaussian measurement update z = H x + v, v ~ N(0, R).
///
/// Covariance is propagated in Joseph form and re-symmetrized. `log_evidence`
/// is log N(z; H mean, H cov H' + R). A singular innovation covariance raises
/// NumericalFailure naming `what`.
template <int Dim, int MDim>
GaussianUpdate<Dim, MDim> gaussian_update(const Gaussian<Dim>& prior,
                                          const Eigen::Matrix<double, MDim, Dim>& obs_matrix,
                                          const Eigen::Matrix<double, MDim, MDim>& obs_noise_cov,
                                          const Eigen::Matrix<double, MDim, 1>& z,
                                          std::string_view what = "gaussian_update") {
    if (obs_matrix.cols() != prior.dim() || obs_matrix.rows() != z.size() ||
        obs_noise_cov.rows() != z.size() || obs_noise_cov.cols() != z.size()) {
        throw DimensionError(std::string(what) + ": inconsistent dimensions");
    }
    using MMatrix = Eigen::Matrix<double, MDim, MDim>;
    using MVector = Eigen::Matrix<double, MDim, 1>;
    using Gain = Eigen::Matrix<double, Dim, MDim>;
    using Matrix = typename Gaussian<Dim>::Matrix;

    const MMatrix innovation_cov = symmetrized(obs_matrix * prior.cov * obs_matrix.transpose() + obs_noise_cov);
    Eigen::LLT<MMatrix> llt(innovation_cov);
    if (llt.info() != Eigen::Success || !innovation_cov.allFinite()) {
        throw NumericalFailure(std::string(what) + ": singular innovation covariance");
    }
    const MVector innovation = z - obs_matrix * prior.mean;
    const Gain gain = llt.solve(obs_matrix * prior.cov).transpose();

    const Matrix identity = Matrix::Identity(prior.dim(), prior.dim());
    const Matrix joseph = identity - gain * obs_matrix;

    GaussianUpdate<Dim, MDim> out{
        Gaussian<Dim>{prior.mean + gain * innovation,
                      symmetrized(joseph * prior.cov * joseph.transpose() +
                                  gain * obs_noise_cov * gain.transpose())},
        0.0};

    const MVector white = llt.matrixL().solve(innovation);
    double log_det = 0.0;
    const auto& L = llt.matrixL();
    for (Eigen::Index i = 0; i < z.size(); ++i) log_det += 2.0 * std::log(L(i, i));
    out.log_evidence = -0.5 * (white.squaredNorm() + log_det +
                               static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi));
    return out;
}

/// Weighted moment accumulator: collapses a Gaussian mixture to one Gaussian.
///
/// Component means are accumulated relative to the first mean seen, which
/// keeps the spread term accurate when means are large compared with their
/// separation (landmark coordinates of several hundred meters).
template <int Dim>
class MomentAccumulator {
public:
    using Vector = typename Gaussian<Dim>::Vector;
    using Matrix = typename Gaussian<Dim>::Matrix;

    void add(double weight, const Vector& mean, const Matrix& cov) {
        if (!(weight > 0.0)) return;
        if (total_ == 0.0) {
            origin_ = mean;
            first_ = Vector::Zero(mean.size());
            second_ = Matrix::Zero(mean.size(), mean.size());
            cov_ = Matrix::Zero(mean.size(), mean.size());
        }
        const Vector d = mean - origin_;
        total_ += weight;
        first_ += weight * d;
        second_ += weight * d * d.transpose();
        cov_ += weight * cov;
    }

    void add(double weight, const Gaussian<Dim>& g) { add(weight, g.mean, g.cov); }

    double total_weight() const { return total_; }

    /// Requires total_weight() > 0.
    Gaussian<Dim> result() const {
        const Vector m = first_ / total_;
        Matrix c = cov_ / total_ + second_ / total_ - m * m.transpose();
        return Gaussian<Dim>{origin_ + m, symmetrized(c)};
    }

private:
    double total_ = 0.0;
    Vector origin_;
    Vector first_;
    Matrix second_;
    Matrix cov_;
};

}  // namespace setbp
