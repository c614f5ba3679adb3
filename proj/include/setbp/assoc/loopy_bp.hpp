#pragma once

#include "setbp/core/errors.hpp"
#include "setbp/core/log_math.hpp"
#include "setbp/core/rfs.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace setbp {

/// Association evidence for I targets and J measurements.
///
/// target_weights(i, 0) is the miss evidence of target i and target_weights(i, j)
/// the evidence that it generated measurement j (1-based columns).
/// measurement_weights(j) is the clutter-or-new-target evidence of measurement j.
struct AssociationProblem {
    Eigen::MatrixXd target_weights;
    Eigen::VectorXd measurement_weights;

    Eigen::Index num_targets() const { return target_weights.rows(); }
    Eigen::Index num_measurements() const { return measurement_weights.size(); }

    void validate() const {
        if (target_weights.cols() != measurement_weights.size() + 1 && target_weights.rows() > 0) {
            throw DimensionError("AssociationProblem: target_weights needs J+1 columns");
        }
        if (!target_weights.allFinite() || !measurement_weights.allFinite() ||
            (target_weights.size() > 0 && target_weights.minCoeff() < 0.0) ||
            (measurement_weights.size() > 0 && measurement_weights.minCoeff() < 0.0)) {
            throw InputError("AssociationProblem: evidence must be finite and nonnegative");
        }
        for (Eigen::Index i = 0; i < target_weights.rows(); ++i) {
            if (!(target_weights.row(i).maxCoeff() > 0.0)) {
                throw DegenerateEvidence("AssociationProblem: target " + std::to_string(i) + " has no positive evidence",
                                         static_cast<std::size_t>(i));
            }
        }
    }
};

/// p_c(i, 0) miss, p_c(i, j) target i -> measurement j; p_d(j, 0) clutter-or-new, p_d(j, i) measurement j <- target i.
struct AssociationMarginals {
    Eigen::MatrixXd p_c;
    Eigen::MatrixXd p_d;
};

struct LoopyBpOptions {
    int max_iterations = 200;
    double tolerance = 1e-6;
    /// Geometric damping of the measurement-to-target messages, 0 disables.
    double damping = 0.0;
};

struct LoopyBpResult {
    AssociationMarginals marginals;
    /// log mu(i, j): target-to-measurement messages.
    Eigen::MatrixXd log_mu;
    /// log nu(i, j): measurement j to target i messages.
    Eigen::MatrixXd log_nu;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// out[k] = log sum_{l != k} exp(v[l]) combined with `base`, via prefix/suffix sums.
inline void exclusive_log_sums(std::span<const double> v, double base, std::span<double> out) {
    const std::size_t n = v.size();
    std::vector<double> prefix(n + 1, kNegInf);
    std::vector<double> suffix(n + 1, kNegInf);
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = log_add(prefix[k], v[k]);
    for (std::size_t k = n; k-- > 0;) suffix[k] = log_add(suffix[k + 1], v[k]);
    for (std::size_t k = 0; k < n; ++k) out[k] = log_add(base, log_add(prefix[k], suffix[k + 1]));
}

inline constexpr double kEvidenceFloor = 1e-300;

}  // namespace detail

/// Loopy BP between target-oriented and measurement-oriented association variables.
///
/// Messages are kept in their normalized ratio form:
///   mu(i,j) = beta(i,j) / (beta(i,0) + sum_{j' != j} beta(i,j') nu(i,j'))
///   nu(i,j) = 1 / (w(j) + sum_{i' != i} mu(i',j))
/// starting from nu = 1, stored in log domain. Iteration stops once the largest
/// change of log nu falls below the tolerance.
inline LoopyBpResult loopy_bp(const AssociationProblem& problem, const LoopyBpOptions& opt = {}) {
    if (opt.max_iterations < 1) throw InputError("loopy_bp: max_iterations must be >= 1");
    if (!(opt.tolerance > 0.0)) throw InputError("loopy_bp: tolerance must be positive");
    if (opt.damping < 0.0 || opt.damping >= 1.0) throw InputError("loopy_bp: damping must lie in [0, 1)");
    problem.validate();

    const Eigen::Index n_t = problem.num_targets();
    const Eigen::Index n_m = problem.num_measurements();
    const Eigen::MatrixXd log_beta = problem.target_weights.unaryExpr([](double x) { return safe_log(x); });
    const Eigen::VectorXd log_w = problem.measurement_weights.unaryExpr(
        [](double x) { return std::log(std::max(x, detail::kEvidenceFloor)); });

    LoopyBpResult res;
    res.log_mu = Eigen::MatrixXd::Constant(n_t, n_m, kNegInf);
    res.log_nu = Eigen::MatrixXd::Zero(n_t, n_m);

    std::vector<double> buf;
    std::vector<double> excl;
    if (n_t == 0 || n_m == 0) {
        res.converged = true;
    } else {
        for (int it = 1; it <= opt.max_iterations; ++it) {
            buf.resize(static_cast<std::size_t>(n_m));
            excl.resize(static_cast<std::size_t>(n_m));
            for (Eigen::Index i = 0; i < n_t; ++i) {
                for (Eigen::Index j = 0; j < n_m; ++j) buf[j] = log_beta(i, j + 1) + res.log_nu(i, j);
                detail::exclusive_log_sums(buf, log_beta(i, 0), excl);
                for (Eigen::Index j = 0; j < n_m; ++j) {
                    res.log_mu(i, j) = log_beta(i, j + 1) == kNegInf ? kNegInf : log_beta(i, j + 1) - excl[j];
                }
            }
            buf.resize(static_cast<std::size_t>(n_t));
            excl.resize(static_cast<std::size_t>(n_t));
            double change = 0.0;
            for (Eigen::Index j = 0; j < n_m; ++j) {
                for (Eigen::Index i = 0; i < n_t; ++i) buf[i] = res.log_mu(i, j);
                detail::exclusive_log_sums(buf, log_w(j), excl);
                for (Eigen::Index i = 0; i < n_t; ++i) {
                    const double fresh = -excl[i];
                    const double next = (1.0 - opt.damping) * fresh + opt.damping * res.log_nu(i, j);
                    change = std::max(change, std::abs(next - res.log_nu(i, j)));
                    res.log_nu(i, j) = next;
                }
            }
            res.iterations = it;
            if (change < opt.tolerance) {
                res.converged = true;
                break;
            }
        }
    }

    res.marginals.p_c = Eigen::MatrixXd::Zero(n_t, n_m + 1);
    res.marginals.p_d = Eigen::MatrixXd::Zero(n_m, n_t + 1);
    std::vector<double> row;
    for (Eigen::Index i = 0; i < n_t; ++i) {
        row.assign(static_cast<std::size_t>(n_m + 1), kNegInf);
        row[0] = log_beta(i, 0);
        for (Eigen::Index j = 0; j < n_m; ++j) row[j + 1] = log_beta(i, j + 1) + res.log_nu(i, j);
        const double z = log_sum_exp(row);
        for (Eigen::Index j = 0; j <= n_m; ++j) res.marginals.p_c(i, j) = std::exp(row[j] - z);
    }
    for (Eigen::Index j = 0; j < n_m; ++j) {
        row.assign(static_cast<std::size_t>(n_t + 1), kNegInf);
        row[0] = log_w(j);
        for (Eigen::Index i = 0; i < n_t; ++i) row[i + 1] = res.log_mu(i, j);
        const double z = log_sum_exp(row);
        for (Eigen::Index i = 0; i <= n_t; ++i) res.marginals.p_d(j, i) = std::exp(row[i] - z);
    }
    return res;
}

/// Assembles the association problem from per-target existence probabilities.
///
/// detection_evidence(i, 0) = E[p_D] and detection_evidence(i, j) = E[p_D g(z_j | .)],
/// expectations over the sensor belief and the Bernoulli density.
inline AssociationProblem build_problem(std::span<const double> existence,
                                        std::span<const double> new_target_evidence, double clutter_intensity,
                                        const Eigen::MatrixXd& detection_evidence) {
    const auto n_t = static_cast<Eigen::Index>(existence.size());
    const auto n_m = static_cast<Eigen::Index>(new_target_evidence.size());
    if (detection_evidence.rows() != n_t || (n_t > 0 && detection_evidence.cols() != n_m + 1)) {
        throw DimensionError("build_problem: detection_evidence must be I x (J+1)");
    }
    if (!(clutter_intensity >= 0.0)) throw InputError("build_problem: clutter intensity must be nonnegative");
    AssociationProblem p;
    p.target_weights = Eigen::MatrixXd::Zero(n_t, n_m + 1);
    p.measurement_weights = Eigen::VectorXd::Zero(n_m);
    for (Eigen::Index i = 0; i < n_t; ++i) {
        const double r = existence[static_cast<std::size_t>(i)];
        if (!(r >= 0.0 && r <= 1.0)) throw InputError("build_problem: existence outside [0, 1] for target " + std::to_string(i));
        if (!(detection_evidence.row(i).minCoeff() >= 0.0)) {
            throw InputError("build_problem: negative detection evidence for target " + std::to_string(i));
        }
        p.target_weights(i, 0) = (1.0 - r) + r * (1.0 - detection_evidence(i, 0));
        for (Eigen::Index j = 1; j <= n_m; ++j) p.target_weights(i, j) = r * detection_evidence(i, j);
    }
    for (Eigen::Index j = 0; j < n_m; ++j) {
        const double e = new_target_evidence[static_cast<std::size_t>(j)];
        if (!(e >= 0.0)) throw InputError("build_problem: negative new-target evidence for measurement " + std::to_string(j));
        p.measurement_weights(j) = clutter_intensity + e;
    }
    return p;
}

template <int Dim>
AssociationProblem build_problem(const std::vector<BernoulliComponent<Dim>>& bernoullis,
                                 std::span<const double> new_target_evidence, double clutter_intensity,
                                 const Eigen::MatrixXd& detection_evidence) {
    std::vector<double> r;
    r.reserve(bernoullis.size());
    for (const auto& b : bernoullis) r.push_back(b.existence);
    return build_problem(std::span<const double>(r), new_target_evidence, clutter_intensity, detection_evidence);
}

}  // namespace setbp
