#pragma once

#include "setbp/assoc/loopy_bp.hpp"
#include "setbp/core/fov.hpp"
#include "setbp/core/mixture.hpp"
#include "setbp/core/rfs.hpp"
#include "setbp/core/seed.hpp"
#include "setbp/factors/set_factors.hpp"
#include "setbp/scenario/scenario.hpp"
#include "setbp/slam/sensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace setbp {

enum class FilterMode { PMB, MB };
enum class BirthModel { Informative, Uninformative };

struct FilterConfig {
    double p_detect = 0.95;
    double fov_radius = 20.0;
    double p_survive = 0.99;
    double clutter_intensity = 1.6e-4;
    double sigma_meas = 0.707;
    ConstantVelocityModel motion{0.5, 0.1};

    BirthModel birth = BirthModel::Uninformative;
    double uninformative_birth_weight = 1e-3;
    double uninformative_birth_variance = 1e6;
    double informative_birth_weight = 1.0;
    double informative_birth_variance = 0.01;
    /// Existence assigned to MB birth Bernoullis: min(birth weight, this).
    double mb_birth_existence = 0.95;

    double detect_threshold = 0.4;
    double bernoulli_prune = 1e-5;
    double poisson_prune = 5e-10;
    double merge_distance = 4.0;
    std::size_t max_components = 100;

    std::size_t particle_count = 2000;
    double ess_fraction = 0.5;
    Eigen::Vector4d initial_cov_diag{0.5, 0.5, 0.005, 0.005};

    FilterMode mode = FilterMode::PMB;
    bool use_new_target_sensor_messages = true;

    /// The BS-sensor measurement is present in every set; it weights the
    /// particles for time steps k < bs_use_until.
    bool bs_measurement_present = true;
    int bs_use_until = 5;

    /// Optional ellipsoidal gate on squared Mahalanobis distance of landmark measurements.
    bool gating = false;
    double gate_threshold = 13.8;

    LoopyBpOptions association;

    void validate() const {
        auto prob = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0)) throw InputError(std::string("filter.") + name + " must lie in [0, 1]");
        };
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0)) throw InputError(std::string("filter.") + name + " must be nonnegative");
        };
        prob(p_detect, "p_detect");
        prob(p_survive, "p_survive");
        prob(ess_fraction, "ess_fraction");
        prob(mb_birth_existence, "mb_birth_existence");
        nonneg(detect_threshold, "detect_threshold");
        nonneg(bernoulli_prune, "bernoulli_prune");
        nonneg(poisson_prune, "poisson_prune");
        nonneg(merge_distance, "merge_distance");
        nonneg(clutter_intensity, "clutter_intensity");
        nonneg(uninformative_birth_weight, "uninformative_birth_weight");
        nonneg(informative_birth_weight, "informative_birth_weight");
        if (!(fov_radius > 0.0)) throw InputError("filter.fov_radius must be positive");
        if (!(sigma_meas > 0.0)) throw InputError("filter.sigma_meas must be positive");
        if (!(uninformative_birth_variance > 0.0)) throw InputError("filter.uninformative_birth_variance must be positive");
        if (!(informative_birth_variance > 0.0)) throw InputError("filter.informative_birth_variance must be positive");
        if (particle_count == 0) throw InputError("filter.particle_count must be positive");
        if (max_components == 0) throw InputError("filter.max_components must be positive");
        if (!(initial_cov_diag.minCoeff() > 0.0)) throw InputError("filter.initial_cov must be positive");
        if (!(motion.dt > 0.0)) throw InputError("filter.dt must be positive");
        if (!(motion.sigma_process >= 0.0)) throw InputError("filter.sigma_process must be nonnegative");
    }
};

/// Everything the filter sees at one time step.
struct StepInput {
    int k = 0;
    std::vector<Eigen::Vector2d> measurements;
    /// Informative birth means; ignored under the uninformative birth model.
    std::vector<Eigen::Vector2d> birth_hints;
};

struct SlamPosterior {
    ParticleBelief sensor;
    PMBState<2> map;
    int time_index = 0;
    /// Highest auxiliary label handed out so far, including pruned Bernoullis.
    Label label_counter = 0;
};

struct StepDiagnostics {
    double ess = 0.0;
    bool resampled = false;
    std::size_t bernoulli_count = 0;
    double ppp_mass = 0.0;
    int association_iterations = 0;
    bool association_converged = true;
};

struct Estimates {
    SensorState sensor;
    std::vector<Eigen::Vector2d> map;
};

inline SlamPosterior initialize(const SensorState& prior_mean, const FilterConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    SlamPosterior post;
    post.sensor = sample_particles(prior_mean, cfg.initial_cov_diag.asDiagonal(), cfg.particle_count, seed);
    post.map.undetected.label = 0;
    return post;
}

namespace detail {

struct SplitMeasurements {
    std::optional<Eigen::Vector2d> bs;
    std::vector<Eigen::Vector2d> landmark;
};

inline SplitMeasurements split_measurements(const std::vector<Eigen::Vector2d>& z, const ParticleBelief& sensor,
                                            const FilterConfig& cfg) {
    SplitMeasurements out;
    if (!cfg.bs_measurement_present || z.empty()) {
        out.landmark = z;
        return out;
    }
    const SensorState mean = sensor.mean();
    const Eigen::Matrix2d gate = cfg.sigma_meas * cfg.sigma_meas * Eigen::Matrix2d::Identity() +
                                 sensor.covariance().topLeftCorner<2, 2>();
    auto ex = extract_bs_measurement(z, position(mean), gate);
    out.bs = ex.measurement;
    out.landmark = std::move(ex.remainder);
    return out;
}

/// Landmark Gaussian prepared for per-particle evaluation: the innovation
/// covariance, gain and posterior covariance do not depend on the sensor
/// position, only the innovation does.
struct PreparedLandmark {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
    Eigen::Matrix2d innovation_info;
    Eigen::Matrix2d gain;
    Eigen::Matrix2d post_cov;
    double log_norm;
    /// Euclidean innovation radius beyond which the evidence is treated as zero.
    double reach;
    DiskIntegrator prior_disk;
    DiskIntegrator post_disk;

    static constexpr double kMaxMahalanobis2 = 150.0;

    PreparedLandmark(const Gaussian2& g, double sigma_meas, double fov)
        : mean(g.mean), cov(g.cov), prior_disk(g.cov, fov), post_disk(g.cov, fov) {
        const Eigen::Matrix2d r = sigma_meas * sigma_meas * Eigen::Matrix2d::Identity();
        const Eigen::Matrix2d s = symmetrized(g.cov + r);
        innovation_info = s.inverse();
        gain = g.cov * innovation_info;
        const Eigen::Matrix2d joseph = Eigen::Matrix2d::Identity() - gain;
        post_cov = symmetrized(joseph * g.cov * joseph.transpose() + gain * r * gain.transpose());
        log_norm = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(s.determinant());
        const double half_trace = 0.5 * s.trace();
        const double lmax = half_trace + std::hypot(0.5 * (s(0, 0) - s(1, 1)), s(0, 1));
        reach = std::sqrt(kMaxMahalanobis2 * lmax);
        post_disk = DiskIntegrator(post_cov, fov);
    }

    /// p_D-free detection evidence N(z; mean - s, P + R) * P(posterior inside FoV).
    double evidence(const Eigen::Vector2d& z, const Eigen::Vector2d& sensor, double gate,
                    Eigen::Vector2d* post_mean = nullptr) const {
        const Eigen::Vector2d innov = z - (mean - sensor);
        const double m2 = innov.dot(innovation_info * innov);
        if (m2 > kMaxMahalanobis2 || m2 > gate) return 0.0;
        const Eigen::Vector2d pm = mean + gain * innov;
        if (post_mean) *post_mean = pm;
        return std::exp(log_norm - 0.5 * m2) * post_disk(pm, sensor);
    }

    /// True when no particle within `cloud_radius` of `cloud_center` can see z.
    bool out_of_reach(const Eigen::Vector2d& z, const Eigen::Vector2d& cloud_center, double cloud_radius) const {
        return (z - (mean - cloud_center)).norm() > reach + cloud_radius;
    }

    /// True when the FoV mass is exactly zero for every particle in the cloud.
    bool out_of_view(const Eigen::Vector2d& cloud_center, double cloud_radius) const {
        return prior_disk.vanishes_beyond((mean - cloud_center).norm() - cloud_radius);
    }
};

inline GaussianMixture<2> birth_mixture(const FilterConfig& cfg, const StepInput& input,
                                        const std::vector<Eigen::Vector2d>& landmark_measurements,
                                        const Eigen::Vector2d& sensor_position) {
    GaussianMixture<2> birth;
    if (cfg.birth == BirthModel::Informative) {
        for (const auto& h : input.birth_hints) {
            birth.components.push_back(
                {cfg.informative_birth_weight, Gaussian2{h, cfg.informative_birth_variance * Eigen::Matrix2d::Identity()}});
        }
    } else {
        for (const auto& z : landmark_measurements) {
            birth.components.push_back({cfg.uninformative_birth_weight,
                                        Gaussian2{z + sensor_position,
                                                  cfg.uninformative_birth_variance * Eigen::Matrix2d::Identity()}});
        }
    }
    return birth;
}

}  // namespace detail

/// Prediction: particles through the motion model, landmarks static with survival,
/// PPP merged with the birth intensity (PMB) or birth Bernoullis appended (MB).
inline SlamPosterior predict(const SlamPosterior& prev, const FilterConfig& cfg, const StepInput& input,
                             std::uint64_t seed) {
    SlamPosterior out;
    out.time_index = prev.time_index + 1;
    out.label_counter = prev.label_counter;

    Rng rng(seed);
    out.sensor.log_weights = prev.sensor.log_weights;
    out.sensor.particles.reserve(prev.sensor.size());
    for (const auto& s : prev.sensor.particles) {
        out.sensor.particles.push_back(cfg.motion.propagate(s, cfg.motion.sample_noise(rng)));
    }

    const auto split = detail::split_measurements(input.measurements, out.sensor, cfg);
    const GaussianMixture<2> birth =
        detail::birth_mixture(cfg, input, split.landmark, position(out.sensor.mean()));

    out.map.detected.reserve(prev.map.detected.size() + birth.size());
    for (const auto& b : prev.map.detected) out.map.detected.push_back(bernoulli_predict(b, cfg.p_survive));

    if (cfg.mode == FilterMode::PMB) {
        const PoissonProcess<2> survived = ppp_predict<2>(prev.map.undetected, cfg.p_survive, std::nullopt, {});
        const PoissonProcess<2> born{birth, 0};
        out.map.undetected = merge_ppps<2>({survived, born});
    } else {
        out.map.undetected = PoissonProcess<2>{};
        for (const auto& c : birth.components) {
            out.map.detected.push_back(BernoulliComponent<2>{std::min(c.weight, cfg.mb_birth_existence),
                                                             GaussianMixture<2>::single(c.gaussian),
                                                             ++out.label_counter});
        }
    }
    return out;
}

/// Measurement update: new Bernoullis from the PPP, loopy BP association,
/// Bernoulli and PPP updates, particle reweighting, resampling and pruning.
inline SlamPosterior update(const SlamPosterior& pred, const StepInput& input, const FilterConfig& cfg,
                            std::uint64_t seed, StepDiagnostics* diag = nullptr) {
    using detail::PreparedLandmark;
    const int k = pred.time_index;
    const std::size_t n_p = pred.sensor.size();
    if (n_p == 0) throw NumericalFailure("update: particle set is empty at time " + std::to_string(k));

    const std::vector<double> w = pred.sensor.weights();
    std::vector<Eigen::Vector2d> pos(n_p);
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    for (std::size_t p = 0; p < n_p; ++p) {
        pos[p] = position(pred.sensor.particles[p]);
        center += w[p] * pos[p];
    }
    double cloud_radius = 0.0;
    for (const auto& x : pos) cloud_radius = std::max(cloud_radius, (x - center).norm());

    const auto split = detail::split_measurements(input.measurements, pred.sensor, cfg);
    const auto& z = split.landmark;
    const std::size_t n_m = z.size();
    const double p_d = cfg.p_detect;
    const double gate = cfg.gating ? cfg.gate_threshold : std::numeric_limits<double>::infinity();
    const double c = cfg.clutter_intensity;

    std::vector<double> log_inc(n_p, 0.0);

    // Undetected PPP: miss mass, new-target evidence and new Bernoulli densities.
    const auto& lambda = pred.map.undetected.intensity.components;
    std::vector<double> thin(lambda.size(), 1.0);
    Eigen::MatrixXd new_evidence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_m), static_cast<Eigen::Index>(n_p));
    std::vector<MomentAccumulator<2>> new_density(n_m);
    for (std::size_t q = 0; q < lambda.size(); ++q) {
        const double eta = lambda[q].weight;
        if (!(eta > 0.0)) continue;
        const PreparedLandmark lm(lambda[q].gaussian, cfg.sigma_meas, cfg.fov_radius);
        if (p_d > 0.0 && !lm.out_of_view(center, cloud_radius)) {
            double expected = 0.0;
            for (std::size_t p = 0; p < n_p; ++p) {
                const double seen = p_d * lm.prior_disk(lm.mean, pos[p]);
                log_inc[p] -= eta * seen;
                expected += w[p] * seen;
            }
            thin[q] = std::clamp(1.0 - expected, 0.0, 1.0);
        }
        if (p_d == 0.0) continue;
        for (std::size_t j = 0; j < n_m; ++j) {
            if (lm.out_of_reach(z[j], center, cloud_radius)) continue;
            for (std::size_t p = 0; p < n_p; ++p) {
                Eigen::Vector2d pm;
                const double e = eta * p_d * lm.evidence(z[j], pos[p], gate, &pm);
                if (e <= 0.0) continue;
                new_evidence(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) += e;
                new_density[j].add(w[p] * e, pm, lm.post_cov);
            }
        }
    }
    std::vector<double> e_j(n_m, 0.0);
    for (std::size_t j = 0; j < n_m; ++j) {
        for (std::size_t p = 0; p < n_p; ++p) e_j[j] += w[p] * new_evidence(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p));
    }

    // Previously detected Bernoullis that can interact with this step.
    struct Active {
        std::size_t index;
        PreparedLandmark lm;
        std::vector<double> seen;                    // p_D * P(inside FoV), per particle
        std::vector<std::vector<double>> detection;  // per measurement, per particle, without r
        std::vector<bool> candidate;
    };
    std::vector<Active> active;
    for (std::size_t i = 0; i < pred.map.detected.size(); ++i) {
        const auto& b = pred.map.detected[i];
        if (p_d == 0.0 || !(b.existence > 0.0)) continue;
        const Gaussian2 g = b.density.size() == 1 ? b.density.components[0].gaussian : collapse(b.density);
        PreparedLandmark lm(g, cfg.sigma_meas, cfg.fov_radius);
        const bool in_view = !lm.out_of_view(center, cloud_radius);
        std::vector<bool> cand(n_m, false);
        bool any = in_view;
        for (std::size_t j = 0; j < n_m; ++j) {
            cand[j] = !lm.out_of_reach(z[j], center, cloud_radius);
            any = any || cand[j];
        }
        if (!any) continue;
        Active a{i, lm, std::vector<double>(n_p, 0.0), std::vector<std::vector<double>>(n_m), std::move(cand)};
        bool nonzero = false;
        if (in_view) {
            for (std::size_t p = 0; p < n_p; ++p) {
                a.seen[p] = p_d * lm.prior_disk(lm.mean, pos[p]);
                nonzero = nonzero || a.seen[p] > 0.0;
            }
        }
        for (std::size_t j = 0; j < n_m; ++j) {
            if (!a.candidate[j]) continue;
            a.detection[j].assign(n_p, 0.0);
            bool hit = false;
            for (std::size_t p = 0; p < n_p; ++p) {
                a.detection[j][p] = p_d * lm.evidence(z[j], pos[p], gate);
                hit = hit || a.detection[j][p] > 0.0;
            }
            if (!hit) {
                a.candidate[j] = false;
                a.detection[j].clear();
            }
            nonzero = nonzero || hit;
        }
        if (nonzero) active.push_back(std::move(a));
    }

    // Association.
    const auto n_a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd det_ev = Eigen::MatrixXd::Zero(n_a, static_cast<Eigen::Index>(n_m) + 1);
    std::vector<double> existence(active.size());
    for (Eigen::Index a = 0; a < n_a; ++a) {
        const auto& act = active[static_cast<std::size_t>(a)];
        existence[static_cast<std::size_t>(a)] = pred.map.detected[act.index].existence;
        for (std::size_t p = 0; p < n_p; ++p) det_ev(a, 0) += w[p] * act.seen[p];
        for (std::size_t j = 0; j < n_m; ++j) {
            if (!act.candidate[j]) continue;
            double s = 0.0;
            for (std::size_t p = 0; p < n_p; ++p) s += w[p] * act.detection[j][p];
            det_ev(a, static_cast<Eigen::Index>(j) + 1) = s;
        }
    }
    const AssociationProblem problem = build_problem(existence, e_j, c, det_ev);
    const LoopyBpResult bp = loopy_bp(problem, cfg.association);
    const Eigen::MatrixXd nu = bp.log_nu.array().exp().matrix();
    const Eigen::MatrixXd mu = bp.log_mu.array().exp().matrix();

    SlamPosterior out;
    out.time_index = k;
    out.map.detected = pred.map.detected;

    // Bernoulli updates and their sensor messages.
    for (Eigen::Index a = 0; a < n_a; ++a) {
        const auto& act = active[static_cast<std::size_t>(a)];
        const double r = existence[static_cast<std::size_t>(a)];
        double w_miss = 0.0;
        for (std::size_t p = 0; p < n_p; ++p) w_miss += w[p] * (1.0 - act.seen[p]);
        w_miss *= r;

        MomentAccumulator<2> acc;
        acc.add(w_miss, act.lm.mean, act.lm.cov);
        double w_total = w_miss;
        std::vector<double> msg(n_p);
        for (std::size_t p = 0; p < n_p; ++p) msg[p] = (1.0 - r) + r * (1.0 - act.seen[p]);
        for (std::size_t j = 0; j < n_m; ++j) {
            if (!act.candidate[j]) continue;
            const double nu_ij = nu(a, static_cast<Eigen::Index>(j));
            for (std::size_t p = 0; p < n_p; ++p) {
                const double beta = r * act.detection[j][p];
                if (beta <= 0.0) continue;
                msg[p] += nu_ij * beta;
                const double weight = nu_ij * w[p] * beta;
                if (weight > 0.0) {
                    const Eigen::Vector2d innov = z[j] - (act.lm.mean - pos[p]);
                    acc.add(weight, act.lm.mean + act.lm.gain * innov, act.lm.post_cov);
                    w_total += weight;
                }
            }
        }
        for (std::size_t p = 0; p < n_p; ++p) log_inc[p] += safe_log(msg[p]);

        auto& b = out.map.detected[act.index];
        b.existence = std::clamp(w_total / ((1.0 - r) + w_total), 0.0, 1.0);
        if (acc.total_weight() > 0.0) b.density = GaussianMixture<2>::single(acc.result());
    }

    // Messages from measurements that may stem from new landmarks or clutter.
    std::vector<double> claimed(n_m, 0.0);
    for (std::size_t j = 0; j < n_m; ++j) {
        for (Eigen::Index a = 0; a < n_a; ++a) claimed[j] += mu(a, static_cast<Eigen::Index>(j));
    }
    if (cfg.use_new_target_sensor_messages) {
        for (std::size_t j = 0; j < n_m; ++j) {
            for (std::size_t p = 0; p < n_p; ++p) {
                log_inc[p] += std::log(c + new_evidence(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)) +
                                       claimed[j] + detail::kEvidenceFloor);
            }
        }
    }
    if (split.bs && k < cfg.bs_use_until) {
        const double var = cfg.sigma_meas * cfg.sigma_meas;
        for (std::size_t p = 0; p < n_p; ++p) {
            log_inc[p] += -std::log(2.0 * std::numbers::pi * var) - 0.5 * (*split.bs - pos[p]).squaredNorm() / var;
        }
    }

    // Undetected PPP after misses, and new Bernoullis converted from it.
    if (cfg.mode == FilterMode::PMB) {
        out.map.undetected = ppp_thin_by_miss(pred.map.undetected, thin);
    } else {
        out.map.undetected = PoissonProcess<2>{};
    }
    if (n_m > 0) {
        const auto parts = partition_ppp(pred.map.undetected, static_cast<int>(n_m));
        for (std::size_t j = 0; j < n_m; ++j) {
            if (!(e_j[j] > 0.0) || !(new_density[j].total_weight() > 0.0)) continue;
            const double r_new = std::clamp(e_j[j] / (c + e_j[j] + claimed[j]), 0.0, 1.0);
            out.map.detected.push_back(convert_to_bernoulli(parts[j], pred.label_counter + static_cast<Label>(j) + 1,
                                                            r_new,
                                                            GaussianMixture<2>::single(new_density[j].result())));
        }
    }
    out.label_counter = pred.label_counter + static_cast<Label>(n_m);

    // Sensor belief.
    out.sensor.particles = pred.sensor.particles;
    out.sensor.log_weights = pred.sensor.log_weights;
    for (std::size_t p = 0; p < n_p; ++p) out.sensor.log_weights[p] += log_inc[p];
    out.sensor.normalize(k);
    const double ess = out.sensor.ess();
    const bool do_resample = ess < cfg.ess_fraction * static_cast<double>(n_p);
    if (do_resample) out.sensor = resample(out.sensor, seed);

    // Pruning and mixture reduction.
    std::erase_if(out.map.detected, [&](const auto& b) { return b.existence < cfg.bernoulli_prune; });
    out.map.undetected.intensity = mixture_reduce(out.map.undetected.intensity, cfg.poisson_prune,
                                                  cfg.merge_distance, cfg.max_components);

    if (diag) {
        diag->ess = ess;
        diag->resampled = do_resample;
        diag->bernoulli_count = out.map.detected.size();
        diag->ppp_mass = out.map.undetected.expected_cardinality();
        diag->association_iterations = bp.iterations;
        diag->association_converged = bp.converged;
    }
    return out;
}

inline Estimates extract_estimates(const SlamPosterior& post, const FilterConfig& cfg) {
    Estimates e;
    e.sensor = post.sensor.mean();
    for (const auto& b : post.map.detected) {
        if (b.existence > cfg.detect_threshold) e.map.push_back(mixture_mean(b.density));
    }
    return e;
}

/// Seeded filter driver: one instance per Monte-Carlo trial.
class SlamFilter {
public:
    SlamFilter(FilterConfig cfg, const SensorState& prior_mean, std::uint64_t seed)
        : cfg_(std::move(cfg)), seed_(seed), post_(initialize(prior_mean, cfg_, derive_seed(seed, "init"))) {}

    StepDiagnostics step(const StepInput& input) {
        StepDiagnostics diag;
        const auto k = static_cast<std::uint64_t>(post_.time_index + 1);
        const SlamPosterior pred = predict(post_, cfg_, input, derive_seed(seed_, "propagate", k));
        post_ = update(pred, input, cfg_, derive_seed(seed_, "resample", k), &diag);
        return diag;
    }

    const SlamPosterior& posterior() const { return post_; }
    Estimates estimates() const { return extract_estimates(post_, cfg_); }
    const FilterConfig& config() const { return cfg_; }

private:
    FilterConfig cfg_;
    std::uint64_t seed_;
    SlamPosterior post_;
};

}  // namespace setbp
