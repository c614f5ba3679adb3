#pragma once

#include "setbp/core/mixture.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace setbp {

/// Auxiliary variable u: 0 for the undetected PPP, i >= 1 for Bernoulli i.
using Label = std::int64_t;

/// Poisson point process parameterized by a Gaussian-mixture intensity.
template <int Dim>
struct PoissonProcess {
    GaussianMixture<Dim> intensity;
    Label label = 0;

    double expected_cardinality() const { return intensity.total_weight(); }

    friend bool operator==(const PoissonProcess&, const PoissonProcess&) = default;
};

/// Bernoulli RFS: empty with probability 1 - existence, otherwise one element
/// distributed by `density`.
template <int Dim>
struct BernoulliComponent {
    double existence = 0.0;
    GaussianMixture<Dim> density;
    Label label = 1;

    friend bool operator==(const BernoulliComponent&, const BernoulliComponent&) = default;
};

/// Poisson multi-Bernoulli density with auxiliary variables.
template <int Dim>
struct PMBState {
    PoissonProcess<Dim> undetected;
    std::vector<BernoulliComponent<Dim>> detected;

    void validate() const {
        if (undetected.label != 0) throw LabelError("PMBState: undetected PPP must carry label 0");
        for (const auto& c : undetected.intensity.components) {
            if (!(c.weight >= 0.0)) throw NumericalFailure("PMBState: negative PPP weight");
        }
        std::unordered_set<Label> seen;
        for (const auto& b : detected) {
            if (b.label < 1) throw LabelError("PMBState: Bernoulli label must be >= 1");
            if (!seen.insert(b.label).second) {
                throw LabelError("PMBState: duplicate Bernoulli label " + std::to_string(b.label));
            }
            if (!(b.existence >= 0.0 && b.existence <= 1.0)) {
                throw NumericalFailure("PMBState: existence outside [0, 1] for label " + std::to_string(b.label));
            }
        }
    }
};

/// x' = F x + w, w ~ N(0, Q).
template <int Dim>
struct LinearGaussianMotion {
    typename Gaussian<Dim>::Matrix transition;
    typename Gaussian<Dim>::Matrix noise_cov;

    Gaussian<Dim> propagate(const Gaussian<Dim>& g) const {
        return Gaussian<Dim>{transition * g.mean,
                             symmetrized(transition * g.cov * transition.transpose() + noise_cov)};
    }
};

namespace detail {

template <int Dim>
GaussianMixture<Dim> propagate_mixture(const GaussianMixture<Dim>& m,
                                       const std::optional<LinearGaussianMotion<Dim>>& motion,
                                       double weight_scale) {
    GaussianMixture<Dim> out;
    out.components.reserve(m.size());
    for (const auto& c : m.components) {
        out.components.push_back(WeightedGaussian<Dim>{
            c.weight * weight_scale, motion ? motion->propagate(c.gaussian) : c.gaussian});
    }
    return out;
}

inline void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace detail

/// Bernoulli prediction: r' = r p_S, density pushed through the motion model
/// (static landmarks when `motion` is empty), label preserved.
template <int Dim>
BernoulliComponent<Dim> bernoulli_predict(const BernoulliComponent<Dim>& b, double p_survive,
                                          const std::optional<LinearGaussianMotion<Dim>>& motion = std::nullopt) {
    detail::check_probability(p_survive, "bernoulli_predict: p_survive");
    BernoulliComponent<Dim> out;
    out.existence = b.existence * p_survive;
    out.label = b.label;
    out.density = motion ? detail::propagate_mixture(b.density, motion, 1.0) : b.density;
    return out;
}

/// PPP prediction: surviving intensity p_S (F lambda) concatenated with the birth intensity.
template <int Dim>
PoissonProcess<Dim> ppp_predict(const PoissonProcess<Dim>& p, double p_survive,
                                const std::optional<LinearGaussianMotion<Dim>>& motion,
                                const GaussianMixture<Dim>& birth) {
    detail::check_probability(p_survive, "ppp_predict: p_survive");
    for (const auto& c : birth.components) {
        if (!(c.weight >= 0.0)) throw InputError("ppp_predict: birth weights must be nonnegative");
    }
    PoissonProcess<Dim> out;
    out.label = 0;
    out.intensity = detail::propagate_mixture(p.intensity, motion, p_survive);
    out.intensity.components.insert(out.intensity.components.end(), birth.components.begin(),
                                    birth.components.end());
    return out;
}

/// Scales component q of the intensity by miss_factor[q] = E[1 - p_D] under that component.
template <int Dim>
PoissonProcess<Dim> ppp_thin_by_miss(const PoissonProcess<Dim>& p, std::span<const double> miss_factor) {
    if (miss_factor.size() != p.intensity.size()) {
        throw DimensionError("ppp_thin_by_miss: expected " + std::to_string(p.intensity.size()) +
                             " miss factors, got " + std::to_string(miss_factor.size()));
    }
    PoissonProcess<Dim> out = p;
    for (std::size_t q = 0; q < miss_factor.size(); ++q) {
        detail::check_probability(miss_factor[q], "ppp_thin_by_miss: miss factor");
        out.intensity.components[q].weight *= miss_factor[q];
    }
    return out;
}

}  // namespace setbp
