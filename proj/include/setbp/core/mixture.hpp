#pragma once

#include "setbp/core/gaussian.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace setbp {

template <int Dim>
struct WeightedGaussian {
    double weight;
    Gaussian<Dim> gaussian;

    friend bool operator==(const WeightedGaussian&, const WeightedGaussian&) = default;
};

/// Weighted Gaussian components. Used both as a spatial density (weights sum
/// to one) and as a PPP intensity (weights sum to the expected cardinality).
template <int Dim>
struct GaussianMixture {
    std::vector<WeightedGaussian<Dim>> components;

    GaussianMixture() = default;
    explicit GaussianMixture(std::vector<WeightedGaussian<Dim>> comps) : components(std::move(comps)) {}

    static GaussianMixture single(const Gaussian<Dim>& g, double weight = 1.0) {
        return GaussianMixture({WeightedGaussian<Dim>{weight, g}});
    }

    std::size_t size() const { return components.size(); }
    bool empty() const { return components.empty(); }

    double total_weight() const {
        double s = 0.0;
        for (const auto& c : components) s += c.weight;
        return s;
    }

    friend bool operator==(const GaussianMixture&, const GaussianMixture&) = default;
};

enum class MixtureRole { Intensity, Density };

template <int Dim>
Gaussian<Dim> collapse(const GaussianMixture<Dim>& m) {
    MomentAccumulator<Dim> acc;
    for (const auto& c : m.components) acc.add(c.weight, c.gaussian);
    if (acc.total_weight() <= 0.0) throw NumericalFailure("collapse: mixture carries no weight");
    return acc.result();
}

template <int Dim>
typename Gaussian<Dim>::Vector mixture_mean(const GaussianMixture<Dim>& m) {
    return collapse(m).mean;
}

/// Prune, merge and cap a mixture.
///
/// Components with weight below `prune_threshold` are dropped. Starting from
/// the heaviest remaining component, every component whose squared Mahalanobis
/// distance (under its own covariance) to it is below `merge_distance` is
/// moment-matched into it. At most `max_components` of the merged components
/// survive, heaviest first. Density-role mixtures are renormalized.
template <int Dim>
GaussianMixture<Dim> mixture_reduce(const GaussianMixture<Dim>& m, double prune_threshold,
                                    double merge_distance, std::size_t max_components,
                                    MixtureRole role = MixtureRole::Intensity) {
    if (prune_threshold < 0.0 || merge_distance < 0.0) {
        throw InputError("mixture_reduce: thresholds must be nonnegative");
    }
    std::vector<std::size_t> order;
    order.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.components[i].weight >= prune_threshold && m.components[i].weight > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return m.components[a].weight > m.components[b].weight;
    });

    GaussianMixture<Dim> out;
    std::vector<bool> used(m.size(), false);
    for (std::size_t head : order) {
        if (used[head]) continue;
        const auto& lead = m.components[head];
        MomentAccumulator<Dim> acc;
        std::size_t group = 0;
        double weight = 0.0;
        for (std::size_t idx : order) {
            if (used[idx]) continue;
            const auto& cand = m.components[idx];
            bool take = idx == head;
            if (!take && merge_distance > 0.0) {
                const typename Gaussian<Dim>::Vector d = cand.gaussian.mean - lead.gaussian.mean;
                const double d2 = d.dot(cand.gaussian.cov.ldlt().solve(d));
                take = d2 < merge_distance;
            }
            if (!take) continue;
            used[idx] = true;
            acc.add(cand.weight, cand.gaussian);
            weight += cand.weight;
            ++group;
        }
        if (group == 1) {
            out.components.push_back(lead);
        } else {
            out.components.push_back(WeightedGaussian<Dim>{weight, acc.result()});
        }
    }
    std::stable_sort(out.components.begin(), out.components.end(),
                     [](const auto& a, const auto& b) { return a.weight > b.weight; });
    if (out.components.size() > max_components) out.components.resize(max_components);

    if (role == MixtureRole::Density) {
        const double total = out.total_weight();
        if (total > 0.0) {
            for (auto& c : out.components) c.weight /= total;
        }
    }
    return out;
}

}  // namespace setbp
