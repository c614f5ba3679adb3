#pragma once

#include "setbp/core/rfs.hpp"

#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace setbp {

/// Set-message payload: either a PPP or a Bernoulli, each carrying its auxiliary label.
template <int Dim>
using LabeledDensity = std::variant<PoissonProcess<Dim>, BernoulliComponent<Dim>>;

template <int Dim>
Label label_of(const LabeledDensity<Dim>& d) {
    return std::visit([](const auto& x) { return x.label; }, d);
}

/// Merging message of the partition/merge factor for PPP inputs: the disjoint
/// union of independent PPPs is a PPP whose intensity is the sum of the inputs.
template <int Dim>
PoissonProcess<Dim> merge_ppps(std::span<const PoissonProcess<Dim>> inputs) {
    PoissonProcess<Dim> out;
    std::size_t total = 0;
    for (const auto& p : inputs) total += p.intensity.size();
    out.intensity.components.reserve(total);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].label != 0) {
            throw LabelError("merge_ppps: input " + std::to_string(i) + " has label " +
                             std::to_string(inputs[i].label) + ", expected 0");
        }
        const auto& comps = inputs[i].intensity.components;
        out.intensity.components.insert(out.intensity.components.end(), comps.begin(), comps.end());
    }
    return out;
}

template <int Dim>
PoissonProcess<Dim> merge_ppps(std::initializer_list<PoissonProcess<Dim>> inputs) {
    return merge_ppps(std::span<const PoissonProcess<Dim>>(inputs.begin(), inputs.size()));
}

/// Partition message of the partition/merge factor for a PPP input: each part
/// of a partitioned PPP is distributed as the input PPP itself.
template <int Dim>
std::vector<PoissonProcess<Dim>> partition_ppp(const PoissonProcess<Dim>& input, int n_parts) {
    if (n_parts < 1) throw InputError("partition_ppp: n_parts must be >= 1, got " + std::to_string(n_parts));
    return std::vector<PoissonProcess<Dim>>(static_cast<std::size_t>(n_parts), input);
}

/// Auxiliary-variable shift: label += by, all density parameters untouched.
template <int Dim>
LabeledDensity<Dim> shift_label(const LabeledDensity<Dim>& d, Label by) {
    LabeledDensity<Dim> out = d;
    std::visit(
        [by](auto& x) {
            const Label next = x.label + by;
            if (next < 0) {
                throw LabelError("shift_label: label " + std::to_string(x.label) + " shifted by " +
                                 std::to_string(by) + " is negative");
            }
            x.label = next;
        },
        out);
    return out;
}

/// PPP-to-Bernoulli conversion used when a measurement claims one element of a
/// PPP: the shifted label moves the element from the undetected set to
/// Bernoulli `label`.
template <int Dim>
BernoulliComponent<Dim> convert_to_bernoulli(const PoissonProcess<Dim>& source, Label by, double existence,
                                             GaussianMixture<Dim> density) {
    const auto shifted = std::get<PoissonProcess<Dim>>(shift_label(LabeledDensity<Dim>(source), by));
    if (shifted.label < 1) throw LabelError("convert_to_bernoulli: Bernoulli label must be >= 1");
    detail::check_probability(existence, "convert_to_bernoulli: existence");
    return BernoulliComponent<Dim>{existence, std::move(density), shifted.label};
}

}  // namespace setbp
