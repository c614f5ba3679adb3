#pragma once

#include "setbp/core/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace setbp::oracle {

using SubsetMask = std::uint32_t;

/// Joint assignments above this count raise CapacityError.
inline constexpr double kDefaultCapacity = 1e6;

/// All subsets of {0, ..., n_points-1} with at most `cap` elements, in a
/// canonical order (by cardinality, then lexicographically by sorted tuple).
class SetSpace {
public:
    SetSpace(int n_points, int cap) : n_points_(n_points), cap_(cap) {
        if (n_points < 0 || n_points > 20) throw InputError("SetSpace: n_points must lie in [0, 20]");
        if (cap < 0) throw InputError("SetSpace: cap must be nonnegative");
        lookup_.assign(std::size_t{1} << n_points, -1);
        for (SubsetMask m = 0; m < (SubsetMask{1} << n_points); ++m) {
            if (std::popcount(m) <= cap) subsets_.push_back(m);
        }
        std::stable_sort(subsets_.begin(), subsets_.end(), [this](SubsetMask a, SubsetMask b) {
            const int ca = std::popcount(a), cb = std::popcount(b);
            if (ca != cb) return ca < cb;
            return elements_of(a) < elements_of(b);
        });
        for (std::size_t k = 0; k < subsets_.size(); ++k) lookup_[subsets_[k]] = static_cast<int>(k);
    }

    int n_points() const { return n_points_; }
    int cap() const { return cap_; }
    std::size_t size() const { return subsets_.size(); }
    SubsetMask mask(std::size_t k) const { return subsets_[k]; }
    int cardinality(std::size_t k) const { return std::popcount(subsets_[k]); }

    /// Index of `m`, or -1 when it exceeds the cap.
    int index(SubsetMask m) const { return m < lookup_.size() ? lookup_[m] : -1; }

    std::vector<int> elements(std::size_t k) const { return elements_of(subsets_[k]); }

    static std::vector<int> elements_of(SubsetMask m) {
        std::vector<int> out;
        for (int b = 0; m != 0; ++b, m >>= 1) {
            if (m & 1U) out.push_back(b);
        }
        return out;
    }

private:
    int n_points_;
    int cap_;
    std::vector<SubsetMask> subsets_;
    std::vector<int> lookup_;
};

/// Mass function over the subsets of a SetSpace. The set integral of the
/// continuous case becomes a plain sum over these subsets.
struct DiscreteSetDensity {
    SetSpace space;
    std::vector<double> mass;

    double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

    double operator()(SubsetMask m) const {
        const int k = space.index(m);
        return k < 0 ? 0.0 : mass[static_cast<std::size_t>(k)];
    }

    void normalize() {
        const double t = total();
        if (!(t > 0.0)) throw NumericalFailure("DiscreteSetDensity: no mass to normalize");
        for (double& v : mass) v /= t;
    }
};

/// Set-variables and nonnegative factor tables. A factor table is indexed by the
/// joint subset assignment of its neighbors, last neighbor varying fastest.
class DiscreteFactorGraph {
public:
    struct Factor {
        std::vector<int> neighbors;
        std::vector<double> table;
    };

    explicit DiscreteFactorGraph(double capacity = kDefaultCapacity) : capacity_(capacity) {}

    int add_variable(SetSpace space) {
        spaces_.push_back(std::move(space));
        return static_cast<int>(spaces_.size()) - 1;
    }

    int add_factor(std::vector<int> neighbors, std::vector<double> table) {
        for (int v : neighbors) {
            if (v < 0 || v >= num_variables()) throw InputError("add_factor: unknown variable " + std::to_string(v));
        }
        if (table.size() != table_size(neighbors)) {
            throw DimensionError("add_factor: table has " + std::to_string(table.size()) + " entries, expected " +
                                 std::to_string(table_size(neighbors)));
        }
        for (double t : table) {
            if (!(t >= 0.0)) throw InputError("add_factor: factor tables must be nonnegative");
        }
        factors_.push_back(Factor{std::move(neighbors), std::move(table)});
        return static_cast<int>(factors_.size()) - 1;
    }

    /// Builds the table by evaluating `f` on every joint assignment of subset masks.
    int add_factor(std::vector<int> neighbors, const std::function<double(std::span<const SubsetMask>)>& f) {
        for (int v : neighbors) {
            if (v < 0 || v >= num_variables()) throw InputError("add_factor: unknown variable " + std::to_string(v));
        }
        std::vector<double> table(table_size(neighbors));
        std::vector<SubsetMask> masks(neighbors.size());
        for (std::size_t flat = 0; flat < table.size(); ++flat) {
            std::size_t rest = flat;
            for (std::size_t n = neighbors.size(); n-- > 0;) {
                const auto& sp = spaces_[static_cast<std::size_t>(neighbors[n])];
                masks[n] = sp.mask(rest % sp.size());
                rest /= sp.size();
            }
            table[flat] = f(masks);
        }
        return add_factor(std::move(neighbors), std::move(table));
    }

    int num_variables() const { return static_cast<int>(spaces_.size()); }
    int num_factors() const { return static_cast<int>(factors_.size()); }
    const SetSpace& space(int v) const { return spaces_[static_cast<std::size_t>(v)]; }
    const Factor& factor(int a) const { return factors_[static_cast<std::size_t>(a)]; }
    double capacity() const { return capacity_; }

    std::vector<int> factors_of(int v) const {
        std::vector<int> out;
        for (int a = 0; a < num_factors(); ++a) {
            const auto& nb = factors_[static_cast<std::size_t>(a)].neighbors;
            if (std::find(nb.begin(), nb.end(), v) != nb.end()) out.push_back(a);
        }
        return out;
    }

    std::size_t table_size(const std::vector<int>& neighbors) const {
        double size = 1.0;
        for (int v : neighbors) size *= static_cast<double>(spaces_[static_cast<std::size_t>(v)].size());
        if (size > capacity_) throw CapacityError("factor table exceeds the enumeration budget", size);
        return static_cast<std::size_t>(size);
    }

private:
    double capacity_;
    std::vector<SetSpace> spaces_;
    std::vector<Factor> factors_;
};

/// Exact normalized marginals of every variable by enumerating all joint assignments.
inline std::vector<DiscreteSetDensity> exact_marginals(const DiscreteFactorGraph& g) {
    double joint = 1.0;
    for (int v = 0; v < g.num_variables(); ++v) joint *= static_cast<double>(g.space(v).size());
    if (joint > g.capacity()) throw CapacityError("exact_marginals: joint state space too large", joint);

    std::vector<DiscreteSetDensity> out;
    for (int v = 0; v < g.num_variables(); ++v) {
        out.push_back(DiscreteSetDensity{g.space(v), std::vector<double>(g.space(v).size(), 0.0)});
    }
    const auto n = static_cast<std::size_t>(g.num_variables());
    std::vector<std::size_t> assign(n, 0);
    const auto total = static_cast<std::size_t>(joint);
    for (std::size_t flat = 0; flat < total; ++flat) {
        double w = 1.0;
        for (int a = 0; a < g.num_factors() && w != 0.0; ++a) {
            const auto& fac = g.factor(a);
            std::size_t idx = 0;
            for (int v : fac.neighbors) idx = idx * g.space(v).size() + assign[static_cast<std::size_t>(v)];
            w *= fac.table[idx];
        }
        if (w != 0.0) {
            for (std::size_t v = 0; v < n; ++v) out[v].mass[assign[v]] += w;
        }
        for (std::size_t v = n; v-- > 0;) {
            if (++assign[v] < g.space(static_cast<int>(v)).size()) break;
            assign[v] = 0;
        }
    }
    for (auto& m : out) m.normalize();
    return out;
}

/// One directed message update: factor-to-variable or variable-to-factor.
struct MessageUpdate {
    enum class Direction { VariableToFactor, FactorToVariable };
    Direction direction;
    int factor;
    int variable;
};

using MessageSchedule = std::vector<MessageUpdate>;

/// Every variable-to-factor message, then every factor-to-variable message.
inline MessageSchedule flooding_schedule(const DiscreteFactorGraph& g) {
    MessageSchedule s;
    for (int a = 0; a < g.num_factors(); ++a) {
        for (int v : g.factor(a).neighbors) s.push_back({MessageUpdate::Direction::VariableToFactor, a, v});
    }
    for (int a = 0; a < g.num_factors(); ++a) {
        for (int v : g.factor(a).neighbors) s.push_back({MessageUpdate::Direction::FactorToVariable, a, v});
    }
    return s;
}

/// Leaves-to-root then root-to-leaves schedule for each connected component.
/// Throws InputError when the graph contains a cycle.
inline MessageSchedule tree_schedule(const DiscreteFactorGraph& g) {
    const int nv = g.num_variables();
    const int nf = g.num_factors();
    // Bipartite nodes: variables 0..nv-1, factors nv..nv+nf-1.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(nv + nf));
    std::size_t edges = 0;
    for (int a = 0; a < nf; ++a) {
        for (int v : g.factor(a).neighbors) {
            adj[static_cast<std::size_t>(v)].push_back(nv + a);
            adj[static_cast<std::size_t>(nv + a)].push_back(v);
            ++edges;
        }
    }
    auto update_from = [&](int from, int to) {
        return from < nv ? MessageUpdate{MessageUpdate::Direction::VariableToFactor, to - nv, from}
                         : MessageUpdate{MessageUpdate::Direction::FactorToVariable, from - nv, to};
    };

    std::vector<int> parent(adj.size(), -2);
    MessageSchedule upward;
    MessageSchedule downward;
    std::size_t components = 0;
    for (int root = 0; root < nv + nf; ++root) {
        if (parent[static_cast<std::size_t>(root)] != -2) continue;
        ++components;
        parent[static_cast<std::size_t>(root)] = -1;
        std::vector<int> order{root};
        for (std::size_t head = 0; head < order.size(); ++head) {
            const int node = order[head];
            for (int nb : adj[static_cast<std::size_t>(node)]) {
                if (nb == parent[static_cast<std::size_t>(node)]) continue;
                if (parent[static_cast<std::size_t>(nb)] != -2) throw InputError("tree_schedule: graph has a cycle");
                parent[static_cast<std::size_t>(nb)] = node;
                order.push_back(nb);
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const int p = parent[static_cast<std::size_t>(*it)];
            if (p >= 0) upward.push_back(update_from(*it, p));
        }
        for (int node : order) {
            const int p = parent[static_cast<std::size_t>(node)];
            if (p >= 0) downward.push_back(update_from(p, node));
        }
    }
    if (edges + components != adj.size()) throw InputError("tree_schedule: graph has a cycle");
    upward.insert(upward.end(), downward.begin(), downward.end());
    return upward;
}

/// Set-type BP with messages as discrete set functions.
///
/// Variable-to-factor: product of the other incoming factor messages.
/// Factor-to-variable: set-integral (finite subset sum) of the factor times
/// the other incoming variable messages. Beliefs are normalized products of
/// all incoming factor messages. Messages start at one and are rescaled to
/// unit sum after each update.
class SetBeliefPropagation {
public:
    explicit SetBeliefPropagation(const DiscreteFactorGraph& g) : g_(g) {
        for (int a = 0; a < g.num_factors(); ++a) {
            const auto& nb = g.factor(a).neighbors;
            to_var_.emplace_back();
            to_fac_.emplace_back();
            for (int v : nb) {
                to_var_.back().emplace_back(g.space(v).size(), 1.0);
                to_fac_.back().emplace_back(g.space(v).size(), 1.0);
            }
        }
    }

    void run(const MessageSchedule& schedule, int iterations) {
        if (iterations < 1) throw InputError("run_set_bp: iterations must be >= 1");
        for (int it = 0; it < iterations; ++it) {
            for (const auto& u : schedule) apply(u);
        }
    }

    void apply(const MessageUpdate& u) {
        const auto a = static_cast<std::size_t>(u.factor);
        const auto& nb = g_.factor(u.factor).neighbors;
        const auto slot = static_cast<std::size_t>(std::find(nb.begin(), nb.end(), u.variable) - nb.begin());
        if (slot == nb.size()) throw InputError("run_set_bp: variable is not a neighbor of the factor");

        if (u.direction == MessageUpdate::Direction::VariableToFactor) {
            auto& msg = to_fac_[a][slot];
            std::fill(msg.begin(), msg.end(), 1.0);
            for (int b : g_.factors_of(u.variable)) {
                if (b == u.factor) continue;
                const auto& nbb = g_.factor(b).neighbors;
                for (std::size_t s = 0; s < nbb.size(); ++s) {
                    if (nbb[s] != u.variable) continue;
                    const auto& in = to_var_[static_cast<std::size_t>(b)][s];
                    for (std::size_t k = 0; k < msg.size(); ++k) msg[k] *= in[k];
                }
            }
            rescale(msg);
            return;
        }

        const auto& fac = g_.factor(u.factor);
        auto& msg = to_var_[a][slot];
        std::fill(msg.begin(), msg.end(), 0.0);
        std::vector<std::size_t> assign(nb.size(), 0);
        for (std::size_t flat = 0; flat < fac.table.size(); ++flat) {
            double w = fac.table[flat];
            for (std::size_t s = 0; s < nb.size() && w != 0.0; ++s) {
                if (s != slot) w *= to_fac_[a][s][assign[s]];
            }
            msg[assign[slot]] += w;
            for (std::size_t s = nb.size(); s-- > 0;) {
                if (++assign[s] < g_.space(nb[s]).size()) break;
                assign[s] = 0;
            }
        }
        rescale(msg);
    }

    std::vector<DiscreteSetDensity> beliefs() const {
        std::vector<DiscreteSetDensity> out;
        for (int v = 0; v < g_.num_variables(); ++v) {
            DiscreteSetDensity d{g_.space(v), std::vector<double>(g_.space(v).size(), 1.0)};
            for (int b : g_.factors_of(v)) {
                const auto& nbb = g_.factor(b).neighbors;
                for (std::size_t s = 0; s < nbb.size(); ++s) {
                    if (nbb[s] != v) continue;
                    const auto& in = to_var_[static_cast<std::size_t>(b)][s];
                    for (std::size_t k = 0; k < d.mass.size(); ++k) d.mass[k] *= in[k];
                }
            }
            d.normalize();
            out.push_back(std::move(d));
        }
        return out;
    }

    /// Message from factor `a` to its `slot`-th neighbor.
    const std::vector<double>& factor_message(int a, std::size_t slot) const {
        return to_var_[static_cast<std::size_t>(a)][slot];
    }

private:
    static void rescale(std::vector<double>& msg) {
        const double t = std::accumulate(msg.begin(), msg.end(), 0.0);
        if (t > 0.0) {
            for (double& v : msg) v /= t;
        }
    }

    const DiscreteFactorGraph& g_;
    std::vector<std::vector<std::vector<double>>> to_var_;
    std::vector<std::vector<std::vector<double>>> to_fac_;
};

inline std::vector<DiscreteSetDensity> run_set_bp(const DiscreteFactorGraph& g, const MessageSchedule& schedule,
                                                  int iterations) {
    SetBeliefPropagation bp(g);
    bp.run(schedule, iterations);
    return bp.beliefs();
}

/// Partition/merge indicator: 1 when the parts are pairwise disjoint and their union is `whole`.
inline double partition_indicator(SubsetMask whole, std::span<const SubsetMask> parts) {
    SubsetMask seen = 0;
    for (SubsetMask p : parts) {
        if (seen & p) return 0.0;
        seen |= p;
    }
    return seen == whole ? 1.0 : 0.0;
}

/// Unnormalized PPP-like mass: prod over elements of rate[x].
inline DiscreteSetDensity ppp_mass(const SetSpace& space, std::span<const double> rate) {
    if (rate.size() != static_cast<std::size_t>(space.n_points())) {
        throw DimensionError("ppp_mass: one rate per point required");
    }
    DiscreteSetDensity d{space, std::vector<double>(space.size(), 1.0)};
    for (std::size_t k = 0; k < space.size(); ++k) {
        for (int x : space.elements(k)) d.mass[k] *= rate[static_cast<std::size_t>(x)];
    }
    return d;
}

}  // namespace setbp::oracle
