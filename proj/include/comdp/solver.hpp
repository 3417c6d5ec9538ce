#pragma once

#include "comdp/filter.hpp"
#include "comdp/parallel.hpp"
#include "comdp/pomdp.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace comdp {

/// Expected one-step cost of action a under belief z, with 0 * inf = 0.
inline Scalar lift_cost(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a) {
    return dot_zero_inf(model.cost.col(a), z);
}

/// Finite-horizon value function as a minimum of linear functions over
/// states. Exact for finite models.
struct AlphaVectorSet {
    Matrix vectors;              // k x X
    std::vector<Index> actions;  // action achieving each vector at backup time; -1 at horizon 0
    int horizon = 0;

    Scalar value_at(const Eigen::Ref<const Belief>& z) const {
        Scalar best = kInfinity;
        for (Index i = 0; i < vectors.rows(); ++i)
            best = std::min(best, dot_zero_inf(vectors.row(i).transpose(), z));
        return best;
    }
};

/// Horizon-0 value function (identically zero).
AlphaVectorSet initial_alpha(const DiscretePomdp& model);

enum class PruneMode { Pointwise, ExactLp };

/// One exact Bellman backup over all action/observation-to-vector
/// assignments, pruned to an equivalent set.
AlphaVectorSet alpha_backup(const DiscretePomdp& model, const AlphaVectorSet& value,
                            PruneMode prune = PruneMode::Pointwise);

AlphaVectorSet solve_alpha(const DiscretePomdp& model, int horizon,
                           PruneMode prune = PruneMode::Pointwise);

/// Regular lattice on the belief simplex (denominators `resolution`) with
/// barycentric interpolation over the standard (Freudenthal) triangulation;
/// interpolation weights are a probability vector over the enclosing cell.
class SimplexGrid {
public:
    static SimplexGrid create(Index dim, int resolution);

    Index dim() const { return dim_; }
    int resolution() const { return resolution_; }
    Index size() const { return vertices_.rows(); }
    const Matrix& vertices() const { return vertices_; }

    struct Interpolation {
        std::vector<Index> indices;
        std::vector<Scalar> weights;
    };
    Interpolation locate(const Eigen::Ref<const Vector>& z) const;

private:
    Index dim_ = 0;
    int resolution_ = 1;
    Matrix vertices_;
    std::map<std::vector<int>, Index> index_;
};

struct BeliefGridValues {
    SimplexGrid grid;
    Vector values;

    Scalar value_at(const Eigen::Ref<const Belief>& z) const {
        const auto interp = grid.locate(z);
        Scalar acc = 0.0;
        for (std::size_t k = 0; k < interp.indices.size(); ++k) {
            const Scalar w = interp.weights[k];
            if (w == 0.0) continue;
            const Scalar v = values(interp.indices[k]);
            if (std::isinf(v)) return kInfinity;
            acc += w * v;
        }
        return acc;
    }
};

struct GridSolveOptions {
    int resolution = 50;
    int max_iters = 10000;
    Scalar epsilon = 1e-8;
    int threads = 1;
    Scalar overflow_guard = 1e15;  // values above this are reported as +inf
};

struct IterationTrace {
    std::vector<Scalar> deltas;  // sup-norm change per sweep
    int iterations = 0;
    bool converged = false;
};

struct GridSolution {
    BeliefGridValues values;
    IterationTrace trace;
};

/// Value iteration restricted to grid vertices, successor beliefs evaluated
/// by barycentric interpolation.
GridSolution value_iterate_grid(const DiscretePomdp& model, const GridSolveOptions& options);

/// c_bar(z,a) + alpha * sum over q-successors of their value.
template <typename ValueFn>
Scalar action_value(const DiscretePomdp& model, const ValueFn& value,
                    const Eigen::Ref<const Belief>& z, Index a) {
    const Scalar cbar = lift_cost(model, z, a);
    if (std::isinf(cbar) || model.discount == 0.0) return cbar;
    const BeliefDistribution next = belief_transition(model, z, a);
    Scalar expect = 0.0;
    for (Index i = 0; i < next.size(); ++i) {
        const Scalar v = value.value_at(next.support.row(i).transpose());
        if (std::isinf(v)) return kInfinity;
        expect += next.weights(i) * v;
    }
    return cbar + model.discount * expect;
}

template <typename ValueFn>
Scalar bellman_value(const DiscretePomdp& model, const ValueFn& value,
                     const Eigen::Ref<const Belief>& z) {
    Scalar best = kInfinity;
    for (Index a = 0; a < model.n_actions(); ++a)
        best = std::min(best, action_value(model, value, z, a));
    return best;
}

/// max over sample beliefs (matrix rows) of |V(z) - Bellman(V)(z)|.
template <typename ValueFn>
Scalar optimality_residual(const DiscretePomdp& model, const ValueFn& value,
                           const Eigen::Ref<const Matrix>& beliefs) {
    Scalar worst = 0.0;
    for (Index i = 0; i < beliefs.rows(); ++i) {
        const Scalar v = value.value_at(beliefs.row(i).transpose());
        const Scalar b = bellman_value(model, value, beliefs.row(i).transpose());
        if (std::isinf(v) && std::isinf(b)) continue;
        worst = std::max(worst, std::abs(v - b));
    }
    return worst;
}

/// Actions within tolerance of the Bellman minimum at z. When the minimum is
/// +inf the whole action set is returned.
template <typename ValueFn>
std::vector<Index> greedy_action_set(const DiscretePomdp& model, const ValueFn& value,
                                     const Eigen::Ref<const Belief>& z, Scalar tol = 1e-9) {
    std::vector<Scalar> q(static_cast<std::size_t>(model.n_actions()));
    Scalar best = kInfinity;
    for (Index a = 0; a < model.n_actions(); ++a) {
        q[static_cast<std::size_t>(a)] = action_value(model, value, z, a);
        best = std::min(best, q[static_cast<std::size_t>(a)]);
    }
    std::vector<Index> out;
    if (std::isinf(best)) {
        for (Index a = 0; a < model.n_actions(); ++a) out.push_back(a);
        return out;
    }
    for (Index a = 0; a < model.n_actions(); ++a)
        if (q[static_cast<std::size_t>(a)] <= best + tol) out.push_back(a);
    return out;
}

/// Stationary I-policy: greedy with respect to a value function, ties broken
/// by lowest action index. Read-only and safe to share across threads.
template <typename ValueFn>
struct GreedyPolicy {
    const DiscretePomdp* model;
    const ValueFn* value;
    Scalar tol = 1e-9;

    Index operator()(const Eigen::Ref<const Belief>& z) const {
        return greedy_action_set(*model, *value, z, tol).front();
    }
};

template <typename ValueFn>
GreedyPolicy<ValueFn> make_greedy_policy(const DiscretePomdp& model, const ValueFn& value,
                                         Scalar tol = 1e-9) {
    return GreedyPolicy<ValueFn>{&model, &value, tol};
}

struct SimulationResult {
    Scalar mean = 0.0;
    Scalar std_error = 0.0;
    int completed = 0;
    int aborted = 0;
    std::string diagnostic;  // first abort reason, if any
    std::vector<Scalar> episode_costs;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

template <typename Rng>
Index sample_categorical(const Eigen::Ref<const Vector>& weights, Rng& rng) {
    std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
    const Scalar u = unif(rng) * weights.sum();
    Scalar acc = 0.0;
    for (Index i = 0; i < weights.size(); ++i) {
        acc += weights(i);
        if (u <= acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace detail

/// Monte Carlo estimate of the expected total discounted cost of executing
/// the policy through the filter. Deterministic given the seed, independent
/// of the thread count (one RNG stream per episode).
template <typename Policy>
SimulationResult simulate_policy(const DiscretePomdp& model, const Policy& policy,
                                 const Eigen::Ref<const Belief>& prior, int horizon,
                                 int episodes, std::uint64_t seed, int threads = 1) {
    if (horizon < 1) throw std::invalid_argument("simulate_policy: horizon must be >= 1");
    if (episodes < 1) throw std::invalid_argument("simulate_policy: episodes must be >= 1");

    std::vector<Scalar> costs(static_cast<std::size_t>(episodes), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(episodes), 1);
    std::vector<std::string> reasons(static_cast<std::size_t>(episodes));

    parallel_chunks(episodes, threads, [&](Index begin, Index end) {
        for (Index e = begin; e < end; ++e) {
            std::mt19937_64 rng(detail::mix_seed(seed, static_cast<std::uint64_t>(e)));
            Index x = detail::sample_categorical(prior, rng);
            const Index y0 = detail::sample_categorical(model.init_obs_kernel.row(x).transpose(), rng);
            Belief z = initial_bayes(model, prior, y0);
            Scalar total = 0.0, disc = 1.0;
            for (int t = 0; t < horizon; ++t) {
                const Index a = policy(z);
                const Scalar c = model.cost(x, a);
                if (!std::isfinite(c)) {
                    ok[static_cast<std::size_t>(e)] = 0;
                    reasons[static_cast<std::size_t>(e)] =
                        "episode " + std::to_string(e) + ": policy chose infeasible action " +
                        model.action_labels[static_cast<std::size_t>(a)] + " at step " +
                        std::to_string(t);
                    break;
                }
                total += disc * c;
                disc *= model.discount;
                const Index xn = detail::sample_categorical(
                    model.transition[static_cast<std::size_t>(a)].row(x).transpose(), rng);
                const Index y = detail::sample_categorical(
                    model.obs_kernel[static_cast<std::size_t>(a)].row(xn).transpose(), rng);
                z = bayes_update(model, z, a, y);
                x = xn;
            }
            costs[static_cast<std::size_t>(e)] = total;
        }
    });

    SimulationResult result;
    Scalar sum = 0.0;
    for (int e = 0; e < episodes; ++e) {
        if (!ok[static_cast<std::size_t>(e)]) {
            ++result.aborted;
            if (result.diagnostic.empty()) result.diagnostic = reasons[static_cast<std::size_t>(e)];
            continue;
        }
        result.episode_costs.push_back(costs[static_cast<std::size_t>(e)]);
        sum += costs[static_cast<std::size_t>(e)];
        ++result.completed;
    }
    if (result.completed > 0) {
        result.mean = sum / result.completed;
        if (result.completed > 1) {
            Scalar ss = 0.0;
            for (const Scalar c : result.episode_costs) ss += (c - result.mean) * (c - result.mean);
            result.std_error = std::sqrt(ss / (result.completed - 1)) /
                               std::sqrt(static_cast<Scalar>(result.completed));
        }
    }
    return result;
}

}  // namespace comdp
