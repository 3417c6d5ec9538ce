#include "comdp/filter.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace comdp {

namespace {

void check_belief_action(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a) {
    if (z.size() != model.n_states())
        throw std::invalid_argument("belief does not match the model's state list");
    if (!is_probability_vector(z, 1e-9))
        throw std::invalid_argument("belief must be a probability vector");
    if (a < 0 || a >= model.n_actions())
        throw std::invalid_argument("action index out of range");
}

}  // namespace

JointTable joint_update(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a) {
    check_belief_action(model, z, a);
    const auto ai = static_cast<std::size_t>(a);
    // predictive(x') = sum_x z(x) P(x'|x,a); entry (x',y) = predictive(x') Q(y|a,x').
    const Vector predictive = model.transition[ai].transpose() * z;
    JointTable out;
    out.table = predictive.asDiagonal() * model.obs_kernel[ai];
    out.infeasible_action = true;
    for (Index x = 0; x < z.size(); ++x) {
        if (z(x) > 0.0 && std::isfinite(model.cost(x, a))) {
            out.infeasible_action = false;
            break;
        }
    }
    return out;
}

Vector obs_marginal_weights(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z,
                            Index a) {
    return joint_update(model, z, a).table.colwise().sum().transpose();
}

FiniteMeasure obs_marginal(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z,
                           Index a) {
    return FiniteMeasure(model.obs_metric, model.obs_coords, obs_marginal_weights(model, z, a));
}

Belief bayes_update(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a,
                    Index y) {
    if (y < 0 || y >= model.n_obs()) throw std::invalid_argument("observation index out of range");
    const JointTable joint = joint_update(model, z, a);
    const Scalar mass = joint.table.col(y).sum();
    if (mass <= 0.0) return z;  // zero-likelihood convention: posterior stays at z
    return joint.table.col(y) / mass;
}

BeliefDistribution BeliefDistribution::from_rows(const Matrix& beliefs, const Vector& weights) {
    if (beliefs.rows() != weights.size())
        throw std::invalid_argument("BeliefDistribution: support/weight count mismatch");
    std::vector<Index> reps;
    Vector merged = Vector::Zero(weights.size());
    std::vector<Index> rep_of(static_cast<std::size_t>(beliefs.rows()));
    for (Index i = 0; i < beliefs.rows(); ++i) {
        Index found = -1;
        for (std::size_t r = 0; r < reps.size(); ++r) {
            if ((beliefs.row(i) - beliefs.row(reps[r])).cwiseAbs().maxCoeff() <= kMergeTol) {
                found = static_cast<Index>(r);
                break;
            }
        }
        if (found < 0) {
            found = static_cast<Index>(reps.size());
            reps.push_back(i);
        }
        rep_of[static_cast<std::size_t>(i)] = found;
    }
    for (Index i = 0; i < weights.size(); ++i)
        merged(reps[static_cast<std::size_t>(rep_of[static_cast<std::size_t>(i)])]) += weights(i);

    BeliefDistribution out;
    out.support.resize(static_cast<Index>(reps.size()), beliefs.cols());
    out.weights.resize(static_cast<Index>(reps.size()));
    for (std::size_t r = 0; r < reps.size(); ++r) {
        out.support.row(static_cast<Index>(r)) = beliefs.row(reps[r]);
        out.weights(static_cast<Index>(r)) = merged(reps[r]);
    }
    if (std::abs(out.weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("BeliefDistribution: weights must sum to 1");
    return out;
}

FiniteMeasure BeliefDistribution::as_measure() const {
    return FiniteMeasure(MetricSupport::euclidean_nd(), support, weights);
}

BeliefDistribution belief_transition(const DiscretePomdp& model,
                                     const Eigen::Ref<const Belief>& z, Index a) {
    const JointTable joint = joint_update(model, z, a);
    const Index ny = model.n_obs();
    Matrix posteriors(ny, model.n_states());
    Vector masses(ny);
    Index k = 0;
    for (Index y = 0; y < ny; ++y) {
        const Scalar mass = joint.table.col(y).sum();
        if (mass <= 0.0) continue;
        posteriors.row(k) = joint.table.col(y).transpose() / mass;
        masses(k) = mass;
        ++k;
    }
    if (k == 0) throw std::logic_error("belief_transition: observation marginal has no mass");
    return BeliefDistribution::from_rows(posteriors.topRows(k), masses.head(k));
}

Belief initial_bayes(const DiscretePomdp& model, const Eigen::Ref<const Belief>& prior,
                     Index y0) {
    if (prior.size() != model.n_states())
        throw std::invalid_argument("prior does not match the model's state list");
    if (y0 < 0 || y0 >= model.n_obs())
        throw std::invalid_argument("observation index out of range");
    const Vector joint = prior.cwiseProduct(model.init_obs_kernel.col(y0));
    const Scalar mass = joint.sum();
    if (mass <= 0.0) return prior;
    return joint / mass;
}

BeliefDistribution initial_belief(const DiscretePomdp& model,
                                  const Eigen::Ref<const Belief>& prior) {
    if (prior.size() != model.n_states())
        throw std::invalid_argument("prior does not match the model's state list");
    const Index ny = model.n_obs();
    Matrix posteriors(ny, model.n_states());
    Vector masses(ny);
    Index k = 0;
    for (Index y = 0; y < ny; ++y) {
        const Vector joint = prior.cwiseProduct(model.init_obs_kernel.col(y));
        const Scalar mass = joint.sum();
        if (mass <= 0.0) continue;
        posteriors.row(k) = joint.transpose() / mass;
        masses(k) = mass;
        ++k;
    }
    if (k == 0) throw std::logic_error("initial_belief: initial observation law has no mass");
    return BeliefDistribution::from_rows(posteriors.topRows(k), masses.head(k));
}

}  // namespace comdp
