#pragma once

#include "comdp/pomdp.hpp"

namespace comdp {

/// Joint law of (next state, next observation) given (z, a).
struct JointTable {
    Matrix table;                    // X' x Y
    bool infeasible_action = false;  // every state in supp(z) has c(x,a) = +inf
};

JointTable joint_update(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a);

/// R'(.|z,a): column sums of the joint table, as a vector over observation
/// indices and as a measure over the observation points.
Vector obs_marginal_weights(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z,
                            Index a);
FiniteMeasure obs_marginal(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a);

/// Posterior H(z,a,y). Returns z unchanged when R'(y|z,a) = 0.
Belief bayes_update(const DiscretePomdp& model, const Eigen::Ref<const Belief>& z, Index a,
                    Index y);

/// Finitely supported distribution over beliefs; identical support elements
/// (componentwise within the merge tolerance) are coalesced, keeping first
/// occurrence order.
struct BeliefDistribution {
    static constexpr Scalar kMergeTol = 1e-12;

    Matrix support;  // k x X, rows are beliefs
    Vector weights;  // k, sums to 1

    static BeliefDistribution from_rows(const Matrix& beliefs, const Vector& weights);

    Index size() const { return support.rows(); }
    /// Atoms as a measure on the belief simplex with the Euclidean metric.
    FiniteMeasure as_measure() const;
};

/// q(.|z,a): law of the next belief (Bayes posteriors weighted by R').
BeliefDistribution belief_transition(const DiscretePomdp& model,
                                     const Eigen::Ref<const Belief>& z, Index a);

/// Posterior given the initial observation y0: H0(x|p,y0) proportional to
/// p(x) Q0(y0|x). Returns p unchanged when the observation has zero mass.
Belief initial_bayes(const DiscretePomdp& model, const Eigen::Ref<const Belief>& prior, Index y0);

/// q0(.|p): law of the initial belief induced by Q0.
BeliefDistribution initial_belief(const DiscretePomdp& model,
                                  const Eigen::Ref<const Belief>& prior);

}  // namespace comdp
