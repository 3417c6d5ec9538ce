#include "comdp/filter.hpp"

#include "comdp/models.hpp"
#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <random>

using namespace comdp;

namespace {

Belief half_half() {
    Belief z(2);
    z << 0.5, 0.5;
    return z;
}

// Index of the support row closest to the given belief.
Index find_row(const BeliefDistribution& dist, const Belief& target) {
    Index best = -1;
    Scalar best_gap = kInfinity;
    for (Index i = 0; i < dist.size(); ++i) {
        const Scalar gap = (dist.support.row(i).transpose() - target).cwiseAbs().maxCoeff();
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    REQUIRE(best >= 0);
    REQUIRE(best_gap <= 1e-12);
    return best;
}

}  // namespace

TEST_CASE("joint kernel matches the abs-square closed form") {
    const DiscretePomdp m = make_abs_square_k(4);
    const Belief z = half_half();
    for (int k = 1; k <= 4; ++k) {
        const Index a = m.action_index("-1/" + std::to_string(k));
        const JointTable joint = joint_update(m, z, a);
        // R({1} x {1} | z, a) = |a| / 2 for a < 0.
        CHECK(joint.table(0, 0) == doctest::Approx(0.5 / k).epsilon(1e-14));
        CHECK(joint.table.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(!joint.infeasible_action);
    }
}

TEST_CASE("joint kernel: identity transition with uninformative observations") {
    std::mt19937_64 rng(41);
    DiscretePomdp m = oracles::random_model(rng);
    m.transition[0] = Matrix::Identity(2, 2);
    m.obs_kernel[0] = Matrix::Constant(2, 2, 0.5);
    Belief z(2);
    z << 1.0, 0.0;
    const JointTable joint = joint_update(m, z, 0);
    CHECK(joint.table(0, 0) == doctest::Approx(0.5));
    CHECK(joint.table(0, 1) == doctest::Approx(0.5));
    CHECK(joint.table(1, 0) == doctest::Approx(0.0));
    CHECK(joint.table(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("joint kernel matches brute-force triple sums on random models") {
    std::mt19937_64 rng(42);
    oracles::RandomModelOptions opt;
    opt.n_states = 3;
    opt.n_obs = 3;
    opt.n_actions = 2;
    for (int trial = 0; trial < 50; ++trial) {
        const DiscretePomdp m = oracles::random_model(rng, opt);
        const Belief z = oracles::random_belief(rng, 3);
        for (Index a = 0; a < 2; ++a) {
            const Matrix expected = oracles::joint_brute_force(m, z, a);
            const Matrix got = joint_update(m, z, a).table;
            CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-14);
        }
    }
}

TEST_CASE("joint kernel flags actions infeasible on the whole support") {
    std::mt19937_64 rng(43);
    DiscretePomdp m = oracles::random_model(rng);
    m.cost(0, 1) = kInfinity;
    Belief z(2);
    z << 1.0, 0.0;
    CHECK(joint_update(m, z, 1).infeasible_action);
    CHECK(!joint_update(m, z, 0).infeasible_action);
    CHECK(!joint_update(m, half_half(), 1).infeasible_action);
}

TEST_CASE("observation marginal matches the abs-square closed form") {
    const DiscretePomdp m = make_abs_square_k(4);
    const Belief z = half_half();
    for (int k = 1; k <= 4; ++k) {
        for (const bool negative : {true, false}) {
            const std::string label = (negative ? "-1/" : "1/") + std::to_string(k);
            const Scalar a = (negative ? -1.0 : 1.0) / k;
            const Vector marginal = obs_marginal_weights(m, z, m.action_index(label));
            CHECK(marginal(0) ==
                  doctest::Approx((std::abs(a) + a * a) / 2.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("observation marginal equals joint column sums; fixed law when Q ignores the state") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = 3;
        opt.n_obs = 4;
        const DiscretePomdp m = oracles::random_model(rng, opt);
        const Belief z = oracles::random_belief(rng, 3);
        const Vector marginal = obs_marginal_weights(m, z, 0);
        const Vector expected = joint_update(m, z, 0).table.colwise().sum().transpose();
        CHECK((marginal - expected).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(marginal.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    DiscretePomdp m = oracles::random_model(rng);
    Matrix fixed(2, 2);
    fixed << 0.3, 0.7, 0.3, 0.7;  // independent of the next state
    m.obs_kernel[0] = fixed;
    for (int trial = 0; trial < 5; ++trial) {
        const Vector marginal = obs_marginal_weights(m, oracles::random_belief(rng, 2), 0);
        CHECK(marginal(0) == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(marginal(1) == doctest::Approx(0.7).epsilon(1e-14));
    }
}

TEST_CASE("bayes update reproduces the square-wave posteriors") {
    for (int n = 1; n <= 4; ++n) {
        const DiscretePomdp m = make_square_wave(n, 1 << n);
        const Index a = m.action_index("1/" + std::to_string(n));
        const Belief z = half_half();
        for (Index y = 0; y < m.n_obs(); ++y) {
            const Belief posterior = bayes_update(m, z, a, y);
            if (square_wave_density(n, m.obs_coords(y, 0)) == 2.0) {
                CHECK(posterior(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
                CHECK(posterior(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
            } else {
                CHECK(posterior(0) == doctest::Approx(1.0).epsilon(1e-13));
                CHECK(posterior(1) == doctest::Approx(0.0).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("bayes update keeps z on zero-likelihood observations") {
    const DiscretePomdp m = make_sine_lattice(2, 3);
    const Belief z = half_half();
    // Observation "0" has zero mass under action 1/m.
    const Belief posterior = bayes_update(m, z, m.action_index("1/2"), m.obs_index("0"));
    CHECK(posterior == z);
}

TEST_CASE("bayes update with uninformative observations returns the predictive law") {
    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 20; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = 3;
        DiscretePomdp m = oracles::random_model(rng, opt);
        m.obs_kernel[0] = Matrix::Constant(3, 2, 0.5);
        const Belief z = oracles::random_belief(rng, 3);
        const Vector predictive = m.transition[0].transpose() * z;
        const Belief posterior = bayes_update(m, z, 0, 1);
        CHECK((posterior - predictive).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("filter consistency: marginalizing posteriors recovers the predictive law") {
    std::mt19937_64 rng(46);
    for (int trial = 0; trial < 40; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = 4;
        opt.n_obs = 3;
        opt.n_actions = 3;
        const DiscretePomdp m = oracles::random_model(rng, opt);
        const Belief z = oracles::random_belief(rng, 4);
        const Index a = std::uniform_int_distribution<Index>(0, 2)(rng);
        const Vector marginal = obs_marginal_weights(m, z, a);
        Vector mixed = Vector::Zero(4);
        for (Index y = 0; y < m.n_obs(); ++y)
            mixed += marginal(y) * bayes_update(m, z, a, y);
        const Vector predictive = m.transition[static_cast<std::size_t>(a)].transpose() * z;
        CHECK((mixed - predictive).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("belief transition reproduces the square-wave two-point law") {
    for (int n = 1; n <= 4; ++n) {
        const DiscretePomdp m = make_square_wave(n, 1 << n);
        const Belief z = half_half();
        const BeliefDistribution next = belief_transition(m, z, m.action_index("1/" + std::to_string(n)));
        REQUIRE(next.size() == 2);
        Belief informative(2), revealing(2);
        informative << 1.0 / 3.0, 2.0 / 3.0;
        revealing << 1.0, 0.0;
        CHECK(next.weights(find_row(next, informative)) == doctest::Approx(0.75).epsilon(1e-13));
        CHECK(next.weights(find_row(next, revealing)) == doctest::Approx(0.25).epsilon(1e-13));

        // Action 0 teaches nothing: point mass at z.
        const BeliefDistribution stay = belief_transition(m, z, m.action_index("0"));
        REQUIRE(stay.size() == 1);
        CHECK((stay.support.row(0).transpose() - z).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(stay.weights(0) == doctest::Approx(1.0));
    }
}

TEST_CASE("belief transition under perfect observations yields point masses") {
    std::mt19937_64 rng(47);
    oracles::RandomModelOptions opt;
    opt.n_states = 3;
    opt.n_obs = 3;
    DiscretePomdp m = oracles::random_model(rng, opt);
    for (auto& q : m.obs_kernel) q = Matrix::Identity(3, 3);
    const Belief z = oracles::random_belief(rng, 3);
    const BeliefDistribution next = belief_transition(m, z, 0);
    const Vector predictive = m.transition[0].transpose() * z;
    REQUIRE(next.size() == 3);
    for (Index i = 0; i < 3; ++i) {
        Belief point = Vector::Zero(3);
        point(i) = 1.0;
        CHECK(next.weights(find_row(next, point)) == doctest::Approx(predictive(i)).epsilon(1e-12));
    }
}

TEST_CASE("belief transition is invariant under observation relabeling") {
    std::mt19937_64 rng(48);
    for (int trial = 0; trial < 20; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = 3;
        opt.n_obs = 4;
        const DiscretePomdp m = oracles::random_model(rng, opt);
        DiscretePomdp permuted = m;
        std::vector<Index> perm = {2, 0, 3, 1};
        for (std::size_t a = 0; a < m.transition.size(); ++a)
            for (Index y = 0; y < 4; ++y)
                permuted.obs_kernel[a].col(perm[static_cast<std::size_t>(y)]) =
                    m.obs_kernel[a].col(y);

        const Belief z = oracles::random_belief(rng, 3);
        const BeliefDistribution lhs = belief_transition(m, z, 0);
        const BeliefDistribution rhs = belief_transition(permuted, z, 0);
        REQUIRE(lhs.size() == rhs.size());
        for (Index i = 0; i < lhs.size(); ++i) {
            const Index j = find_row(rhs, lhs.support.row(i).transpose());
            CHECK(rhs.weights(j) == doctest::Approx(lhs.weights(i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("initial belief golden cases") {
    std::mt19937_64 rng(49);
    oracles::RandomModelOptions opt;
    opt.n_states = 3;
    opt.n_obs = 3;
    DiscretePomdp m = oracles::random_model(rng, opt);
    const Belief p = oracles::random_belief(rng, 3);

    // Uninformative initial channel: point mass at the prior.
    m.init_obs_kernel = Matrix::Constant(3, 3, 1.0 / 3.0);
    const BeliefDistribution flat = initial_belief(m, p);
    REQUIRE(flat.size() == 1);
    CHECK((flat.support.row(0).transpose() - p).cwiseAbs().maxCoeff() <= 1e-14);

    // Perfectly revealing initial channel: state point masses weighted by p.
    m.init_obs_kernel = Matrix::Identity(3, 3);
    const BeliefDistribution sharp = initial_belief(m, p);
    REQUIRE(sharp.size() == 3);
    for (Index x = 0; x < 3; ++x) {
        Belief point = Vector::Zero(3);
        point(x) = 1.0;
        Index row = -1;
        for (Index i = 0; i < sharp.size(); ++i)
            if ((sharp.support.row(i).transpose() - point).cwiseAbs().maxCoeff() <= 1e-12) row = i;
        REQUIRE(row >= 0);
        CHECK(sharp.weights(row) == doctest::Approx(p(x)).epsilon(1e-12));
    }
}

TEST_CASE("initial belief matches direct (x0, y0) enumeration") {
    std::mt19937_64 rng(50);
    for (int trial = 0; trial < 30; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = 3;
        opt.n_obs = 4;
        const DiscretePomdp m = oracles::random_model(rng, opt);
        const Belief p = oracles::random_belief(rng, 3);
        const BeliefDistribution got = initial_belief(m, p);

        // Enumerate the (x0, y0) joint table directly.
        for (Index y = 0; y < m.n_obs(); ++y) {
            Vector joint(3);
            for (Index x = 0; x < 3; ++x) joint(x) = p(x) * m.init_obs_kernel(x, y);
            const Scalar mass = joint.sum();
            if (mass <= 0.0) continue;
            const Belief posterior = joint / mass;
            const Index row = find_row(got, posterior);
            CHECK(got.weights(row) >= mass - 1e-12);  // merged rows accumulate mass
        }
        CHECK(got.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("iterated filter equals exhaustive conditional distributions") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 25; ++trial) {
        oracles::RandomModelOptions opt;
        opt.n_states = std::uniform_int_distribution<Index>(2, 4)(rng);
        opt.n_obs = std::uniform_int_distribution<Index>(2, 4)(rng);
        opt.n_actions = std::uniform_int_distribution<Index>(1, 3)(rng);
        const DiscretePomdp m = oracles::random_model(rng, opt);

        const int horizon = std::uniform_int_distribution<int>(1, 3)(rng);
        std::vector<Index> actions;
        for (int t = 0; t < horizon; ++t)
            actions.push_back(std::uniform_int_distribution<Index>(0, opt.n_actions - 1)(rng));
        std::vector<Index> observations;
        for (int t = 0; t <= horizon; ++t)
            observations.push_back(std::uniform_int_distribution<Index>(0, opt.n_obs - 1)(rng));

        if (oracles::history_probability(m, actions, observations) <= 1e-12) continue;

        Belief z = initial_bayes(m, m.prior, observations[0]);
        for (int t = 0; t < horizon; ++t)
            z = bayes_update(m, z, actions[static_cast<std::size_t>(t)],
                             observations[static_cast<std::size_t>(t + 1)]);
        const Belief expected = oracles::conditional_by_enumeration(m, actions, observations);
        REQUIRE(expected.size() == z.size());
        CHECK((z - expected).cwiseAbs().maxCoeff() <= 1e-10);
    }
}
