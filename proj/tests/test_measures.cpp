#include "comdp/measures.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace comdp;

namespace {

FiniteMeasure measure_1d(std::vector<Scalar> points, std::vector<Scalar> weights,
                         MetricSupport support = MetricSupport::euclidean_1d()) {
    Matrix atoms(static_cast<Index>(points.size()), 1);
    for (std::size_t i = 0; i < points.size(); ++i) atoms(static_cast<Index>(i), 0) = points[i];
    Vector w(static_cast<Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) w(static_cast<Index>(i)) = weights[i];
    return FiniteMeasure(std::move(support), std::move(atoms), std::move(w));
}

// Discretization of the square-wave density with 2^n sections onto a dyadic
// grid of `cells` cells (cells a multiple of 2^n), plus the uniform law.
FiniteMeasure square_wave_measure(int n, int cells) {
    std::vector<Scalar> pts, w;
    for (int i = 0; i < cells; ++i) {
        const Scalar mid = (i + 0.5) / cells;
        const int section = static_cast<int>(std::floor(mid * (1 << n)));
        pts.push_back(mid);
        w.push_back(section % 2 == 0 ? 0.0 : 2.0 / cells);
    }
    return measure_1d(pts, w);
}

FiniteMeasure uniform_measure(int cells) {
    std::vector<Scalar> pts, w;
    for (int i = 0; i < cells; ++i) {
        pts.push_back((i + 0.5) / cells);
        w.push_back(1.0 / cells);
    }
    return measure_1d(pts, w);
}

FiniteMeasure random_measure(std::mt19937_64& rng, Index max_atoms,
                             MetricSupport support = MetricSupport::euclidean_1d()) {
    std::uniform_int_distribution<Index> natoms(1, max_atoms);
    std::uniform_real_distribution<Scalar> coord(-3.0, 3.0);
    const Index n = natoms(rng);
    std::vector<Scalar> pts, w;
    for (Index i = 0; i < n; ++i) pts.push_back(coord(rng));
    Vector weights = oracles::random_stochastic_row(rng, n);
    for (Index i = 0; i < n; ++i) w.push_back(weights(i));
    return measure_1d(pts, w, std::move(support));
}

}  // namespace

TEST_CASE("container metric distances") {
    const MetricSupport ms = MetricSupport::container({0.0, 2.0});
    Vector a(1), b(1);
    a << 0.5;
    b << 1.5;  // same container [0, 2)
    CHECK(ms.distance(a, b) == doctest::Approx(1.0));
    b << -0.5;  // different containers
    CHECK(ms.distance(a, b) == doctest::Approx(2.0));
    b << 2.5;
    CHECK(ms.distance(a, b) == doctest::Approx(3.0));
    CHECK_THROWS_AS(MetricSupport::container({1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("finite measure construction merges and validates") {
    // Duplicate atoms are merged with summed weights.
    const FiniteMeasure p = measure_1d({1.0, 1.0 + 1e-14, 2.0}, {0.25, 0.25, 0.5});
    CHECK(p.size() == 2);
    CHECK(p.weights()(0) == doctest::Approx(0.5).epsilon(1e-12));
    // Zero-weight atoms are dropped.
    const FiniteMeasure q = measure_1d({1.0, 2.0, 3.0}, {0.5, 0.0, 0.5});
    CHECK(q.size() == 2);

    CHECK_THROWS_AS(measure_1d({0.0, 1.0}, {0.7, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(measure_1d({0.0, 1.0}, {-0.1, 1.1}), std::invalid_argument);
}

TEST_CASE("tv distance golden values") {
    const FiniteMeasure p = measure_1d({0.0, 1.0}, {0.5, 0.5});
    CHECK(tv_distance(p, p) == doctest::Approx(0.0));

    const FiniteMeasure du =
        FiniteMeasure::point_mass(MetricSupport::euclidean_1d(), Vector::Constant(1, 0.0));
    const FiniteMeasure dv =
        FiniteMeasure::point_mass(MetricSupport::euclidean_1d(), Vector::Constant(1, 2.0));
    CHECK(tv_distance(du, dv) == doctest::Approx(1.0));

    // Square-wave vs uniform: densities differ by 1 everywhere, so the
    // distance is 1/2 for every section count, at any aligned resolution.
    for (int n = 1; n <= 6; ++n) {
        CHECK(tv_distance(square_wave_measure(n, 1 << n), uniform_measure(1 << n)) ==
              doctest::Approx(0.5).epsilon(1e-14));
        CHECK(tv_distance(square_wave_measure(n, 64), uniform_measure(64)) ==
              doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("setwise gap golden values and empty-family warning") {
    const FiniteMeasure p = measure_1d({0.0, 1.0}, {0.5, 0.5});
    const FiniteMeasure q =
        FiniteMeasure::point_mass(MetricSupport::euclidean_1d(), Vector::Constant(1, 0.0));
    std::vector<SetPredicate> singleton_zero = {
        [](const Eigen::Ref<const Vector>& atom) { return std::abs(atom(0)) < 1e-9; }};
    CHECK(setwise_gap(p, q, singleton_zero).gap == doctest::Approx(0.5));
    CHECK(setwise_gap(p, p, singleton_zero).gap == doctest::Approx(0.0));

    const SetwiseGap empty = setwise_gap(p, q, {});
    CHECK(empty.gap == 0.0);
    CHECK(empty.empty_family);
}

TEST_CASE("setwise gap over dyadic intervals is bounded by 2^(1-n)") {
    // All intervals with endpoints on the section grid.
    for (int n = 1; n <= 6; ++n) {
        const int cells = 64;
        const FiniteMeasure mn = square_wave_measure(n, cells);
        const FiniteMeasure m = uniform_measure(cells);
        std::vector<SetPredicate> intervals;
        const int sections = 1 << n;
        for (int s = 0; s < sections; ++s)
            for (int t = s + 1; t <= sections; ++t) {
                const Scalar lo = static_cast<Scalar>(s) / sections;
                const Scalar hi = static_cast<Scalar>(t) / sections;
                intervals.push_back([lo, hi](const Eigen::Ref<const Vector>& atom) {
                    return atom(0) > lo && atom(0) < hi;
                });
            }
        const Scalar gap = setwise_gap(mn, m, intervals).gap;
        CHECK(gap <= std::ldexp(1.0, 1 - n) + 1e-14);
        CHECK(gap ==
              doctest::Approx(std::ldexp(1.0, -n)).epsilon(1e-12));  // attained by one section
    }
}

TEST_CASE("setwise gap over all subsets equals tv on shared supports") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = std::uniform_int_distribution<Index>(1, 6)(rng);
        std::vector<Scalar> pts;
        for (Index i = 0; i < n; ++i) pts.push_back(static_cast<Scalar>(i));
        Vector wp = oracles::random_stochastic_row(rng, n);
        Vector wq = oracles::random_stochastic_row(rng, n);
        const FiniteMeasure p = measure_1d(pts, {wp.data(), wp.data() + n});
        const FiniteMeasure q = measure_1d(pts, {wq.data(), wq.data() + n});

        std::vector<SetPredicate> subsets;
        for (unsigned mask = 0; mask < (1u << n); ++mask)
            subsets.push_back([mask](const Eigen::Ref<const Vector>& atom) {
                const int idx = static_cast<int>(std::llround(atom(0)));
                return (mask >> idx) & 1u;
            });
        const Scalar gap = setwise_gap(p, q, subsets).gap;
        CHECK(gap == doctest::Approx(tv_distance(p, q)).epsilon(1e-12));
        CHECK(gap <= 2.0 * tv_distance(p, q) + 1e-12);
    }
}

TEST_CASE("wasserstein golden values") {
    const FiniteMeasure p = measure_1d({0.0, 1.0}, {0.5, 0.5});
    CHECK(wasserstein1(p, p) == doctest::Approx(0.0));

    const FiniteMeasure du =
        FiniteMeasure::point_mass(MetricSupport::euclidean_1d(), Vector::Constant(1, -1.0));
    const FiniteMeasure dv =
        FiniteMeasure::point_mass(MetricSupport::euclidean_1d(), Vector::Constant(1, 1.5));
    CHECK(wasserstein1(du, dv) == doctest::Approx(2.5));

    const FiniteMeasure q = measure_1d({0.25, 0.75}, {0.5, 0.5});
    CHECK(wasserstein1(p, q) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(oracles::w1_2x2(p, q) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("wasserstein matches the 1-D CDF closed form on random instances") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const FiniteMeasure p = random_measure(rng, 6);
        const FiniteMeasure q = random_measure(rng, 6);
        CHECK(wasserstein1(p, q) == doctest::Approx(oracles::w1_cdf_1d(p, q)).epsilon(1e-10));
    }
}

TEST_CASE("metric axioms on random small instances") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        const MetricSupport support = trial % 2 == 0 ? MetricSupport::euclidean_1d()
                                                     : MetricSupport::container({-1.0, 0.5, 2.0});
        const FiniteMeasure a = random_measure(rng, 6, support);
        const FiniteMeasure b = random_measure(rng, 6, support);
        const FiniteMeasure c = random_measure(rng, 6, support);

        for (auto dist : {+[](const FiniteMeasure& x, const FiniteMeasure& y) {
                              return tv_distance(x, y);
                          },
                          +[](const FiniteMeasure& x, const FiniteMeasure& y) {
                              return wasserstein1(x, y);
                          }}) {
            const Scalar ab = dist(a, b), ba = dist(b, a);
            const Scalar ac = dist(a, c), cb = dist(c, b);
            CHECK(ab >= 0.0);
            CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
            CHECK(dist(a, a) <= 1e-10);
            CHECK(ab <= ac + cb + 1e-10);
        }
    }
}

TEST_CASE("wasserstein bounded by diameter-scaled tv on shared supports") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const Index n = std::uniform_int_distribution<Index>(2, 6)(rng);
        std::uniform_real_distribution<Scalar> coord(-3.0, 3.0);
        std::vector<Scalar> pts;
        for (Index i = 0; i < n; ++i) pts.push_back(coord(rng));
        Vector wp = oracles::random_stochastic_row(rng, n);
        Vector wq = oracles::random_stochastic_row(rng, n);
        const FiniteMeasure p = measure_1d(pts, {wp.data(), wp.data() + n});
        const FiniteMeasure q = measure_1d(pts, {wq.data(), wq.data() + n});

        Scalar diameter = 0.0;
        for (Index i = 0; i < p.size(); ++i)
            for (Index j = 0; j < p.size(); ++j)
                diameter = std::max(diameter, p.support().distance(p.atom(i), p.atom(j)));
        CHECK(wasserstein1(p, q) <= 2.0 * diameter * tv_distance(p, q) + 1e-10);
    }
}

TEST_CASE("measure mismatch is rejected") {
    const FiniteMeasure p = measure_1d({0.0}, {1.0});
    const FiniteMeasure q = measure_1d({0.0}, {1.0}, MetricSupport::container({1.0}));
    CHECK_THROWS_AS(tv_distance(p, q), std::invalid_argument);
    CHECK_THROWS_AS(wasserstein1(p, q), std::invalid_argument);
}
