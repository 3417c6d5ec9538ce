#pragma once

#include "comdp/types.hpp"

#include <functional>
#include <vector>

namespace comdp {

enum class MetricKind { Euclidean1D, EuclideanND, Container };

/// Declares the metric space a measure lives on. The container metric is
/// |a-b| when a and b fall between the same pair of cut points and |a-b|+1
/// otherwise; cut points must be strictly increasing.
struct MetricSupport {
    MetricKind kind = MetricKind::Euclidean1D;
    std::vector<Scalar> cuts;  // Container only

    static MetricSupport euclidean_1d() { return {MetricKind::Euclidean1D, {}}; }
    static MetricSupport euclidean_nd() { return {MetricKind::EuclideanND, {}}; }
    static MetricSupport container(std::vector<Scalar> cut_points);

    /// Index of the half-open container [d_i, d_{i+1}) holding x.
    int container_index(Scalar x) const;

    Scalar distance(const Eigen::Ref<const Vector>& a,
                    const Eigen::Ref<const Vector>& b) const;

    bool compatible_with(const MetricSupport& other) const;
};

/// Finitely supported probability measure on a metric support.
/// Atoms within the merge tolerance of each other are coalesced at
/// construction (weights summed, first occurrence kept); exact zero-weight
/// atoms are dropped.
class FiniteMeasure {
public:
    static constexpr Scalar kMergeTol = 1e-12;
    static constexpr Scalar kMassTol = 1e-12;

    FiniteMeasure(MetricSupport support, Matrix atoms, Vector weights);

    static FiniteMeasure point_mass(MetricSupport support, Vector atom);

    const MetricSupport& support() const { return support_; }
    Index size() const { return atoms_.rows(); }
    Index dim() const { return atoms_.cols(); }
    const Matrix& atoms() const { return atoms_; }
    const Vector& weights() const { return weights_; }
    Eigen::Ref<const Vector> atom(Index i) const { return atoms_.row(i).transpose(); }

private:
    MetricSupport support_;
    Matrix atoms_;    // size x dim, rows are points
    Vector weights_;  // size
};

using SetPredicate = std::function<bool(const Eigen::Ref<const Vector>&)>;

/// Total-variation distance (1/2) sum_{union of atoms} |p - q| in [0, 1].
Scalar tv_distance(const FiniteMeasure& p, const FiniteMeasure& q);

struct SetwiseGap {
    Scalar gap = 0.0;
    bool empty_family = false;  // warning: no test sets were supplied
};

/// max over the supplied test sets S of |p(S) - q(S)|.
SetwiseGap setwise_gap(const FiniteMeasure& p, const FiniteMeasure& q,
                       const std::vector<SetPredicate>& sets);

/// Exact Wasserstein-1 (optimal transport) distance with the declared metric
/// as ground cost, via a successive-shortest-path transportation solve.
Scalar wasserstein1(const FiniteMeasure& p, const FiniteMeasure& q);

}  // namespace comdp
