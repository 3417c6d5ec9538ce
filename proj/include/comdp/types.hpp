#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace comdp {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr Scalar kInfinity = std::numeric_limits<Scalar>::infinity();

/// Inner product with the convention 0 * inf = 0. Used wherever +inf encodes
/// an infeasible action and the weight vector is a probability distribution.
template <typename DerivedV, typename DerivedW>
Scalar dot_zero_inf(const Eigen::MatrixBase<DerivedV>& values,
                    const Eigen::MatrixBase<DerivedW>& weights) {
    Scalar acc = 0.0;
    for (Index i = 0; i < values.size(); ++i) {
        const Scalar w = weights(i);
        if (w == 0.0) continue;
        const Scalar v = values(i);
        if (std::isinf(v)) return kInfinity;
        acc += v * w;
    }
    return acc;
}

template <typename Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& v, Scalar mass_tol) {
    if (v.size() == 0) return false;
    for (Index i = 0; i < v.size(); ++i) {
        if (!(v(i) >= 0.0)) return false;  // also rejects NaN
    }
    return std::abs(v.sum() - 1.0) <= mass_tol;
}

}  // namespace comdp
