#include "comdp/solver.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace comdp {

AlphaVectorSet initial_alpha(const DiscretePomdp& model) {
    AlphaVectorSet v;
    v.vectors = Matrix::Zero(1, model.n_states());
    v.actions = {-1};
    v.horizon = 0;
    return v;
}

namespace {

struct Tagged {
    Vector coeffs;
    Index action;
};

// v dominates u when v <= u pointwise; among equal vectors the earlier one is
// kept. Removing dominated vectors never changes the pointwise minimum, and
// domination by an already-removed vector still counts (transitivity).
std::vector<Tagged> prune_pointwise(const std::vector<Tagged>& cands) {
    const std::size_t n = cands.size();
    std::vector<char> keep(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n && keep[i]; ++j) {
            if (j == i) continue;
            bool leq = true, strict = false;
            for (Index x = 0; x < cands[i].coeffs.size(); ++x) {
                const Scalar a = cands[j].coeffs(x), b = cands[i].coeffs(x);
                if (a > b) {
                    leq = false;
                    break;
                }
                if (a < b) strict = true;
            }
            if (leq && (strict || j < i)) keep[i] = 0;
        }
    }
    std::vector<Tagged> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(cands[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex (maximization, Bland's rule) for the tiny witness
// LPs used by exact pruning. Constraints: ineq_a x <= ineq_b and eq_a x ==
// eq_b, x >= 0.
struct LpSolution {
    bool feasible = false;
    Scalar objective = 0.0;
    Vector x;
};

LpSolution simplex_max(const Vector& objective, const Matrix& ineq_a, const Vector& ineq_b,
                       const Matrix& eq_a, const Vector& eq_b) {
    const Index nvar = objective.size();
    const Index n_ineq = ineq_a.rows(), n_eq = eq_a.rows();
    const Index m = n_ineq + n_eq;
    const Scalar tol = 1e-10;

    // Equality tableau with nonnegative rhs; slacks for inequalities,
    // artificials wherever no natural basic column exists.
    Matrix a(m, nvar + n_ineq);
    a.setZero();
    Vector b(m);
    std::vector<Index> basis(static_cast<std::size_t>(m), -1);
    for (Index r = 0; r < n_ineq; ++r) {
        Scalar sign = ineq_b(r) < 0.0 ? -1.0 : 1.0;
        a.row(r).head(nvar) = sign * ineq_a.row(r);
        a(r, nvar + r) = sign;
        b(r) = sign * ineq_b(r);
        if (sign > 0.0) basis[static_cast<std::size_t>(r)] = nvar + r;
    }
    for (Index r = 0; r < n_eq; ++r) {
        Scalar sign = eq_b(r) < 0.0 ? -1.0 : 1.0;
        a.row(n_ineq + r).head(nvar) = sign * eq_a.row(r);
        b(n_ineq + r) = sign * eq_b(r);
    }

    Index n_art = 0;
    for (Index r = 0; r < m; ++r)
        if (basis[static_cast<std::size_t>(r)] < 0) ++n_art;
    const Index total = nvar + n_ineq + n_art;
    Matrix tab(m, total + 1);
    tab.setZero();
    tab.block(0, 0, m, nvar + n_ineq) = a;
    tab.col(total) = b;
    {
        Index art = nvar + n_ineq;
        for (Index r = 0; r < m; ++r) {
            if (basis[static_cast<std::size_t>(r)] >= 0) continue;
            tab(r, art) = 1.0;
            basis[static_cast<std::size_t>(r)] = art;
            ++art;
        }
    }

    auto run_simplex = [&](Vector cost, Index active_cols) {
        while (true) {
            // Reduced costs r_j = c_j - c_B . column_j on the current tableau.
            Vector cb(m);
            for (Index r = 0; r < m; ++r) cb(r) = cost(basis[static_cast<std::size_t>(r)]);
            Index enter = -1;
            for (Index j = 0; j < active_cols; ++j) {
                const Scalar rj = cost(j) - cb.dot(tab.col(j));
                if (rj > tol) {
                    enter = j;  // Bland: first improving index
                    break;
                }
            }
            if (enter < 0) return true;  // optimal
            Index leave = -1;
            Scalar best_ratio = kInfinity;
            for (Index r = 0; r < m; ++r) {
                if (tab(r, enter) <= tol) continue;
                const Scalar ratio = tab(r, total) / tab(r, enter);
                if (ratio < best_ratio - 1e-14 ||
                    (std::abs(ratio - best_ratio) <= 1e-14 && leave >= 0 &&
                     basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return false;  // unbounded
            const Scalar pivot = tab(leave, enter);
            tab.row(leave) /= pivot;
            for (Index r = 0; r < m; ++r) {
                if (r == leave) continue;
                const Scalar f = tab(r, enter);
                if (f != 0.0) tab.row(r) -= f * tab.row(leave);
            }
            basis[static_cast<std::size_t>(leave)] = enter;
        }
    };

    LpSolution out;
    if (n_art > 0) {
        Vector phase1 = Vector::Zero(total);
        for (Index j = nvar + n_ineq; j < total; ++j) phase1(j) = -1.0;
        if (!run_simplex(phase1, total)) return out;
        Scalar art_sum = 0.0;
        for (Index r = 0; r < m; ++r)
            if (basis[static_cast<std::size_t>(r)] >= nvar + n_ineq) art_sum += tab(r, total);
        if (art_sum > 1e-8) return out;  // infeasible
        // Pivot lingering artificials out of the basis where possible. A row
        // whose real columns are all zero is redundant and stays inert: no
        // real entering column can ever pivot on it.
        for (Index r = 0; r < m; ++r) {
            if (basis[static_cast<std::size_t>(r)] < nvar + n_ineq) continue;
            Index enter = -1;
            for (Index j = 0; j < nvar + n_ineq; ++j)
                if (std::abs(tab(r, j)) > tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) continue;  // redundant row
            const Scalar pivot = tab(r, enter);
            tab.row(r) /= pivot;
            for (Index rr = 0; rr < m; ++rr) {
                if (rr == r) continue;
                const Scalar f = tab(rr, enter);
                if (f != 0.0) tab.row(rr) -= f * tab.row(r);
            }
            basis[static_cast<std::size_t>(r)] = enter;
        }
    }

    // Phase 2 never lets artificial columns re-enter.
    Vector phase2 = Vector::Zero(total);
    phase2.head(nvar) = objective;
    if (!run_simplex(phase2, nvar + n_ineq)) return out;  // unbounded

    out.feasible = true;
    out.x = Vector::Zero(nvar);
    for (Index r = 0; r < m; ++r)
        if (basis[static_cast<std::size_t>(r)] < nvar)
            out.x(basis[static_cast<std::size_t>(r)]) = tab(r, total);
    out.objective = objective.dot(out.x);
    return out;
}

// Witness LP: max delta s.t. z in simplex, (w - phi) . z >= delta for all w.
// All coefficients must be finite.
struct Witness {
    Scalar delta = -kInfinity;
    Vector z;
};

Witness witness_point(const Vector& phi, const std::vector<const Vector*>& against) {
    const Index nx = phi.size();
    // Variables: z (nx), dplus, dminus.
    const Index nvar = nx + 2;
    Vector objective = Vector::Zero(nvar);
    objective(nx) = 1.0;
    objective(nx + 1) = -1.0;

    Scalar bound = 1.0;
    for (const Vector* w : against)
        for (Index x = 0; x < nx; ++x) bound = std::max(bound, std::abs((*w)(x) - phi(x)));

    const Index rows = static_cast<Index>(against.size()) + 2;
    Matrix ineq_a = Matrix::Zero(rows, nvar);
    Vector ineq_b = Vector::Zero(rows);
    for (Index r = 0; r < static_cast<Index>(against.size()); ++r) {
        const Vector& w = *against[static_cast<std::size_t>(r)];
        ineq_a.row(r).head(nx) = (phi - w).transpose();
        ineq_a(r, nx) = 1.0;
        ineq_a(r, nx + 1) = -1.0;
    }
    ineq_a(rows - 2, nx) = 1.0;  // bound the split objective to keep the LP bounded
    ineq_b(rows - 2) = 8.0 * bound;
    ineq_a(rows - 1, nx + 1) = 1.0;
    ineq_b(rows - 1) = 8.0 * bound;

    Matrix eq_a = Matrix::Zero(1, nvar);
    eq_a.row(0).head(nx).setOnes();
    Vector eq_b = Vector::Ones(1);

    const LpSolution sol = simplex_max(objective, ineq_a, ineq_b, eq_a, eq_b);
    Witness out;
    if (!sol.feasible) return out;
    out.delta = sol.objective;
    out.z = sol.x.head(nx);
    // Clean tiny negatives from pivoting and renormalize.
    for (Index x = 0; x < nx; ++x) out.z(x) = std::max(0.0, out.z(x));
    const Scalar s = out.z.sum();
    if (s > 0.0) out.z /= s;
    return out;
}

// Lark-style exact filter: keeps a subset whose pointwise minimum stays
// within the witness tolerance of the input's everywhere. Vectors with
// +inf components bypass the LP and are always kept; the witness test for
// finite vectors runs against kept finite vectors only, which can only keep
// more than strictly necessary, never change the envelope.
std::vector<Tagged> prune_exact_lp(std::vector<Tagged> cands) {
    const Index nx = cands.empty() ? 0 : cands.front().coeffs.size();
    std::vector<std::size_t> finite_ids;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].coeffs.allFinite()) finite_ids.push_back(i);
    if (finite_ids.size() <= 1) return cands;

    std::vector<char> in_kept(cands.size(), 0);
    std::vector<const Vector*> kept_finite;

    auto best_finite_at = [&](const Eigen::Ref<const Vector>& z, bool only_unkept) {
        std::size_t best = cands.size();
        Scalar best_val = kInfinity;
        for (const std::size_t i : finite_ids) {
            if (only_unkept && in_kept[i]) continue;
            const Scalar v = cands[i].coeffs.dot(z);
            if (best == cands.size() || v < best_val - 1e-15) {
                best = i;
                best_val = v;
            }
        }
        return best;
    };

    // Seed with the minimizers at the simplex corners.
    for (Index x = 0; x < nx; ++x) {
        Vector corner = Vector::Zero(nx);
        corner(x) = 1.0;
        const std::size_t b = best_finite_at(corner, false);
        if (b < cands.size() && !in_kept[b]) {
            in_kept[b] = 1;
            kept_finite.push_back(&cands[b].coeffs);
        }
    }

    for (const std::size_t i : finite_ids) {
        if (in_kept[i]) continue;
        while (!in_kept[i]) {
            const Witness w = witness_point(cands[i].coeffs, kept_finite);
            if (!(w.delta > 1e-9)) break;  // covered by the kept set
            // Some vector beats the kept set at w.z; admit the best remaining.
            const std::size_t b = best_finite_at(w.z, true);
            if (b == cands.size()) break;
            in_kept[b] = 1;
            kept_finite.push_back(&cands[b].coeffs);
        }
    }

    std::vector<Tagged> out;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (in_kept[i] || !cands[i].coeffs.allFinite()) out.push_back(cands[i]);
    return out;
}

// Back-projection of one value vector through (P, Q column y) with the
// 0 * inf = 0 convention.
Vector back_project(const Matrix& transition, const Vector& q_col, const Vector& value_vec) {
    const Index nx = transition.rows();
    Vector out(nx);
    for (Index x = 0; x < nx; ++x) {
        Scalar acc = 0.0;
        for (Index xn = 0; xn < nx; ++xn) {
            const Scalar coef = transition(x, xn) * q_col(xn);
            if (coef == 0.0) continue;
            if (std::isinf(value_vec(xn))) {
                acc = kInfinity;
                break;
            }
            acc += coef * value_vec(xn);
        }
        out(x) = acc;
    }
    return out;
}

}  // namespace

AlphaVectorSet alpha_backup(const DiscretePomdp& model, const AlphaVectorSet& value,
                            PruneMode prune) {
    const Index nx = model.n_states(), ny = model.n_obs(), na = model.n_actions();
    if (value.vectors.cols() != nx)
        throw std::invalid_argument("alpha_backup: value function does not match the model");
    const Index k = value.vectors.rows();

    std::vector<Tagged> all;
    for (Index a = 0; a < na; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        std::vector<Vector> partials;
        if (model.discount != 0.0) {
            // Per-observation back-projections, then a pruned cross-sum over
            // observation-to-vector assignments.
            partials.emplace_back(Vector::Zero(nx));
            for (Index y = 0; y < ny; ++y) {
                std::vector<Vector> projections;
                projections.reserve(static_cast<std::size_t>(k));
                for (Index i = 0; i < k; ++i)
                    projections.push_back(back_project(model.transition[ai],
                                                       model.obs_kernel[ai].col(y),
                                                       value.vectors.row(i).transpose()));
                std::vector<Tagged> sums;
                sums.reserve(partials.size() * projections.size());
                for (const Vector& s : partials)
                    for (const Vector& g : projections) sums.push_back({s + g, a});
                std::vector<Tagged> pruned = prune_pointwise(sums);
                partials.clear();
                for (Tagged& t : pruned) partials.push_back(std::move(t.coeffs));
            }
        } else {
            partials.emplace_back(Vector::Zero(nx));
        }
        for (const Vector& s : partials) {
            Vector cand(nx);
            for (Index x = 0; x < nx; ++x) {
                const Scalar c = model.cost(x, a);
                cand(x) = std::isinf(c) || std::isinf(s(x)) ? kInfinity
                                                            : c + model.discount * s(x);
            }
            all.push_back({std::move(cand), a});
        }
    }

    std::vector<Tagged> kept = prune_pointwise(all);
    if (prune == PruneMode::ExactLp && kept.size() > 1) kept = prune_exact_lp(std::move(kept));

    AlphaVectorSet out;
    out.vectors.resize(static_cast<Index>(kept.size()), nx);
    out.actions.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.vectors.row(static_cast<Index>(i)) = kept[i].coeffs.transpose();
        out.actions.push_back(kept[i].action);
    }
    out.horizon = value.horizon + 1;
    return out;
}

AlphaVectorSet solve_alpha(const DiscretePomdp& model, int horizon, PruneMode prune) {
    AlphaVectorSet v = initial_alpha(model);
    for (int t = 0; t < horizon; ++t) v = alpha_backup(model, v, prune);
    return v;
}

SimplexGrid SimplexGrid::create(Index dim, int resolution) {
    if (dim < 1) throw std::invalid_argument("SimplexGrid: dimension must be >= 1");
    if (resolution < 1) throw std::invalid_argument("SimplexGrid: resolution must be >= 1");
    SimplexGrid grid;
    grid.dim_ = dim;
    grid.resolution_ = resolution;

    std::vector<std::vector<int>> comps;
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    // Enumerate compositions of `resolution` into dim parts, lexicographically.
    std::function<void(Index, int)> rec = [&](Index pos, int left) {
        if (pos == dim - 1) {
            current[static_cast<std::size_t>(pos)] = left;
            comps.push_back(current);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            current[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, left - v);
        }
    };
    rec(0, resolution);

    grid.vertices_.resize(static_cast<Index>(comps.size()), dim);
    for (std::size_t i = 0; i < comps.size(); ++i) {
        for (Index d = 0; d < dim; ++d)
            grid.vertices_(static_cast<Index>(i), d) =
                static_cast<Scalar>(comps[i][static_cast<std::size_t>(d)]) / resolution;
        grid.index_[comps[i]] = static_cast<Index>(i);
    }
    return grid;
}

SimplexGrid::Interpolation SimplexGrid::locate(const Eigen::Ref<const Vector>& z) const {
    if (z.size() != dim_) throw std::invalid_argument("SimplexGrid: belief dimension mismatch");
    const Index n = dim_;
    const Scalar r = static_cast<Scalar>(resolution_);

    // Cumulative (staircase) coordinates s_i = r * sum_{j >= i} z_j, with
    // s_0 pinned to r; the Freudenthal cell and barycentric weights come from
    // the sorted fractional parts.
    Vector s(n + 1);
    s(n) = 0.0;
    Scalar tail = 0.0;
    for (Index i = n - 1; i >= 1; --i) {
        tail += z(i);
        s(i) = std::min(r, std::max(0.0, r * tail));
    }
    s(0) = r;
    for (Index i = 1; i < n; ++i) s(i) = std::min(s(i), s(i - 1));

    std::vector<int> base(static_cast<std::size_t>(n));
    Vector frac(n);
    base[0] = resolution_;
    frac(0) = 0.0;
    for (Index i = 1; i < n; ++i) {
        base[static_cast<std::size_t>(i)] = static_cast<int>(std::floor(s(i)));
        base[static_cast<std::size_t>(i)] = std::min(base[static_cast<std::size_t>(i)],
                                                     base[static_cast<std::size_t>(i - 1)]);
        frac(i) = s(i) - base[static_cast<std::size_t>(i)];
    }

    std::vector<Index> order;
    for (Index i = 1; i < n; ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        if (frac(a) != frac(b)) return frac(a) > frac(b);
        return a < b;
    });

    Interpolation out;
    auto push_vertex = [&](const std::vector<int>& staircase, Scalar weight) {
        std::vector<int> comp(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            const int hi = staircase[static_cast<std::size_t>(i)];
            const int lo = i + 1 < n ? staircase[static_cast<std::size_t>(i + 1)] : 0;
            comp[static_cast<std::size_t>(i)] = hi - lo;
        }
        const auto it = index_.find(comp);
        if (it == index_.end())
            throw std::logic_error("SimplexGrid: interpolation left the lattice");
        out.indices.push_back(it->second);
        out.weights.push_back(weight);
    };

    std::vector<int> staircase = base;
    Scalar prev = 1.0;
    for (std::size_t k = 0; k <= order.size(); ++k) {
        const Scalar next = k < order.size() ? frac(order[k]) : 0.0;
        const Scalar weight = std::max(0.0, prev - next);
        if (weight > 0.0) push_vertex(staircase, weight);
        if (k < order.size()) {
            ++staircase[static_cast<std::size_t>(order[k])];
            prev = next;
        }
    }

    // Normalize away floating-point dust.
    Scalar sum = 0.0;
    for (const Scalar w : out.weights) sum += w;
    if (sum > 0.0)
        for (Scalar& w : out.weights) w /= sum;
    return out;
}

GridSolution value_iterate_grid(const DiscretePomdp& model, const GridSolveOptions& options) {
    if (options.resolution < 1)
        throw std::invalid_argument("value_iterate_grid: resolution must be >= 1");
    const Index nx = model.n_states(), ny = model.n_obs(), na = model.n_actions();

    GridSolution out;
    out.values.grid = SimplexGrid::create(nx, options.resolution);
    const SimplexGrid& grid = out.values.grid;
    const Index nv = grid.size();

    // Per action: lifted costs at the vertices and the interpolated successor
    // operator as a sparse row-stochastic matrix.
    using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
    std::vector<Vector> costs(static_cast<std::size_t>(na));
    std::vector<Sparse> successors(static_cast<std::size_t>(na));
    std::vector<std::vector<Eigen::Triplet<Scalar>>> triplets(static_cast<std::size_t>(na));

    for (Index a = 0; a < na; ++a) {
        costs[static_cast<std::size_t>(a)].resize(nv);
        for (Index v = 0; v < nv; ++v) {
            const Belief z = grid.vertices().row(v).transpose();
            costs[static_cast<std::size_t>(a)](v) = lift_cost(model, z, a);
            if (model.discount == 0.0) continue;
            const JointTable joint = joint_update(model, z, a);
            for (Index y = 0; y < ny; ++y) {
                const Scalar mass = joint.table.col(y).sum();
                if (mass <= 0.0) continue;
                const Belief next = joint.table.col(y) / mass;
                const auto interp = grid.locate(next);
                for (std::size_t k = 0; k < interp.indices.size(); ++k) {
                    const Scalar w = mass * interp.weights[k];
                    if (w > 0.0)
                        triplets[static_cast<std::size_t>(a)].emplace_back(v, interp.indices[k], w);
                }
            }
        }
        successors[static_cast<std::size_t>(a)].resize(nv, nv);
        successors[static_cast<std::size_t>(a)].setFromTriplets(
            triplets[static_cast<std::size_t>(a)].begin(),
            triplets[static_cast<std::size_t>(a)].end());
    }

    Vector values = Vector::Zero(nv);
    Vector next(nv);
    auto& trace = out.trace;
    const int threads = std::max(1, options.threads);

    for (int iter = 0; iter < options.max_iters; ++iter) {
        parallel_chunks(nv, threads, [&](Index begin, Index end) {
            const Index len = end - begin;
            Vector best = Vector::Constant(len, kInfinity);
            for (Index a = 0; a < na; ++a) {
                Vector cand = costs[static_cast<std::size_t>(a)].segment(begin, len);
                if (model.discount != 0.0) {
                    const Vector expect =
                        successors[static_cast<std::size_t>(a)].middleRows(begin, len) * values;
                    for (Index i = 0; i < len; ++i)
                        if (!std::isinf(cand(i)))
                            cand(i) += std::isinf(expect(i)) ? kInfinity
                                                             : model.discount * expect(i);
                }
                best = best.cwiseMin(cand);
            }
            for (Index i = 0; i < len; ++i)
                next(begin + i) = best(i) > options.overflow_guard ? kInfinity : best(i);
        });

        Scalar delta = 0.0;
        for (Index v = 0; v < nv; ++v) {
            const bool old_inf = std::isinf(values(v)), new_inf = std::isinf(next(v));
            if (old_inf && new_inf) continue;
            delta = std::max(delta, old_inf != new_inf ? kInfinity : std::abs(next(v) - values(v)));
        }
        values.swap(next);
        trace.deltas.push_back(delta);
        trace.iterations = iter + 1;
        if (delta <= options.epsilon) {
            trace.converged = true;
            break;
        }
    }

    out.values.values = std::move(values);
    return out;
}

}  // namespace comdp
