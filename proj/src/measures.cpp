#include "comdp/measures.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace comdp {

MetricSupport MetricSupport::container(std::vector<Scalar> cut_points) {
    for (std::size_t i = 1; i < cut_points.size(); ++i) {
        if (!(cut_points[i] > cut_points[i - 1]))
            throw std::invalid_argument("container metric: cut points must be strictly increasing");
    }
    return {MetricKind::Container, std::move(cut_points)};
}

int MetricSupport::container_index(Scalar x) const {
    auto it = std::upper_bound(cuts.begin(), cuts.end(), x);
    return static_cast<int>(it - cuts.begin());
}

Scalar MetricSupport::distance(const Eigen::Ref<const Vector>& a,
                               const Eigen::Ref<const Vector>& b) const {
    if (a.size() != b.size())
        throw std::invalid_argument("metric distance: dimension mismatch");
    switch (kind) {
        case MetricKind::Euclidean1D:
            if (a.size() != 1) throw std::invalid_argument("euclidean-1d expects scalar points");
            return std::abs(a(0) - b(0));
        case MetricKind::EuclideanND:
            return (a - b).norm();
        case MetricKind::Container: {
            if (a.size() != 1) throw std::invalid_argument("container metric expects scalar points");
            const Scalar base = std::abs(a(0) - b(0));
            return container_index(a(0)) == container_index(b(0)) ? base : base + 1.0;
        }
    }
    throw std::logic_error("unreachable");
}

bool MetricSupport::compatible_with(const MetricSupport& other) const {
    return kind == other.kind && cuts == other.cuts;
}

namespace {

// Coalesces rows whose metric distance is below tol. Returns representative
// groups in first-occurrence order. Candidates are narrowed by the first
// coordinate, which lower-bounds every metric used here.
struct MergedAtoms {
    Matrix atoms;
    Vector weights;
};

MergedAtoms merge_atoms(const MetricSupport& support, const Matrix& atoms, const Vector& weights,
                        Scalar tol) {
    const Index n = atoms.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index i, Index j) {
        return atoms(i, 0) < atoms(j, 0);
    });

    std::vector<Index> group_of(static_cast<std::size_t>(n), -1);
    std::vector<Index> reps;  // original indices of group representatives
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Index i = order[k];
        if (group_of[static_cast<std::size_t>(i)] >= 0) continue;
        Index rep_pos = static_cast<Index>(reps.size());
        reps.push_back(i);
        group_of[static_cast<std::size_t>(i)] = rep_pos;
        for (std::size_t l = k + 1; l < order.size(); ++l) {
            const Index j = order[l];
            if (atoms(j, 0) - atoms(i, 0) > tol) break;
            if (group_of[static_cast<std::size_t>(j)] >= 0) continue;
            if (support.distance(atoms.row(i).transpose(), atoms.row(j).transpose()) < tol)
                group_of[static_cast<std::size_t>(j)] = rep_pos;
        }
    }

    // Re-rank representatives by first occurrence in the input.
    std::vector<Index> rep_rank(reps.size());
    std::iota(rep_rank.begin(), rep_rank.end(), Index{0});
    std::sort(rep_rank.begin(), rep_rank.end(),
              [&](Index a, Index b) { return reps[static_cast<std::size_t>(a)] < reps[static_cast<std::size_t>(b)]; });
    std::vector<Index> new_pos(reps.size());
    for (std::size_t r = 0; r < rep_rank.size(); ++r)
        new_pos[static_cast<std::size_t>(rep_rank[r])] = static_cast<Index>(r);

    MergedAtoms out;
    out.atoms.resize(static_cast<Index>(reps.size()), atoms.cols());
    out.weights = Vector::Zero(static_cast<Index>(reps.size()));
    for (std::size_t r = 0; r < reps.size(); ++r)
        out.atoms.row(new_pos[r]) = atoms.row(reps[r]);
    for (Index i = 0; i < n; ++i)
        out.weights(new_pos[static_cast<std::size_t>(group_of[static_cast<std::size_t>(i)])]) += weights(i);
    return out;
}

}  // namespace

FiniteMeasure::FiniteMeasure(MetricSupport support, Matrix atoms, Vector weights)
    : support_(std::move(support)) {
    if (atoms.rows() != weights.size())
        throw std::invalid_argument("FiniteMeasure: atom/weight count mismatch");
    if (atoms.rows() == 0)
        throw std::invalid_argument("FiniteMeasure: empty support");
    if (!atoms.allFinite())
        throw std::invalid_argument("FiniteMeasure: atoms must have finite coordinates");
    for (Index i = 0; i < weights.size(); ++i) {
        if (!(weights(i) >= 0.0))
            throw std::invalid_argument("FiniteMeasure: weights must be nonnegative");
    }
    if (std::abs(weights.sum() - 1.0) > kMassTol)
        throw std::invalid_argument("FiniteMeasure: weights must sum to 1");

    MergedAtoms merged = merge_atoms(support_, atoms, weights, kMergeTol);
    // Drop exact-zero weights.
    std::vector<Index> keep;
    for (Index i = 0; i < merged.weights.size(); ++i)
        if (merged.weights(i) != 0.0) keep.push_back(i);
    atoms_.resize(static_cast<Index>(keep.size()), atoms.cols());
    weights_.resize(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        atoms_.row(static_cast<Index>(k)) = merged.atoms.row(keep[k]);
        weights_(static_cast<Index>(k)) = merged.weights(keep[k]);
    }
}

FiniteMeasure FiniteMeasure::point_mass(MetricSupport support, Vector atom) {
    Matrix atoms(1, atom.size());
    atoms.row(0) = atom.transpose();
    return FiniteMeasure(std::move(support), std::move(atoms), Vector::Ones(1));
}

namespace {

void require_compatible(const FiniteMeasure& p, const FiniteMeasure& q) {
    if (p.dim() != q.dim())
        throw std::invalid_argument("measures: atom dimension mismatch");
    if (!p.support().compatible_with(q.support()))
        throw std::invalid_argument("measures: metric support mismatch");
}

}  // namespace

Scalar tv_distance(const FiniteMeasure& p, const FiniteMeasure& q) {
    require_compatible(p, q);
    // Pair atoms across the two measures by sorting on the first coordinate;
    // within-measure atoms are already distinct.
    struct Tagged {
        Index idx;
        bool from_p;
    };
    const Index n = p.size(), m = q.size();
    std::vector<Tagged> all;
    all.reserve(static_cast<std::size_t>(n + m));
    for (Index i = 0; i < n; ++i) all.push_back({i, true});
    for (Index j = 0; j < m; ++j) all.push_back({j, false});
    auto coord0 = [&](const Tagged& t) {
        return t.from_p ? p.atoms()(t.idx, 0) : q.atoms()(t.idx, 0);
    };
    std::sort(all.begin(), all.end(),
              [&](const Tagged& a, const Tagged& b) { return coord0(a) < coord0(b); });

    const Scalar tol = FiniteMeasure::kMergeTol;
    std::vector<bool> consumed(all.size(), false);
    Scalar total = 0.0;
    for (std::size_t k = 0; k < all.size(); ++k) {
        if (consumed[k]) continue;
        consumed[k] = true;
        const Tagged& a = all[k];
        Eigen::Ref<const Vector> pa = a.from_p ? p.atom(a.idx) : q.atom(a.idx);
        Scalar pw = a.from_p ? p.weights()(a.idx) : 0.0;
        Scalar qw = a.from_p ? 0.0 : q.weights()(a.idx);
        for (std::size_t l = k + 1; l < all.size(); ++l) {
            if (consumed[l]) continue;
            const Tagged& b = all[l];
            if (coord0(b) - coord0(a) > tol) break;
            if (b.from_p == a.from_p) continue;
            Eigen::Ref<const Vector> pb = b.from_p ? p.atom(b.idx) : q.atom(b.idx);
            if (p.support().distance(pa, pb) < tol) {
                consumed[l] = true;
                if (b.from_p)
                    pw += p.weights()(b.idx);
                else
                    qw += q.weights()(b.idx);
                break;  // each measure holds at most one atom per location
            }
        }
        total += std::abs(pw - qw);
    }
    return 0.5 * total;
}

SetwiseGap setwise_gap(const FiniteMeasure& p, const FiniteMeasure& q,
                       const std::vector<SetPredicate>& sets) {
    require_compatible(p, q);
    if (sets.empty()) return {0.0, true};
    Scalar gap = 0.0;
    for (const auto& pred : sets) {
        Scalar pm = 0.0, qm = 0.0;
        for (Index i = 0; i < p.size(); ++i)
            if (pred(p.atom(i))) pm += p.weights()(i);
        for (Index j = 0; j < q.size(); ++j)
            if (pred(q.atom(j))) qm += q.weights()(j);
        gap = std::max(gap, std::abs(pm - qm));
    }
    return {gap, false};
}

namespace {

// Min-cost flow on the bipartite transportation graph by successive shortest
// augmenting paths with node potentials (Dijkstra on reduced costs). Supplies
// and demands are real-valued; each augmentation saturates a supply, a
// demand, or empties a backward arc. Implicit super-source S (potential 0,
// zero-cost arcs to remaining supplies) and super-sink T behind the demands;
// potential updates are capped at the sink distance, the standard way to keep
// reduced costs nonnegative when parts of the graph are unreachable.
Scalar transport_cost(const Matrix& cost, Vector supply, Vector demand) {
    const Index n = supply.size(), m = demand.size();
    Matrix flow = Matrix::Zero(n, m);
    Vector pot_left = Vector::Zero(n), pot_right = Vector::Zero(m);
    Scalar pot_sink = 0.0;
    const Scalar eps = 1e-15;
    const int max_rounds = static_cast<int>(4 * (n + 1) * (m + 1)) + 64;

    Scalar remaining = supply.sum();
    for (int round = 0; remaining > eps; ++round) {
        if (round > max_rounds)
            throw std::runtime_error("wasserstein1: transportation solve did not terminate");

        // Dijkstra over left (0..n-1) and right (n..n+m-1) nodes.
        const Index vtotal = n + m;
        Vector dist = Vector::Constant(vtotal, kInfinity);
        std::vector<Index> parent(static_cast<std::size_t>(vtotal), -1);
        std::vector<char> done(static_cast<std::size_t>(vtotal), 0);
        for (Index i = 0; i < n; ++i)
            if (supply(i) > eps) dist(i) = std::max(0.0, -pot_left(i));  // rc of S -> i
        while (true) {
            Index u = -1;
            Scalar best = kInfinity;
            for (Index v = 0; v < vtotal; ++v)
                if (!done[static_cast<std::size_t>(v)] && dist(v) < best) {
                    best = dist(v);
                    u = v;
                }
            if (u < 0) break;
            done[static_cast<std::size_t>(u)] = 1;
            if (u < n) {
                for (Index j = 0; j < m; ++j) {
                    const Scalar rc = std::max(0.0, cost(u, j) + pot_left(u) - pot_right(j));
                    if (dist(u) + rc < dist(n + j)) {
                        dist(n + j) = dist(u) + rc;
                        parent[static_cast<std::size_t>(n + j)] = u;
                    }
                }
            } else {
                const Index j = u - n;
                for (Index i = 0; i < n; ++i) {
                    if (flow(i, j) <= eps) continue;
                    const Scalar rc = std::max(0.0, -cost(i, j) + pot_right(j) - pot_left(i));
                    if (dist(u) + rc < dist(i)) {
                        dist(i) = dist(u) + rc;
                        parent[static_cast<std::size_t>(i)] = u;
                    }
                }
            }
        }

        // Cheapest unmet demand, measured through to the sink.
        Index target = -1;
        Scalar sink_dist = kInfinity;
        for (Index j = 0; j < m; ++j) {
            if (demand(j) <= eps || !std::isfinite(dist(n + j))) continue;
            const Scalar through = dist(n + j) + std::max(0.0, pot_right(j) - pot_sink);
            if (through < sink_dist) {
                sink_dist = through;
                target = n + j;
            }
        }
        if (target < 0)
            throw std::runtime_error("wasserstein1: transportation solve failed to route mass");

        // Bottleneck along the path.
        Scalar push = demand(target - n);
        Index head = target;
        for (Index v = target; parent[static_cast<std::size_t>(v)] >= 0;
             v = parent[static_cast<std::size_t>(v)]) {
            const Index u = parent[static_cast<std::size_t>(v)];
            if (u >= n) push = std::min(push, flow(v, u - n));  // backward arc right -> left
            head = u;
        }
        push = std::min(push, supply(head));

        // Apply augmentation.
        for (Index v = target; parent[static_cast<std::size_t>(v)] >= 0;
             v = parent[static_cast<std::size_t>(v)]) {
            const Index u = parent[static_cast<std::size_t>(v)];
            if (u < n)
                flow(u, v - n) += push;  // forward arc left -> right
            else
                flow(v, u - n) -= push;  // backward arc
        }
        supply(head) -= push;
        demand(target - n) -= push;
        remaining -= push;

        // Capped potential update keeps all residual reduced costs >= 0.
        for (Index v = 0; v < vtotal; ++v) {
            const Scalar d = std::isfinite(dist(v)) ? std::min(dist(v), sink_dist) : sink_dist;
            if (v < n)
                pot_left(v) += d;
            else
                pot_right(v - n) += d;
        }
        pot_sink += sink_dist;
    }
    Scalar total = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) total += flow(i, j) * cost(i, j);
    return total;
}

}  // namespace

Scalar wasserstein1(const FiniteMeasure& p, const FiniteMeasure& q) {
    require_compatible(p, q);
    Matrix cost(p.size(), q.size());
    for (Index i = 0; i < p.size(); ++i)
        for (Index j = 0; j < q.size(); ++j) {
            cost(i, j) = p.support().distance(p.atom(i), q.atom(j));
            if (!std::isfinite(cost(i, j)))
                throw std::invalid_argument("wasserstein1: unbounded metric value");
        }
    return transport_cost(cost, p.weights(), q.weights());
}

}  // namespace comdp
