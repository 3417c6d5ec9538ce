#include "comdp/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace comdp {

namespace {

std::string format_value(Scalar v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

Matrix identity_transition(Index nx) { return Matrix::Identity(nx, nx); }

Scalar normal_cdf(Scalar t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

// Mass of N(mean, std^2) in [lo, hi].
Scalar normal_cell_mass(Scalar mean, Scalar std_dev, Scalar lo, Scalar hi) {
    return normal_cdf((hi - mean) / std_dev) - normal_cdf((lo - mean) / std_dev);
}

}  // namespace

Scalar square_wave_density(int j, Scalar y) {
    const Scalar scaled = y * static_cast<Scalar>(1 << j);
    int section = static_cast<int>(std::floor(scaled));
    section = std::min(std::max(section, 0), (1 << j) - 1);
    return section % 2 == 0 ? 0.0 : 2.0;
}

DiscretePomdp make_square_wave(int n, int cells) {
    if (n < 1) throw std::invalid_argument("make_square_wave: n must be >= 1");
    if (!is_power_of_two(cells) || cells < (1 << n))
        throw std::invalid_argument(
            "make_square_wave: cells must be a power of two >= 2^n (exact cell integration)");

    DiscretePomdp m;
    m.state_labels = {"1", "2"};
    m.state_coords = Matrix(2, 1);
    m.state_coords << 1.0, 2.0;
    m.state_metric = MetricSupport::euclidean_1d();

    m.obs_labels.reserve(static_cast<std::size_t>(cells));
    m.obs_coords.resize(cells, 1);
    for (int i = 0; i < cells; ++i) {
        m.obs_labels.push_back("c" + std::to_string(i));
        m.obs_coords(i, 0) = (i + 0.5) / cells;
    }
    m.obs_metric = MetricSupport::euclidean_1d();

    m.action_labels.push_back("0");
    for (int j = 1; j <= n; ++j) m.action_labels.push_back("1/" + std::to_string(j));
    m.action_coords.resize(n + 1, 1);
    m.action_coords(0, 0) = 0.0;
    for (int j = 1; j <= n; ++j) m.action_coords(j, 0) = 1.0 / j;

    const Scalar uniform = 1.0 / cells;
    for (int a = 0; a <= n; ++a) {
        m.transition.push_back(identity_transition(2));
        Matrix q(2, cells);
        for (int i = 0; i < cells; ++i) {
            q(0, i) = uniform;
            q(1, i) = a == 0 ? uniform : square_wave_density(a, m.obs_coords(i, 0)) * uniform;
        }
        m.obs_kernel.push_back(q);
    }
    m.init_obs_kernel = Matrix::Constant(2, cells, uniform);

    m.prior = Vector::Constant(2, 0.5);
    m.cost = Matrix::Zero(2, n + 1);
    m.cost.row(1).setOnes();
    m.discount = 0.9;
    m.cost_mode = DiscretePomdp::CostMode::P;
    return m;
}

namespace {

DiscretePomdp make_abs_square_impl(const std::vector<std::string>& labels,
                                   const std::vector<Scalar>& grid) {
    DiscretePomdp m;
    m.state_labels = {"1", "2"};
    m.state_coords = Matrix(2, 1);
    m.state_coords << 1.0, 2.0;
    m.state_metric = MetricSupport::euclidean_1d();
    m.obs_labels = {"1", "2"};
    m.obs_coords = m.state_coords;
    m.obs_metric = MetricSupport::euclidean_1d();

    m.action_labels = labels;
    const Index na = static_cast<Index>(grid.size());
    m.action_coords.resize(na, 1);
    for (Index a = 0; a < na; ++a) {
        const Scalar v = grid[static_cast<std::size_t>(a)];
        if (!(v >= -1.0 && v <= 1.0))
            throw std::invalid_argument("make_abs_square: actions must lie in [-1, 1]");
        m.action_coords(a, 0) = v;
    }

    for (Index a = 0; a < na; ++a) {
        const Scalar v = m.action_coords(a, 0);
        m.transition.push_back(identity_transition(2));
        const Scalar q11 = v < 0.0 ? std::abs(v) : v * v;
        const Scalar q12 = v < 0.0 ? v * v : std::abs(v);
        Matrix q(2, 2);
        q << q11, 1.0 - q11, q12, 1.0 - q12;
        m.obs_kernel.push_back(q);
    }
    m.init_obs_kernel = Matrix::Constant(2, 2, 0.5);

    m.prior = Vector::Constant(2, 0.5);
    m.cost = Matrix::Zero(2, na);
    m.cost.row(1).setOnes();
    m.discount = 0.9;
    m.cost_mode = DiscretePomdp::CostMode::P;
    return m;
}

}  // namespace

DiscretePomdp make_abs_square(const std::vector<Scalar>& action_grid) {
    if (action_grid.empty()) throw std::invalid_argument("make_abs_square: empty action grid");
    std::vector<std::string> labels;
    labels.reserve(action_grid.size());
    for (const Scalar v : action_grid) labels.push_back(format_value(v));
    return make_abs_square_impl(labels, action_grid);
}

DiscretePomdp make_abs_square_k(int k_max) {
    if (k_max < 1) throw std::invalid_argument("make_abs_square_k: k_max must be >= 1");
    std::vector<std::string> labels = {"0"};
    std::vector<Scalar> grid = {0.0};
    for (int k = 1; k <= k_max; ++k) {
        labels.push_back("1/" + std::to_string(k));
        grid.push_back(1.0 / k);
        labels.push_back("-1/" + std::to_string(k));
        grid.push_back(-1.0 / k);
    }
    return make_abs_square_impl(labels, grid);
}

DiscretePomdp make_sine_lattice(int m_max, int k_truncation) {
    if (m_max < 1) throw std::invalid_argument("make_sine_lattice: m_max must be >= 1");
    if (k_truncation < 1)
        throw std::invalid_argument("make_sine_lattice: k_truncation must be >= 1");

    DiscretePomdp m;
    m.state_labels = {"1", "2"};
    m.state_coords = Matrix(2, 1);
    m.state_coords << 1.0, 2.0;
    m.state_metric = MetricSupport::euclidean_1d();

    const int n_max = 2 * m_max * (k_truncation + 1);
    m.obs_labels.push_back("0");
    for (int n = 1; n <= n_max; ++n) m.obs_labels.push_back("1/" + std::to_string(n));
    m.obs_labels.push_back("sink");
    const Index ny = static_cast<Index>(m.obs_labels.size());
    m.obs_coords.resize(ny, 1);
    m.obs_coords(0, 0) = 0.0;
    for (int n = 1; n <= n_max; ++n) m.obs_coords(n, 0) = 1.0 / n;
    m.obs_coords(ny - 1, 0) = -1.0;  // sink sits away from the lattice
    m.obs_metric = MetricSupport::euclidean_1d();

    m.action_labels.push_back("0");
    for (int mm = 1; mm <= m_max; ++mm) m.action_labels.push_back("1/" + std::to_string(mm));
    const Index na = static_cast<Index>(m.action_labels.size());
    m.action_coords.resize(na, 1);
    m.action_coords(0, 0) = 0.0;
    for (int mm = 1; mm <= m_max; ++mm) m.action_coords(mm, 0) = 1.0 / mm;

    const Scalar sink_mass = std::ldexp(1.0, -(k_truncation + 1));  // 2^-(K+1)
    for (Index a = 0; a < na; ++a) {
        m.transition.push_back(identity_transition(2));
        Matrix q = Matrix::Zero(2, ny);
        if (a == 0) {
            q(0, 0) = 1.0;
            q(1, 0) = 1.0;
        } else {
            const int mm = static_cast<int>(a);
            for (int n = 1; n <= 2 * mm * (k_truncation + 1); ++n) {
                const int k = (n - 1) / (2 * mm);
                const Scalar coef = 1.0 / (std::ldexp(1.0, k + 1) * mm);  // a_{m, 2mk+l}
                const Scalar s = std::sin(M_PI * n / (2.0 * mm));
                q(0, n) = coef * s * s;
                q(1, n) = coef * (1.0 - s * s);
            }
            q(0, ny - 1) = sink_mass;
            q(1, ny - 1) = sink_mass;
        }
        m.obs_kernel.push_back(q);
    }
    m.init_obs_kernel = Matrix::Zero(2, ny);
    m.init_obs_kernel.col(0).setOnes();  // uninformative initial channel

    m.prior = Vector::Constant(2, 0.5);
    m.cost = Matrix::Zero(2, na);
    m.cost.row(1).setOnes();
    m.discount = 0.9;
    m.cost_mode = DiscretePomdp::CostMode::P;
    m.metadata["sink_observation"] = "sink";
    m.metadata["sink_mass"] = format_value(sink_mass);
    return m;
}

DiscretePomdp make_mdmii_square_wave(int n, int cells) {
    if (n < 1) throw std::invalid_argument("make_mdmii_square_wave: n must be >= 1");
    if (!is_power_of_two(cells) || cells < (1 << n))
        throw std::invalid_argument("make_mdmii_square_wave: cells must be a power of two >= 2^n");

    DiscretePomdp m;
    const Index nx = 2 * cells;
    m.state_coords.resize(nx, 2);
    for (int i = 0; i < cells; ++i) {
        for (int w = 1; w <= 2; ++w) {
            const Index s = 2 * i + (w - 1);
            m.state_labels.push_back("c" + std::to_string(i) + "w" + std::to_string(w));
            m.state_coords(s, 0) = (i + 0.5) / cells;
            m.state_coords(s, 1) = static_cast<Scalar>(w);
        }
    }
    m.state_metric = MetricSupport::euclidean_nd();

    m.obs_coords.resize(cells, 1);
    for (int i = 0; i < cells; ++i) {
        m.obs_labels.push_back("c" + std::to_string(i));
        m.obs_coords(i, 0) = (i + 0.5) / cells;
    }
    m.obs_metric = MetricSupport::euclidean_1d();

    m.action_labels.push_back("0");
    for (int j = 1; j <= n; ++j) m.action_labels.push_back("1/" + std::to_string(j));
    const Index na = static_cast<Index>(m.action_labels.size());
    m.action_coords.resize(na, 1);
    m.action_coords(0, 0) = 0.0;
    for (int j = 1; j <= n; ++j) m.action_coords(j, 0) = 1.0 / j;

    const Scalar uniform = 1.0 / cells;
    for (Index a = 0; a < na; ++a) {
        Matrix p = Matrix::Zero(nx, nx);
        for (int i = 0; i < cells; ++i) {
            for (int w = 1; w <= 2; ++w) {
                const Index s = 2 * i + (w - 1);
                for (int in = 0; in < cells; ++in) {
                    const Index sn = 2 * in + (w - 1);  // the unobserved component is frozen
                    const Scalar mass =
                        (w == 2 && a > 0)
                            ? square_wave_density(static_cast<int>(a), m.obs_coords(in, 0)) * uniform
                            : uniform;
                    p(s, sn) = mass;
                }
            }
        }
        m.transition.push_back(p);

        Matrix q = Matrix::Zero(nx, cells);
        for (int i = 0; i < cells; ++i) {
            q(2 * i, i) = 1.0;
            q(2 * i + 1, i) = 1.0;
        }
        m.obs_kernel.push_back(q);
    }
    m.init_obs_kernel = m.obs_kernel.front();

    m.prior = Vector::Constant(nx, 0.5 / cells);
    m.cost = Matrix::Zero(nx, na);
    for (int i = 0; i < cells; ++i) m.cost.row(2 * i + 1).setOnes();  // w = 2
    m.discount = 0.9;
    m.cost_mode = DiscretePomdp::CostMode::P;
    return m;
}

DiscretePomdp make_inventory(const InventorySpec& spec) {
    const Index nl = static_cast<Index>(spec.levels.size());
    if (nl < 2) throw std::invalid_argument("inventory: at least two levels required");
    for (Index i = 1; i < nl; ++i)
        if (!(spec.levels[static_cast<std::size_t>(i)] > spec.levels[static_cast<std::size_t>(i - 1)]))
            throw std::invalid_argument("inventory: levels must be strictly increasing");
    const Scalar h = spec.levels[1] - spec.levels[0];
    for (Index i = 1; i < nl; ++i) {
        const Scalar gap = spec.levels[static_cast<std::size_t>(i)] -
                           spec.levels[static_cast<std::size_t>(i - 1)];
        if (std::abs(gap - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw std::invalid_argument("inventory: levels must be a uniform lattice");
    }
    const Scalar level0 = spec.levels.front();
    auto level_index = [&](Scalar v) {
        const Scalar raw = (v - level0) / h;
        const Index idx = static_cast<Index>(std::llround(raw));
        if (idx < 0 || idx >= nl || std::abs(raw - static_cast<Scalar>(idx)) > 1e-6)
            return Index{-1};
        return idx;
    };
    if (level_index(0.0) < 0) throw std::invalid_argument("inventory: levels must include 0");

    for (std::size_t i = 1; i < spec.container_cuts.size(); ++i)
        if (!(spec.container_cuts[i] > spec.container_cuts[i - 1]))
            throw std::invalid_argument("inventory: container cuts must be strictly increasing");
    if (spec.transparent.size() != spec.container_cuts.size() + 1)
        throw std::invalid_argument("inventory: one transparency flag per container required");

    if (spec.demand_atoms.size() != spec.demand_weights.size() || spec.demand_atoms.empty())
        throw std::invalid_argument("inventory: demand atoms/weights mismatch");
    Scalar wsum = 0.0;
    for (const Scalar w : spec.demand_weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("inventory: demand weights must be >= 0");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-10)
        throw std::invalid_argument("inventory: demand weights must sum to 1");
    for (const Scalar d : spec.demand_atoms)
        if (std::abs(d / h - std::llround(d / h)) > 1e-6)
            throw std::invalid_argument("inventory: demand atoms must sit on the level lattice");
    for (const Scalar q : spec.order_sizes) {
        if (!(q >= 0.0)) throw std::invalid_argument("inventory: order sizes must be >= 0");
        if (std::abs(q / h - std::llround(q / h)) > 1e-6)
            throw std::invalid_argument("inventory: order sizes must sit on the level lattice");
    }
    if (spec.order_sizes.empty()) throw std::invalid_argument("inventory: no order sizes");
    if (spec.holding_cost < 0 || spec.backorder_cost < 0 || spec.fixed_order_cost < 0 ||
        spec.unit_order_cost < 0 || spec.lost_sale_penalty < 0)
        throw std::invalid_argument("inventory: costs must be nonnegative");

    const bool lost_sales = spec.mode == InventorySpec::Mode::LostSales;
    const MetricSupport metric = MetricSupport::container(spec.container_cuts);

    auto dynamics = [&](Scalar x, Scalar q, Scalar d) {
        Scalar next = x + q - d;
        if (lost_sales) next = std::max(next, 0.0);
        return std::min(std::max(next, spec.levels.front()), spec.levels.back());
    };

    // The container reduction needs an atomless law at the boundaries:
    // reject demand atoms that land transitions exactly on a cut.
    for (const Scalar x : spec.levels)
        for (const Scalar q : spec.order_sizes)
            for (const Scalar d : spec.demand_atoms)
                for (const Scalar cut : spec.container_cuts)
                    if (std::abs(dynamics(x, q, d) - cut) < 1e-9)
                        throw std::invalid_argument(
                            "inventory: demand atom lands a transition exactly on container "
                            "boundary " +
                            format_value(cut));

    DiscretePomdp m;
    m.state_coords.resize(nl, 1);
    for (Index i = 0; i < nl; ++i) {
        m.state_labels.push_back("x=" + format_value(spec.levels[static_cast<std::size_t>(i)]));
        m.state_coords(i, 0) = spec.levels[static_cast<std::size_t>(i)];
    }
    m.state_metric = metric;

    // Observations: transparent levels observe themselves; nontransparent
    // containers observe a fixed interior point (midpoint, infinite ends
    // clamped to boundary +- 1).
    const int n_containers = static_cast<int>(spec.transparent.size());
    std::vector<Index> obs_of_state(static_cast<std::size_t>(nl), -1);
    std::vector<Index> container_obs(static_cast<std::size_t>(n_containers), -1);
    auto container_point = [&](int c) {
        const Scalar lo = c == 0 ? -kInfinity : spec.container_cuts[static_cast<std::size_t>(c - 1)];
        const Scalar hi = c == n_containers - 1 ? kInfinity
                                                : spec.container_cuts[static_cast<std::size_t>(c)];
        if (std::isinf(lo) && std::isinf(hi)) return 0.0;
        if (std::isinf(lo)) return hi - 1.0;
        if (std::isinf(hi)) return lo + 1.0;
        return 0.5 * (lo + hi);
    };
    std::vector<Scalar> obs_points;
    for (Index i = 0; i < nl; ++i) {
        const Scalar x = spec.levels[static_cast<std::size_t>(i)];
        const int c = metric.container_index(x);
        if (spec.transparent[static_cast<std::size_t>(c)]) {
            obs_of_state[static_cast<std::size_t>(i)] = static_cast<Index>(obs_points.size());
            m.obs_labels.push_back("y=" + format_value(x));
            obs_points.push_back(x);
        } else {
            if (container_obs[static_cast<std::size_t>(c)] < 0) {
                container_obs[static_cast<std::size_t>(c)] = static_cast<Index>(obs_points.size());
                m.obs_labels.push_back("b" + std::to_string(c + 1));
                obs_points.push_back(container_point(c));
            }
            obs_of_state[static_cast<std::size_t>(i)] = container_obs[static_cast<std::size_t>(c)];
        }
    }
    const Index ny = static_cast<Index>(obs_points.size());
    m.obs_coords.resize(ny, 1);
    for (Index y = 0; y < ny; ++y) m.obs_coords(y, 0) = obs_points[static_cast<std::size_t>(y)];
    m.obs_metric = MetricSupport::euclidean_1d();

    const Index na = static_cast<Index>(spec.order_sizes.size());
    m.action_coords.resize(na, 1);
    for (Index a = 0; a < na; ++a) {
        m.action_labels.push_back("a=" + format_value(spec.order_sizes[static_cast<std::size_t>(a)]));
        m.action_coords(a, 0) = spec.order_sizes[static_cast<std::size_t>(a)];
    }

    Matrix q_obs = Matrix::Zero(nl, ny);
    for (Index i = 0; i < nl; ++i) q_obs(i, obs_of_state[static_cast<std::size_t>(i)]) = 1.0;

    m.cost.resize(nl, na);
    for (Index a = 0; a < na; ++a) {
        const Scalar order = spec.order_sizes[static_cast<std::size_t>(a)];
        Matrix p = Matrix::Zero(nl, nl);
        for (Index i = 0; i < nl; ++i) {
            const Scalar x = spec.levels[static_cast<std::size_t>(i)];
            Scalar expected_lost = 0.0;
            for (std::size_t k = 0; k < spec.demand_atoms.size(); ++k) {
                const Scalar next = dynamics(x, order, spec.demand_atoms[k]);
                const Index j = level_index(next);
                if (j < 0)
                    throw std::invalid_argument("inventory: transition leaves the level lattice");
                p(i, j) += spec.demand_weights[k];
                expected_lost +=
                    spec.demand_weights[k] * std::max(0.0, spec.demand_atoms[k] - x - order);
            }
            const Scalar holding = spec.holding_cost * std::max(x, 0.0) +
                                   spec.backorder_cost * std::max(-x, 0.0);
            const Scalar ordering =
                (order > 0.0 ? spec.fixed_order_cost : 0.0) + spec.unit_order_cost * order;
            const Scalar lost = lost_sales ? spec.lost_sale_penalty * expected_lost : 0.0;
            m.cost(i, a) = holding + ordering + lost;
        }
        m.transition.push_back(p);
        m.obs_kernel.push_back(q_obs);
    }
    m.init_obs_kernel = q_obs;

    if (spec.prior.empty()) {
        m.prior = Vector::Zero(nl);
        m.prior(level_index(0.0)) = 1.0;
    } else {
        if (static_cast<Index>(spec.prior.size()) != nl)
            throw std::invalid_argument("inventory: prior must match the level list");
        m.prior = Eigen::Map<const Vector>(spec.prior.data(), nl);
        if (lost_sales)
            for (Index i = 0; i < nl; ++i)
                if (m.prior(i) > 0.0 && spec.levels[static_cast<std::size_t>(i)] < 0.0)
                    throw std::invalid_argument(
                        "inventory: lost-sales prior must live on nonnegative levels");
    }

    m.discount = spec.discount;
    m.cost_mode = DiscretePomdp::CostMode::P;
    return m;
}

DiscretePomdp make_kalman(const KalmanSpec& spec) {
    if (spec.obs_noise_coef == 0.0)
        throw std::invalid_argument("kalman: observation noise coefficient must be nonzero");
    if (!(spec.process_noise_std > 0.0) || !(spec.prior_std > 0.0))
        throw std::invalid_argument("kalman: noise and prior standard deviations must be positive");
    if (spec.cost_state < 0.0 || !(spec.cost_action > 0.0))
        throw std::invalid_argument("kalman: cost weights require c1 >= 0 and c2 > 0");
    if (spec.state_cells < 2 || spec.obs_cells < 2)
        throw std::invalid_argument("kalman: at least two grid cells per axis");
    if (spec.actions.empty()) throw std::invalid_argument("kalman: empty action grid");
    if (spec.state_range < 6.0 * spec.process_noise_std)
        throw std::invalid_argument("kalman: state grid range must cover 6 noise std deviations");
    if (spec.obs_range < 6.0 * std::abs(spec.obs_noise_coef))
        throw std::invalid_argument("kalman: observation grid range must cover 6 noise std deviations");

    DiscretePomdp m;
    const Index nx = spec.state_cells, ny = spec.obs_cells;
    const Scalar sh = 2.0 * spec.state_range / nx;
    const Scalar oh = 2.0 * spec.obs_range / ny;
    m.state_coords.resize(nx, 1);
    for (Index i = 0; i < nx; ++i) {
        m.state_coords(i, 0) = -spec.state_range + (i + 0.5) * sh;
        m.state_labels.push_back("x=" + format_value(m.state_coords(i, 0)));
    }
    m.obs_coords.resize(ny, 1);
    for (Index i = 0; i < ny; ++i) {
        m.obs_coords(i, 0) = -spec.obs_range + (i + 0.5) * oh;
        m.obs_labels.push_back("y=" + format_value(m.obs_coords(i, 0)));
    }
    m.state_metric = MetricSupport::euclidean_1d();
    m.obs_metric = MetricSupport::euclidean_1d();

    const Index na = static_cast<Index>(spec.actions.size());
    m.action_coords.resize(na, 1);
    for (Index a = 0; a < na; ++a) {
        m.action_coords(a, 0) = spec.actions[static_cast<std::size_t>(a)];
        m.action_labels.push_back("a=" + format_value(m.action_coords(a, 0)));
    }

    auto state_row = [&](Scalar mean) {
        Vector row(nx);
        for (Index j = 0; j < nx; ++j) {
            const Scalar lo = -spec.state_range + j * sh;
            row(j) = normal_cell_mass(mean, spec.process_noise_std, lo, lo + sh);
        }
        const Scalar s = row.sum();
        if (s <= 0.0) throw std::invalid_argument("kalman: transition mean outside the state grid");
        return Vector(row / s);
    };
    auto obs_row = [&](Scalar next_state) {
        Vector row(ny);
        const Scalar mean = spec.obs_coef * next_state;
        for (Index j = 0; j < ny; ++j) {
            const Scalar lo = -spec.obs_range + j * oh;
            row(j) = normal_cell_mass(mean, std::abs(spec.obs_noise_coef), lo, lo + oh);
        }
        const Scalar s = row.sum();
        if (s <= 0.0) throw std::invalid_argument("kalman: observation mean outside the grid");
        return Vector(row / s);
    };

    Matrix q(nx, ny);
    for (Index i = 0; i < nx; ++i) q.row(i) = obs_row(m.state_coords(i, 0)).transpose();
    m.cost.resize(nx, na);
    for (Index a = 0; a < na; ++a) {
        Matrix p(nx, nx);
        for (Index i = 0; i < nx; ++i) {
            const Scalar mean = spec.state_coef * m.state_coords(i, 0) +
                                spec.action_coef * m.action_coords(a, 0);
            p.row(i) = state_row(mean).transpose();
            m.cost(i, a) = spec.cost_state * m.state_coords(i, 0) * m.state_coords(i, 0) +
                           spec.cost_action * m.action_coords(a, 0) * m.action_coords(a, 0);
        }
        m.transition.push_back(p);
        m.obs_kernel.push_back(q);
    }
    m.init_obs_kernel = q;

    Vector prior(nx);
    for (Index i = 0; i < nx; ++i) {
        const Scalar lo = -spec.state_range + i * sh;
        prior(i) = normal_cell_mass(spec.prior_mean, spec.prior_std, lo, lo + sh);
    }
    m.prior = prior / prior.sum();

    m.discount = spec.discount;
    m.cost_mode = DiscretePomdp::CostMode::P;
    return m;
}

std::vector<KalmanPosterior> kalman_exact(const KalmanSpec& spec, Scalar prior_mean,
                                          Scalar prior_var,
                                          const std::vector<Scalar>& actions,
                                          const std::vector<Scalar>& observations) {
    if (observations.size() != actions.size() + 1)
        throw std::invalid_argument("kalman_exact: need one observation per step plus the initial one");
    if (spec.obs_noise_coef == 0.0)
        throw std::invalid_argument("kalman_exact: observation noise coefficient must be nonzero");

    const Scalar hh = spec.obs_coef;
    const Scalar r = spec.obs_noise_coef * spec.obs_noise_coef;
    auto update = [&](Scalar mean, Scalar var, Scalar y) {
        const Scalar s = hh * hh * var + r;
        const Scalar gain = var * hh / s;
        return KalmanPosterior{mean + gain * (y - hh * mean), (1.0 - gain * hh) * var};
    };

    std::vector<KalmanPosterior> out;
    KalmanPosterior post = update(prior_mean, prior_var, observations[0]);
    out.push_back(post);
    for (std::size_t t = 0; t < actions.size(); ++t) {
        const Scalar pred_mean = spec.state_coef * post.mean + spec.action_coef * actions[t];
        const Scalar pred_var = spec.state_coef * spec.state_coef * post.variance +
                                spec.process_noise_std * spec.process_noise_std;
        post = update(pred_mean, pred_var, observations[t + 1]);
        out.push_back(post);
    }
    return out;
}

namespace {

using nlohmann::json;

InventorySpec inventory_spec_from_json(const json& p) {
    InventorySpec spec;
    spec.levels = p.at("levels").get<std::vector<Scalar>>();
    spec.container_cuts = p.at("container_cuts").get<std::vector<Scalar>>();
    spec.transparent = p.at("transparent").get<std::vector<bool>>();
    spec.demand_atoms = p.at("demand_atoms").get<std::vector<Scalar>>();
    spec.demand_weights = p.at("demand_weights").get<std::vector<Scalar>>();
    spec.order_sizes = p.at("order_sizes").get<std::vector<Scalar>>();
    if (p.contains("prior")) spec.prior = p.at("prior").get<std::vector<Scalar>>();
    spec.holding_cost = p.value("holding_cost", spec.holding_cost);
    spec.backorder_cost = p.value("backorder_cost", spec.backorder_cost);
    spec.fixed_order_cost = p.value("fixed_order_cost", spec.fixed_order_cost);
    spec.unit_order_cost = p.value("unit_order_cost", spec.unit_order_cost);
    spec.lost_sale_penalty = p.value("lost_sale_penalty", spec.lost_sale_penalty);
    const std::string mode = p.value("mode", std::string("backorders"));
    if (mode == "backorders")
        spec.mode = InventorySpec::Mode::Backorders;
    else if (mode == "lost-sales")
        spec.mode = InventorySpec::Mode::LostSales;
    else
        throw std::invalid_argument("inventory: mode must be \"backorders\" or \"lost-sales\"");
    spec.discount = p.value("discount", spec.discount);
    return spec;
}

KalmanSpec kalman_spec_from_json(const json& p) {
    KalmanSpec spec;
    spec.state_coef = p.value("state_coef", spec.state_coef);
    spec.action_coef = p.value("action_coef", spec.action_coef);
    spec.obs_coef = p.value("obs_coef", spec.obs_coef);
    spec.obs_noise_coef = p.value("obs_noise_coef", spec.obs_noise_coef);
    spec.process_noise_std = p.value("process_noise_std", spec.process_noise_std);
    spec.prior_mean = p.value("prior_mean", spec.prior_mean);
    spec.prior_std = p.value("prior_std", spec.prior_std);
    spec.cost_state = p.value("cost_state", spec.cost_state);
    spec.cost_action = p.value("cost_action", spec.cost_action);
    if (p.contains("actions")) spec.actions = p.at("actions").get<std::vector<Scalar>>();
    spec.state_cells = p.value("state_cells", spec.state_cells);
    spec.state_range = p.value("state_range", spec.state_range);
    spec.obs_cells = p.value("obs_cells", spec.obs_cells);
    spec.obs_range = p.value("obs_range", spec.obs_range);
    spec.discount = p.value("discount", spec.discount);
    return spec;
}

}  // namespace

const std::vector<ModelBuilder>& model_builders() {
    static const std::vector<ModelBuilder> builders = {
        {"square-wave",
         "two hidden states, dyadic observation grid, square-wave density under action 1/j",
         {{"n", "density index; actions are 0 and 1/1..1/n"},
          {"cells", "observation cells; power of two >= 2^n"}},
         [](const json& p) {
             return make_square_wave(p.at("n").get<int>(), p.at("cells").get<int>());
         }},
        {"abs-square",
         "two states, |a| vs a^2 observation branches switching at a = 0",
         {{"k_max", "action grid {0} union {+-1/k : k <= k_max}"},
          {"actions", "explicit action grid in [-1,1] (overrides k_max)"}},
         [](const json& p) {
             if (p.contains("actions"))
                 return make_abs_square(p.at("actions").get<std::vector<Scalar>>());
             return make_abs_square_k(p.at("k_max").get<int>());
         }},
        {"sine-lattice",
         "sine-squared observation masses on {1/n} with a geometric envelope and a flagged "
         "truncation sink",
         {{"m_max", "actions are 0 and 1/1..1/m_max"},
          {"k_truncation", "geometric blocks kept per action; sink mass 2^-(K+1)"}},
         [](const json& p) {
             return make_sine_lattice(p.at("m_max").get<int>(), p.at("k_truncation").get<int>());
         }},
        {"mdmii-square-wave",
         "observed cell x frozen hidden component; cell redrawn from uniform or square-wave law",
         {{"n", "density index; actions are 0 and 1/1..1/n"},
          {"cells", "observed cells; power of two >= 2^n"}},
         [](const json& p) {
             return make_mdmii_square_wave(p.at("n").get<int>(), p.at("cells").get<int>());
         }},
        {"inventory",
         "periodic-review inventory on a level lattice with transparent/nontransparent containers",
         {{"levels", "uniform level lattice including 0"},
          {"container_cuts", "strictly increasing boundaries"},
          {"transparent", "per-container transparency flags (cuts + 1 entries)"},
          {"demand_atoms", "demand values on the lattice spacing"},
          {"demand_weights", "demand probabilities"},
          {"order_sizes", "nonnegative orders on the lattice spacing"},
          {"prior", "optional prior over levels (default: point mass at 0)"},
          {"holding_cost", "per unit of positive inventory"},
          {"backorder_cost", "per unit of backlog"},
          {"fixed_order_cost", "charged when ordering a positive amount"},
          {"unit_order_cost", "per unit ordered"},
          {"lost_sale_penalty", "applied to expected unmet demand (lost-sales mode)"},
          {"mode", "\"backorders\" or \"lost-sales\""},
          {"discount", "discount factor"}},
         [](const json& p) { return make_inventory(inventory_spec_from_json(p)); }},
        {"kalman-1d",
         "scalar linear-Gaussian control model on symmetric cell-integrated grids",
         {{"state_coef", "d*"},
          {"action_coef", "b*"},
          {"obs_coef", "h*"},
          {"obs_noise_coef", "c* (nonzero; observation noise std |c*|)"},
          {"process_noise_std", "state noise std"},
          {"prior_mean", "prior mean"},
          {"prior_std", "prior std"},
          {"cost_state", "c1 >= 0"},
          {"cost_action", "c2 > 0"},
          {"actions", "action grid"},
          {"state_cells", "state grid cells"},
          {"state_range", "state grid half-range"},
          {"obs_cells", "observation grid cells"},
          {"obs_range", "observation grid half-range"},
          {"discount", "discount factor"}},
         [](const json& p) { return make_kalman(kalman_spec_from_json(p)); }},
    };
    return builders;
}

DiscretePomdp build_model(const std::string& builder_name, const nlohmann::json& params) {
    for (const ModelBuilder& b : model_builders())
        if (b.name == builder_name) return b.build(params);
    throw std::invalid_argument("unknown model builder: " + builder_name);
}

}  // namespace comdp
