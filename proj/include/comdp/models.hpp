#pragma once

#include "comdp/measures.hpp"
#include "comdp/pomdp.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace comdp {

/// Two hidden states; observations on a dyadic grid over [0,1]. Under action
/// 1/j and state 2, observations follow the square-wave density (0 on even
/// dyadic sections, 2 on odd ones, 2^j sections); otherwise they are
/// uniform. The state never moves. Requires `cells` to be a power of two
/// >= 2^n so every density integrates exactly over the cells. Actions are
/// {0} and {1/j : j = 1..n}.
DiscretePomdp make_square_wave(int n, int cells);

/// Density of the square wave with 2^j sections at a point of [0,1].
Scalar square_wave_density(int j, Scalar y);

/// Two states, two observations, actions on a grid in [-1,1]. The
/// observation kernel swaps |a| and a^2 branches at a = 0, so the Bayes map
/// has different one-sided limits there. The state never moves.
DiscretePomdp make_abs_square(const std::vector<Scalar>& action_grid);
DiscretePomdp make_abs_square_k(int k_max);  // grid {0} union {+-1/k : k <= k_max}

/// Two states; observations on the lattice {1/n} with sine-squared masses
/// under a geometric envelope, plus observation 0 under action 0. The row
/// tails beyond k_truncation geometric blocks carry mass 2^-(K+1), assigned
/// to a flagged sink observation rather than renormalized
/// (metadata "sink_observation").
DiscretePomdp make_sine_lattice(int m_max, int k_truncation);

/// Observed x unobserved product-state version of the square-wave model:
/// states are (cell, w), the observation reveals the cell, and the cell is
/// redrawn each step from the uniform or square-wave law depending on w and
/// the action. The unobserved component never changes.
DiscretePomdp make_mdmii_square_wave(int n, int cells);

struct InventorySpec {
    enum class Mode { Backorders, LostSales };

    std::vector<Scalar> levels;          // uniform lattice of inventory levels
    std::vector<Scalar> container_cuts;  // strictly increasing boundaries
    std::vector<bool> transparent;       // per container (cuts.size() + 1 entries)
    std::vector<Scalar> demand_atoms;    // on the level lattice spacing
    std::vector<Scalar> demand_weights;
    std::vector<Scalar> order_sizes;     // nonnegative multiples of the spacing
    std::vector<Scalar> prior;           // over levels; defaults to point mass at 0
    Scalar holding_cost = 1.0;           // per unit of positive inventory
    Scalar backorder_cost = 1.0;         // per unit of backlog (backorders mode)
    Scalar fixed_order_cost = 0.0;
    Scalar unit_order_cost = 0.0;
    Scalar lost_sale_penalty = 0.0;      // applied to E[(D - x - a)+] (lost-sales mode)
    Mode mode = Mode::Backorders;
    Scalar discount = 0.95;
};

/// Periodic-review inventory model on a level lattice with container-valued
/// observations: transparent containers reveal the level, nontransparent
/// ones only their identity (observed at an interior point b_i). Rejects
/// demand atoms that land post-transition mass exactly on a container
/// boundary.
DiscretePomdp make_inventory(const InventorySpec& spec);

struct KalmanSpec {
    Scalar state_coef = 1.0;        // d*
    Scalar action_coef = 1.0;       // b*
    Scalar obs_coef = 1.0;          // h*
    Scalar obs_noise_coef = 1.0;    // c*, nonzero; observation noise std = |c*|
    Scalar process_noise_std = 1.0; // std of the additive state noise
    Scalar prior_mean = 0.0;
    Scalar prior_std = 1.0;
    Scalar cost_state = 1.0;        // c1 >= 0
    Scalar cost_action = 1.0;       // c2 > 0
    std::vector<Scalar> actions = {0.0};
    int state_cells = 81;
    Scalar state_range = 10.0;      // grid spans [-range, range]
    int obs_cells = 81;
    Scalar obs_range = 10.0;
    Scalar discount = 0.9;
};

/// Scalar linear-Gaussian control model discretized onto symmetric state and
/// observation grids by exact cell integration (rows renormalized after tail
/// truncation). Cost is c1 x^2 + c2 a^2.
DiscretePomdp make_kalman(const KalmanSpec& spec);

struct KalmanPosterior {
    Scalar mean = 0.0;
    Scalar variance = 0.0;
};

/// Closed-form scalar Kalman recursion: update on observations[0], then
/// predict/update per action/observation pair. Returns one posterior per
/// observation. Test oracle for the grid filter.
std::vector<KalmanPosterior> kalman_exact(const KalmanSpec& spec, Scalar prior_mean,
                                          Scalar prior_var,
                                          const std::vector<Scalar>& actions,
                                          const std::vector<Scalar>& observations);

/// Named model constructors addressable from model-spec JSON.
struct ModelBuilder {
    std::string name;
    std::string summary;
    nlohmann::json params_schema;  // {"param": "description"} pairs
    std::function<DiscretePomdp(const nlohmann::json& params)> build;
};

const std::vector<ModelBuilder>& model_builders();
DiscretePomdp build_model(const std::string& builder_name, const nlohmann::json& params);

}  // namespace comdp
