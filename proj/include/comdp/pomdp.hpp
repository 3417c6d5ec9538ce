#pragma once

#include "comdp/measures.hpp"
#include "comdp/types.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace comdp {

/// Posterior state distribution over the model's state list.
using Belief = Vector;

/// Finite POMDP (X, Y, A, P, Q, c) with initial observation kernel Q0 and
/// prior p. Immutable by convention after construction; +inf cost entries
/// mark actions that are infeasible in a state.
struct DiscretePomdp {
    enum class CostMode { D, P };

    std::vector<std::string> state_labels;
    std::vector<std::string> obs_labels;
    std::vector<std::string> action_labels;
    Matrix state_coords;   // X x dim
    Matrix obs_coords;     // Y x dim
    Matrix action_coords;  // A x dim
    MetricSupport state_metric;
    MetricSupport obs_metric;

    std::vector<Matrix> transition;  // per action: X x X, row x -> P(.|x,a)
    std::vector<Matrix> obs_kernel;  // per action: X x Y, row x' -> Q(.|a,x')
    Matrix init_obs_kernel;          // X x Y, row x -> Q0(.|x)
    Vector prior;                    // over states
    Matrix cost;                     // X x A, entries in R or +inf
    Scalar discount = 0.9;
    CostMode cost_mode = CostMode::P;
    std::map<std::string, std::string> metadata;

    Index n_states() const { return static_cast<Index>(state_labels.size()); }
    Index n_obs() const { return static_cast<Index>(obs_labels.size()); }
    Index n_actions() const { return static_cast<Index>(action_labels.size()); }

    Index action_index(const std::string& label) const;
    Index obs_index(const std::string& label) const;
    Index state_index(const std::string& label) const;

    /// Prior as a measure over the state points.
    FiniteMeasure prior_measure() const;
};

struct ValidationIssue {
    std::string field;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    Scalar cost_shift = 0.0;  // K with c >= -K; the shift making costs nonnegative

    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

ValidationReport validate(const DiscretePomdp& model);

/// Throws std::invalid_argument carrying the report when validation fails.
void require_valid(const DiscretePomdp& model);

struct ShiftedModel {
    DiscretePomdp model;
    Scalar shift = 0.0;         // K applied to every cost entry
    Scalar value_offset = 0.0;  // K / (1 - alpha) added to every total cost
};

/// Converts a mode-D model into the equivalent mode-P model with costs
/// c + K >= 0. Mode-P input passes through with offset 0.
ShiftedModel shift_costs(const DiscretePomdp& model);

nlohmann::json model_to_json(const DiscretePomdp& model);
DiscretePomdp model_from_json(const nlohmann::json& doc);

DiscretePomdp load_model(const std::string& path);
void save_model(const DiscretePomdp& model, const std::string& path);

}  // namespace comdp
