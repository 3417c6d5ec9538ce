#include "comdp/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace comdp {

namespace {

Index label_index(const std::vector<std::string>& labels, const std::string& label,
                  const char* what) {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
        throw std::invalid_argument(std::string("unknown ") + what + " label: " + label);
    return static_cast<Index>(it - labels.begin());
}

constexpr Scalar kRowSumTol = 1e-10;
constexpr Scalar kPriorTol = 1e-12;

void check_stochastic_rows(const Matrix& mat, const std::string& field,
                           std::vector<ValidationIssue>& issues) {
    for (Index r = 0; r < mat.rows(); ++r) {
        Scalar sum = 0.0;
        bool negative = false;
        for (Index c = 0; c < mat.cols(); ++c) {
            if (!(mat(r, c) >= 0.0)) negative = true;
            sum += mat(r, c);
        }
        if (negative) {
            issues.push_back({field, "row " + std::to_string(r) + " has a negative entry"});
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            std::ostringstream os;
            os << "row " << r << " sums to " << sum;
            issues.push_back({field, os.str()});
        }
    }
}

}  // namespace

Index DiscretePomdp::action_index(const std::string& label) const {
    return label_index(action_labels, label, "action");
}

Index DiscretePomdp::obs_index(const std::string& label) const {
    return label_index(obs_labels, label, "observation");
}

Index DiscretePomdp::state_index(const std::string& label) const {
    return label_index(state_labels, label, "state");
}

FiniteMeasure DiscretePomdp::prior_measure() const {
    return FiniteMeasure(state_metric, state_coords, prior);
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    if (ok()) {
        os << "valid (cost shift K = " << cost_shift << ")";
        return os.str();
    }
    os << issues.size() << " issue(s):";
    for (const auto& issue : issues) os << "\n  [" << issue.field << "] " << issue.message;
    return os.str();
}

ValidationReport validate(const DiscretePomdp& m) {
    ValidationReport report;
    auto& issues = report.issues;

    const Index nx = m.n_states(), ny = m.n_obs(), na = m.n_actions();
    if (nx == 0) issues.push_back({"states", "at least one state required"});
    if (ny == 0) issues.push_back({"observations", "at least one observation required"});
    if (na == 0) issues.push_back({"actions", "at least one action required"});
    if (!issues.empty()) return report;

    if (m.state_coords.rows() != nx)
        issues.push_back({"state_coords", "row count does not match states"});
    if (m.obs_coords.rows() != ny)
        issues.push_back({"observation_coords", "row count does not match observations"});
    if (m.action_coords.rows() != na)
        issues.push_back({"action_coords", "row count does not match actions"});

    if (static_cast<Index>(m.transition.size()) != na)
        issues.push_back({"transition", "one matrix per action required"});
    if (static_cast<Index>(m.obs_kernel.size()) != na)
        issues.push_back({"observation_kernel", "one matrix per action required"});
    if (!issues.empty()) return report;

    for (Index a = 0; a < na; ++a) {
        const std::string tfield = "transition[" + m.action_labels[static_cast<std::size_t>(a)] + "]";
        if (m.transition[static_cast<std::size_t>(a)].rows() != nx ||
            m.transition[static_cast<std::size_t>(a)].cols() != nx)
            issues.push_back({tfield, "must be X x X"});
        else
            check_stochastic_rows(m.transition[static_cast<std::size_t>(a)], tfield, issues);

        const std::string qfield =
            "observation_kernel[" + m.action_labels[static_cast<std::size_t>(a)] + "]";
        if (m.obs_kernel[static_cast<std::size_t>(a)].rows() != nx ||
            m.obs_kernel[static_cast<std::size_t>(a)].cols() != ny)
            issues.push_back({qfield, "must be X x Y"});
        else
            check_stochastic_rows(m.obs_kernel[static_cast<std::size_t>(a)], qfield, issues);
    }

    if (m.init_obs_kernel.rows() != nx || m.init_obs_kernel.cols() != ny)
        issues.push_back({"initial_observation_kernel", "must be X x Y"});
    else
        check_stochastic_rows(m.init_obs_kernel, "initial_observation_kernel", issues);

    if (m.prior.size() != nx || !is_probability_vector(m.prior, kPriorTol))
        issues.push_back({"prior", "must be a probability vector over states"});

    if (m.cost.rows() != nx || m.cost.cols() != na) {
        issues.push_back({"cost", "must be X x A"});
        return report;
    }

    Scalar min_finite = kInfinity;
    for (Index x = 0; x < nx; ++x) {
        bool feasible = false;
        for (Index a = 0; a < na; ++a) {
            const Scalar c = m.cost(x, a);
            if (std::isnan(c) || c == -kInfinity) {
                issues.push_back({"cost", "entry (" + std::to_string(x) + "," + std::to_string(a) +
                                              ") must be finite or +inf"});
                continue;
            }
            if (std::isfinite(c)) {
                feasible = true;
                min_finite = std::min(min_finite, c);
            }
        }
        if (!feasible)
            issues.push_back(
                {"cost", "state " + m.state_labels[static_cast<std::size_t>(x)] +
                             " has no action with finite cost"});
    }
    report.cost_shift = std::isfinite(min_finite) ? std::max(0.0, -min_finite) : 0.0;

    if (m.cost_mode == DiscretePomdp::CostMode::D) {
        if (!(m.discount >= 0.0 && m.discount < 1.0))
            issues.push_back({"discount", "mode D requires discount in [0,1)"});
    } else {
        if (!(m.discount >= 0.0 && m.discount <= 1.0))
            issues.push_back({"discount", "mode P requires discount in [0,1]"});
        if (std::isfinite(min_finite) && min_finite < 0.0)
            issues.push_back({"cost", "mode P requires nonnegative costs"});
    }

    if (m.state_metric.kind == MetricKind::Container ||
        m.obs_metric.kind == MetricKind::Container) {
        const auto& cuts = m.state_metric.kind == MetricKind::Container ? m.state_metric.cuts
                                                                        : m.obs_metric.cuts;
        for (std::size_t i = 1; i < cuts.size(); ++i)
            if (!(cuts[i] > cuts[i - 1]))
                issues.push_back({"metric", "container cut points must be strictly increasing"});
    }

    return report;
}

void require_valid(const DiscretePomdp& model) {
    const ValidationReport report = validate(model);
    if (!report.ok()) throw std::invalid_argument("invalid model: " + report.to_string());
}

ShiftedModel shift_costs(const DiscretePomdp& model) {
    ShiftedModel out{model, 0.0, 0.0};
    if (model.cost_mode == DiscretePomdp::CostMode::P) return out;
    const ValidationReport report = validate(model);
    if (!report.ok()) throw std::invalid_argument("shift_costs: " + report.to_string());
    const Scalar k = report.cost_shift;
    for (Index x = 0; x < model.cost.rows(); ++x)
        for (Index a = 0; a < model.cost.cols(); ++a)
            if (std::isfinite(out.model.cost(x, a))) out.model.cost(x, a) += k;
    out.model.cost_mode = DiscretePomdp::CostMode::P;
    out.shift = k;
    out.value_offset = k / (1.0 - model.discount);
    return out;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& mat, bool allow_inf) {
    json rows = json::array();
    for (Index r = 0; r < mat.rows(); ++r)
        for (Index c = 0; c < mat.cols(); ++c) {
            const Scalar v = mat(r, c);
            if (allow_inf && std::isinf(v))
                rows.push_back("inf");
            else
                rows.push_back(v);
        }
    return rows;
}

Matrix matrix_from_json(const json& arr, Index rows, Index cols, bool allow_inf,
                        const std::string& field) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols)
        throw std::invalid_argument(field + ": expected row-major array of " +
                                    std::to_string(rows * cols) + " entries");
    Matrix mat(rows, cols);
    Index k = 0;
    for (const auto& cell : arr) {
        Scalar v;
        if (cell.is_number()) {
            v = cell.get<Scalar>();
        } else if (allow_inf && cell.is_string() && cell.get<std::string>() == "inf") {
            v = kInfinity;
        } else {
            throw std::invalid_argument(field + "[" + std::to_string(k) + "]: expected a number" +
                                        (allow_inf ? " or \"inf\"" : ""));
        }
        mat(k / cols, k % cols) = v;
        ++k;
    }
    return mat;
}

json metric_to_json(const MetricSupport& metric) {
    json j;
    switch (metric.kind) {
        case MetricKind::Euclidean1D: j["kind"] = "euclidean-1d"; break;
        case MetricKind::EuclideanND: j["kind"] = "euclidean-nd"; break;
        case MetricKind::Container:
            j["kind"] = "container";
            j["cuts"] = metric.cuts;
            break;
    }
    return j;
}

MetricSupport metric_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument(field + ": expected {\"kind\": ...}");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean-1d") return MetricSupport::euclidean_1d();
    if (kind == "euclidean-nd") return MetricSupport::euclidean_nd();
    if (kind == "container") {
        if (!j.contains("cuts"))
            throw std::invalid_argument(field + ": container metric requires \"cuts\"");
        return MetricSupport::container(j.at("cuts").get<std::vector<Scalar>>());
    }
    throw std::invalid_argument(field + ": unknown metric kind " + kind);
}

std::vector<std::string> labels_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument(field + ": expected a nonempty array of labels");
    std::vector<std::string> out;
    for (const auto& cell : j) {
        if (!cell.is_string())
            throw std::invalid_argument(field + ": labels must be strings");
        out.push_back(cell.get<std::string>());
    }
    return out;
}

Matrix coords_from_json(const json& j, Index rows, const std::string& field) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
        throw std::invalid_argument(field + ": expected one coordinate row per label");
    const Index dim = j.empty() ? 1 : static_cast<Index>(j.front().size());
    Matrix out(rows, std::max<Index>(dim, 1));
    Index r = 0;
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<Index>(row.size()) != out.cols())
            throw std::invalid_argument(field + "[" + std::to_string(r) +
                                        "]: inconsistent coordinate dimension");
        Index c = 0;
        for (const auto& cell : row) out(r, c++) = cell.get<Scalar>();
        ++r;
    }
    return out;
}

json coords_to_json(const Matrix& mat) {
    json out = json::array();
    for (Index r = 0; r < mat.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < mat.cols(); ++c) row.push_back(mat(r, c));
        out.push_back(row);
    }
    return out;
}

}  // namespace

nlohmann::json model_to_json(const DiscretePomdp& m) {
    json doc;
    doc["schema_version"] = 1;
    doc["states"] = m.state_labels;
    doc["state_coords"] = coords_to_json(m.state_coords);
    doc["state_metric"] = metric_to_json(m.state_metric);
    doc["observations"] = m.obs_labels;
    doc["observation_coords"] = coords_to_json(m.obs_coords);
    doc["observation_metric"] = metric_to_json(m.obs_metric);
    doc["actions"] = m.action_labels;
    doc["action_coords"] = coords_to_json(m.action_coords);
    json transition = json::array(), obs_kernel = json::array();
    for (const auto& mat : m.transition) transition.push_back(matrix_to_json(mat, false));
    for (const auto& mat : m.obs_kernel) obs_kernel.push_back(matrix_to_json(mat, false));
    doc["transition"] = transition;
    doc["observation_kernel"] = obs_kernel;
    doc["initial_observation_kernel"] = matrix_to_json(m.init_obs_kernel, false);
    doc["prior"] = std::vector<Scalar>(m.prior.data(), m.prior.data() + m.prior.size());
    doc["cost"] = matrix_to_json(m.cost, true);
    doc["discount"] = m.discount;
    doc["cost_mode"] = m.cost_mode == DiscretePomdp::CostMode::D ? "D" : "P";
    if (!m.metadata.empty()) doc["metadata"] = m.metadata;
    return doc;
}

DiscretePomdp model_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("model: expected a JSON object");
    for (const char* field :
         {"states", "observations", "actions", "transition", "observation_kernel",
          "initial_observation_kernel", "prior", "cost", "discount", "cost_mode"}) {
        if (!doc.contains(field))
            throw std::invalid_argument(std::string("model: missing field \"") + field + "\"");
    }

    DiscretePomdp m;
    m.state_labels = labels_from_json(doc.at("states"), "states");
    m.obs_labels = labels_from_json(doc.at("observations"), "observations");
    m.action_labels = labels_from_json(doc.at("actions"), "actions");
    const Index nx = m.n_states(), ny = m.n_obs(), na = m.n_actions();

    m.state_coords = doc.contains("state_coords")
                         ? coords_from_json(doc.at("state_coords"), nx, "state_coords")
                         : Matrix::Zero(nx, 1);
    m.obs_coords = doc.contains("observation_coords")
                       ? coords_from_json(doc.at("observation_coords"), ny, "observation_coords")
                       : Matrix::Zero(ny, 1);
    m.action_coords = doc.contains("action_coords")
                          ? coords_from_json(doc.at("action_coords"), na, "action_coords")
                          : Matrix::Zero(na, 1);
    if (!doc.contains("state_coords"))
        for (Index x = 0; x < nx; ++x) m.state_coords(x, 0) = static_cast<Scalar>(x);
    if (!doc.contains("observation_coords"))
        for (Index y = 0; y < ny; ++y) m.obs_coords(y, 0) = static_cast<Scalar>(y);
    if (!doc.contains("action_coords"))
        for (Index a = 0; a < na; ++a) m.action_coords(a, 0) = static_cast<Scalar>(a);

    m.state_metric = doc.contains("state_metric")
                         ? metric_from_json(doc.at("state_metric"), "state_metric")
                         : MetricSupport::euclidean_1d();
    m.obs_metric = doc.contains("observation_metric")
                       ? metric_from_json(doc.at("observation_metric"), "observation_metric")
                       : MetricSupport::euclidean_1d();

    const json& tj = doc.at("transition");
    const json& qj = doc.at("observation_kernel");
    if (!tj.is_array() || static_cast<Index>(tj.size()) != na)
        throw std::invalid_argument("transition: expected one matrix per action");
    if (!qj.is_array() || static_cast<Index>(qj.size()) != na)
        throw std::invalid_argument("observation_kernel: expected one matrix per action");
    for (Index a = 0; a < na; ++a) {
        m.transition.push_back(matrix_from_json(tj.at(static_cast<std::size_t>(a)), nx, nx, false,
                                                "transition[" + std::to_string(a) + "]"));
        m.obs_kernel.push_back(matrix_from_json(qj.at(static_cast<std::size_t>(a)), nx, ny, false,
                                                "observation_kernel[" + std::to_string(a) + "]"));
    }
    m.init_obs_kernel = matrix_from_json(doc.at("initial_observation_kernel"), nx, ny, false,
                                         "initial_observation_kernel");

    const auto prior = doc.at("prior").get<std::vector<Scalar>>();
    if (static_cast<Index>(prior.size()) != nx)
        throw std::invalid_argument("prior: expected one weight per state");
    m.prior = Eigen::Map<const Vector>(prior.data(), nx);

    m.cost = matrix_from_json(doc.at("cost"), nx, na, true, "cost");
    m.discount = doc.at("discount").get<Scalar>();
    const std::string mode = doc.at("cost_mode").get<std::string>();
    if (mode == "D")
        m.cost_mode = DiscretePomdp::CostMode::D;
    else if (mode == "P")
        m.cost_mode = DiscretePomdp::CostMode::P;
    else
        throw std::invalid_argument("cost_mode: expected \"D\" or \"P\"");
    if (doc.contains("metadata"))
        m.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
    return m;
}

DiscretePomdp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model file: " + path);
    json doc;
    in >> doc;
    return model_from_json(doc);
}

void save_model(const DiscretePomdp& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write model file: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

}  // namespace comdp
