#include "comdp/probe.hpp"

#include "comdp/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace comdp {

const char* to_string(ProbeVerdict verdict) {
    switch (verdict) {
        case ProbeVerdict::Converging: return "converging";
        case ProbeVerdict::Stalled: return "stalled";
        case ProbeVerdict::Diverging: return "diverging";
    }
    return "?";
}

const char* to_string(ProbeMode mode) {
    switch (mode) {
        case ProbeMode::Weak: return "weak";
        case ProbeMode::Setwise: return "setwise";
        case ProbeMode::Tv: return "tv";
    }
    return "?";
}

namespace {

FiniteMeasure kernel_law(const DiscretePomdp& model, ProbeKernel kernel, const ProbePoint& pt) {
    if (kernel == ProbeKernel::ObsMarginal) return obs_marginal(model, pt.belief, pt.action);
    return belief_transition(model, pt.belief, pt.action).as_measure();
}

}  // namespace

ProbeReport probe_kernel(const DiscretePomdp& model, ProbeKernel kernel,
                         const std::vector<ProbePoint>& sequence, const ProbePoint& target,
                         ProbeMode mode, const ProbeOptions& options) {
    if (sequence.size() < 8)
        throw std::invalid_argument("probe_kernel: sequence must have at least 8 entries");
    if (mode == ProbeMode::Setwise && options.sets.empty())
        throw std::invalid_argument("probe_kernel: setwise mode requires test sets");

    ProbeReport report;
    report.mode = mode;
    report.kernel = kernel;
    report.threshold = options.threshold;

    const FiniteMeasure limit = kernel_law(model, kernel, target);
    report.gaps.reserve(sequence.size());
    for (const ProbePoint& pt : sequence) {
        const FiniteMeasure law = kernel_law(model, kernel, pt);
        switch (mode) {
            case ProbeMode::Tv:
                report.gaps.push_back(tv_distance(law, limit));
                break;
            case ProbeMode::Weak:
                report.gaps.push_back(wasserstein1(law, limit));
                break;
            case ProbeMode::Setwise: {
                const SetwiseGap g = setwise_gap(law, limit, options.sets);
                report.setwise_family_empty |= g.empty_family;
                report.gaps.push_back(g.gap);
                break;
            }
        }
    }

    const int len = static_cast<int>(report.gaps.size());
    report.tail_length = std::max(4, (len + 3) / 4);
    report.tail_length = std::min(report.tail_length, len);
    const auto tail_begin = report.gaps.end() - report.tail_length;
    report.tail_max = *std::max_element(tail_begin, report.gaps.end());
    report.tail_min = *std::min_element(tail_begin, report.gaps.end());
    report.limit_estimate =
        std::accumulate(tail_begin, report.gaps.end(), 0.0) / report.tail_length;

    const Scalar first = report.gaps.front();
    if (report.tail_max < report.threshold)
        report.verdict = ProbeVerdict::Converging;
    else if (report.tail_min > 10.0 * first)
        report.verdict = ProbeVerdict::Diverging;
    else
        report.verdict = ProbeVerdict::Stalled;

    std::ostringstream rule;
    rule << "tail = last max(4, ceil(len/4)) = " << report.tail_length
         << " entries; converging iff tail max < " << report.threshold
         << "; diverging iff tail min > 10 * first gap (" << first << "); else stalled";
    report.decision_rule = rule.str();
    return report;
}

Scalar sine_lattice_q_mass(int m) {
    if (m < 1) throw std::invalid_argument("sine_lattice_q_mass: m must be >= 1");
    // Count with a small slack: at l/(2m) = 1/3 the sine equals sqrt(3)/2
    // exactly in the reals and the count includes it.
    const Scalar threshold = std::sqrt(3.0) / 2.0 - 1e-12;
    int count = 0;
    for (int l = 1; l <= 2 * m; ++l)
        if (std::sin(M_PI * l / (2.0 * m)) >= threshold) ++count;
    return static_cast<Scalar>(count) / (2.0 * m);
}

std::pair<Scalar, Scalar> abs_square_posterior_limits(int k_max) {
    if (k_max < 2) throw std::invalid_argument("abs_square_posterior_limits: k_max must be >= 2");
    const DiscretePomdp model = make_abs_square_k(k_max);
    Belief z(2);
    z << 0.5, 0.5;
    const Index y1 = model.obs_index("1");
    Scalar left = 0.0, right = 0.0;
    for (int k = 2; k <= k_max; ++k) {
        const Index neg = model.action_index("-1/" + std::to_string(k));
        const Index pos = model.action_index("1/" + std::to_string(k));
        left = bayes_update(model, z, neg, y1)(0);
        right = bayes_update(model, z, pos, y1)(0);
    }
    return {left, right};
}

}  // namespace comdp
