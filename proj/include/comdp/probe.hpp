#pragma once

#include "comdp/filter.hpp"
#include "comdp/pomdp.hpp"

#include <string>
#include <utility>
#include <vector>

namespace comdp {

enum class ProbeMode { Weak, Setwise, Tv };
enum class ProbeKernel { ObsMarginal, BeliefTransition };
enum class ProbeVerdict { Converging, Stalled, Diverging };

struct ProbePoint {
    Belief belief;
    Index action = 0;
};

struct ProbeOptions {
    Scalar threshold = 1e-3;          // tail max below this reports "converging"
    std::vector<SetPredicate> sets;   // required for setwise mode
};

/// Gap trace of a kernel along an argument sequence against a fixed target
/// argument, plus the recorded verdict rule.
struct ProbeReport {
    ProbeMode mode = ProbeMode::Tv;
    ProbeKernel kernel = ProbeKernel::ObsMarginal;
    std::vector<Scalar> gaps;
    Scalar threshold = 1e-3;
    int tail_length = 0;
    Scalar tail_max = 0.0;
    Scalar tail_min = 0.0;
    Scalar limit_estimate = 0.0;  // mean of the tail window
    ProbeVerdict verdict = ProbeVerdict::Stalled;
    std::string decision_rule;
    bool setwise_family_empty = false;
};

const char* to_string(ProbeVerdict verdict);
const char* to_string(ProbeMode mode);

/// Measures distance(K(.|z_n,a_n), K(.|z,a)) per sequence index, where K is
/// the observation marginal R' or the belief transition kernel q. Sequences
/// must have at least 8 entries; setwise mode requires test sets.
ProbeReport probe_kernel(const DiscretePomdp& model, ProbeKernel kernel,
                         const std::vector<ProbePoint>& sequence, const ProbePoint& target,
                         ProbeMode mode, const ProbeOptions& options = {});

/// Mass that the sine-lattice model's belief kernel q(.|z,1/m) puts on
/// {z' : z'(1) >= 3/4} at z = (1/2, 1/2), in closed form:
/// (1/(2m)) * #{l in 1..2m : sin(pi l / (2m)) >= sqrt(3)/2}.
Scalar sine_lattice_q_mass(int m);

/// Posterior component H(1|z, a, y=1) of the abs-square model at a = -1/k
/// and a = +1/k for k = k_max, with z = (1/2, 1/2). The two one-sided limits
/// differ: the left sequence tends to 1, the right to 0.
std::pair<Scalar, Scalar> abs_square_posterior_limits(int k_max);

}  // namespace comdp
