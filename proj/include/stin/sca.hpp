#pragma once

// Max-min fairness joint beamforming via successive convex approximation.
// Each iteration linearizes the quadratic-over-linear SINR bounds and the
// a*log(1+a) rate device around the previous iterate, yielding a conic
// subproblem whose solution is feasible for the next iteration (hence the
// objective trace is monotone).
//
// Subproblem constraint count for the coordinated RSMA form:
//   4*K_t + 4*K_s            SINR Taylor bounds + SOC log devices
// + N_s + K_t                portion nonnegativity
// + 1 + N_s                  BS sum power + per-feed satellite power
// + K_t + K_s                epigraph linking (C + rate >= q)
// (tiny K_t = N_s = K_s = 1 instance: 14 constraints)

#include <cstdint>

#include "stin/channel.hpp"
#include "stin/conic.hpp"
#include "stin/rate.hpp"
#include "stin/report.hpp"

namespace stin {

struct ScaConfig {
    double epsilon = 1e-5; // stop on |q_n - q_{n-1}| < epsilon
    int max_iterations = 60;
    int max_retries = 4;       // damped retries after a solver failure
    double damping = 0.5;      // expansion-point averaging weight on retry
    SolverOptions solver;
};

/// Everything that defines one MMF instance. Either side may be absent
/// (zero beams/users) or powerless; both are handled.
struct ProblemData {
    ChannelSet channels;
    double p_s = 120.0; // satellite total power (split evenly across feeds)
    double p_t = 100.0; // BS sum power
    VectorXd sigma2_su; // per-SU noise variance (empty = all ones)
    VectorXd sigma2_cu;
    Mode mode = Mode::Coordinated;
    Strategy strategy = Strategy::Rsma;
};

/// SCA iterate: beamformers plus the SINR surrogate expansion points.
struct ScaState {
    BeamformerSet bf;
    VectorXd a, a_c; // CU private/common auxiliaries
    VectorXd b, b_c; // SU private/common auxiliaries
    CommonRatePortions portions;
    double q = 0.0;
};

/// Scalar form of the quadratic-over-linear Taylor bound, used by property
/// tests: surrogate for |h^H p|^2 / a expanded at (p0, a0).
double taylor_qol(const VectorXcd& h, const VectorXcd& p0, double a0,
                  const VectorXcd& p, double a);

/// Linearization constants of a*log(1+a) at a0: v = a0/(a0+1) + ln(1+a0),
/// u = a0^2/(a0+1). The SOC || [a + alpha ln2 - v, 2 sqrt(u)] || <= a - alpha ln2 + v
/// under-approximates ln(1+a) >= alpha ln2.
void soc_log_params(double a0, double& v, double& u);

/// Matched-filter initialization meeting power budgets, auxiliaries set to
/// the true SINRs of that point.
ScaState initialize_state(const ProblemData& data);

/// State from arbitrary beamformers: auxiliaries from the true SINRs (clamped
/// away from zero), portions zero, q = achieved max-min rate. RSMA states get
/// a tiny common column seeded if the input lacks one, since the common-rate
/// surrogate degenerates at a zero expansion point.
ScaState make_state(const ProblemData& data, const BeamformerSet& bf);

ConicProblem build_subproblem_coordinated(const ProblemData& data, const ScaState& state);
ConicProblem build_subproblem_cooperative(const ProblemData& data, const ScaState& state);

SolveReport run_sca(const ProblemData& data, const ScaConfig& config = {});
/// Warm-started variant (used for multi-start dominance guarantees).
SolveReport run_sca(const ProblemData& data, const ScaConfig& config, const ScaState& init);

/// Per-user noise vectors defaulted to ones when empty.
VectorXd effective_noise_su(const ProblemData& data);
VectorXd effective_noise_cu(const ProblemData& data);

} // namespace stin
