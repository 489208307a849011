#pragma once

// Expectation-based robust max-min fairness design under satellite phase
// uncertainty. The SINRs are replaced by ratios of expected powers (traces
// against channel correlation matrices), the beamformers are lifted to
// Hermitian PSD matrices, the log-rate constraints get per-iteration tangent
// linearizations, and rank-one solutions are driven by an eigenvector penalty
// added to the objective. Rank-one beamformers are recovered by principal
// eigendecomposition at the end.

#include "stin/channel.hpp"
#include "stin/sca.hpp"

namespace stin {

struct RobustConfig {
    double epsilon = 5e-4; // stop on |(q - PF) change| below this
    int max_iterations = 12;
    double beta0 = 10.0;       // initial rank-one penalty factor
    double beta_factor = 5.0;  // escalation when residuals stall
    double beta_cap = 1e5;
    double residual_tol = 1e-3; // acceptable max rank-one residual
    int stall_window = 3;       // iterations of stalled residual before escalating
    bool randomization = false; // Gaussian rounding fallback for recovery
    SolverOptions solver;
    ScaConfig warm_start; // perfect-CSIT run used to seed the lifted matrices
};

/// 1 - lmax(X)/tr(X); zero iff X is rank-one. Throws on zero trace.
double rank_one_residual(const MatrixXcd& x);

/// Expected-power SINR tables of rank-one beamformers under the phase
/// uncertainty model: every term is tr(correlation * outer product).
SinrTables expected_sinr_tables(const ProblemData& data, const PhaseUncertaintyModel& unc,
                                const BeamformerSet& bf);

/// One robust solve. The estimated channels are data.channels with the model's
/// estimated phases; reports the lifted objective (q_final), the recovered
/// rank-one beamformers, their expected MMF rate (expected_mmf/achieved_mmf),
/// per-matrix rank-one residuals and the beta schedule used.
SolveReport run_robust(const ProblemData& data, const PhaseUncertaintyModel& unc,
                       const RobustConfig& config = {});

/// Warm-started variant: seeds the lifted matrices from the given beamformers
/// (e.g. one perfect-CSIT solve shared across several uncertainty levels).
SolveReport run_robust(const ProblemData& data, const PhaseUncertaintyModel& unc,
                       const RobustConfig& config, const BeamformerSet& warm);

} // namespace stin
