#pragma once

#include <string>
#include <vector>

#include "stin/conic.hpp"
#include "stin/rate.hpp"

namespace stin {

/// Outcome of one optimization run (SCA or robust). Achieved rates are always
/// recomputed from the returned beamformers through the rate model, so they
/// are true rates, not surrogate values.
struct SolveReport {
    SolveStatus status = SolveStatus::NumericalFailure;
    Mode mode = Mode::Coordinated;
    Strategy strategy = Strategy::Rsma;
    std::vector<double> objective_trace;
    double q_final = 0.0;
    double achieved_mmf = 0.0;
    VectorXd beam_rates; // achieved per-beam totals
    VectorXd cu_rates;   // achieved per-CU totals
    CommonRatePortions portions;
    BeamformerSet beamformers;
    double power_residual = 0.0; // relative, worst over budgets
    bool portions_feasible = true;
    int iterations = 0;
    double solve_seconds = 0.0;
    // robust-mode extras
    std::vector<double> rank_one_residuals; // per lifted matrix, 1 - lmax/tr
    std::vector<double> beta_trace;         // penalty schedule actually used
    double expected_mmf = 0.0;              // surrogate expected rate at solution

    std::string to_json() const;
};

} // namespace stin
