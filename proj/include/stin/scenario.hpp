#pragma once

// Monte Carlo orchestration: sweep grids over transmission schemes, power
// budgets and phase-uncertainty levels, paired across channel realizations
// (every cell of one realization sees the identical ChannelSet), plus the two
// reference baselines. Output files are bit-identical across reruns of the
// same configuration.

#include <string>
#include <vector>

#include "stin/robust.hpp"
#include "stin/sca.hpp"

namespace stin {

/// One grid cell. delta_sq_deg == 0 means perfect CSIT (plain SCA); positive
/// values select the robust solver with delta^2 = value * pi/180 rad^2.
struct SweepCell {
    std::string scheme;   // coordinated | cooperative | baseline_two_step | baseline_orthogonal
    std::string strategy; // rsma | sdma | noma
    double p_t_db = 20.0;
    double p_s_w = 120.0;
    double delta_sq_deg = 0.0;
};

struct ScenarioConfig {
    int n_s = 3, rho = 2, k_t = 4;
    SatelliteGeometry sat;   // beam_centers filled from n_s if left empty
    TerrestrialGeometry terr;
    std::vector<std::string> schemes{"coordinated"};
    std::vector<std::string> strategies{"rsma"};
    std::vector<double> p_t_db{20.0};
    std::vector<double> p_s_w{120.0};
    std::vector<double> delta_sq_deg{0.0};
    int realizations = 20;
    std::uint64_t master_seed = 1;
    ScaConfig sca;
    RobustConfig robust;

    static ScenarioConfig from_json(const std::string& text);
    /// Cross product of the lists, minus unsupported combinations (NOMA is
    /// coordinated-only and perfect-CSIT-only; baselines take no strategy or
    /// uncertainty axis and appear once per power point).
    std::vector<SweepCell> grid() const;
    void validate() const;
};

struct CellStats {
    SweepCell cell;
    std::vector<double> mmf;          // per realization; 0 recorded on failure
    std::vector<int> iterations;
    std::vector<std::string> statuses;
    int failures = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
};

struct SweepResult {
    std::vector<CellStats> cells;
    int realizations = 0;
    bool any_numerical_failure = false;
};

/// Converts a configured uncertainty level (degrees) to rad^2.
double delta_sq_radians(double delta_sq_deg);

/// P_t is configured in dB relative to unit noise power.
double db_to_linear(double db);

SweepResult run_sweep(const ScenarioConfig& config);

/// Satellite beamforming optimized first ignoring the CUs; W then frozen and
/// the BS optimized with the satellite interference folded into the CU noise
/// floors. Reports the min rate over all users.
SolveReport baseline_two_step(const ProblemData& data, const ScaConfig& cfg);

/// Satellite and BS on disjoint bands: independent sub-networks with no cross
/// interference and a 1/2 pre-log on every rate.
SolveReport baseline_orthogonal(const ProblemData& data, const ScaConfig& cfg);

/// Writes results.csv and summary.json into out_dir.
void emit_results(const SweepResult& result, const ScenarioConfig& config,
                  const std::string& out_dir);

} // namespace stin
