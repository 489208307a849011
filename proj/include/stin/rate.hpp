#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "stin/channel.hpp"

namespace stin {

enum class Mode { Coordinated, Cooperative };
enum class Strategy { Rsma, Sdma, Noma };

const char* to_string(Mode m);
const char* to_string(Strategy s);

/// Precoders for one realization. Coordinated: W = [w_c, w_1..w_Ns] at the
/// satellite, P = [p_c, p_1..p_Kt] at the BS (common columns zero under SDMA
/// and NOMA). Cooperative: V = [v_c, v_sat_1.., v_bs_1..] over the stacked
/// (satellite rows first, then BS rows) antenna space.
struct BeamformerSet {
    Mode mode = Mode::Coordinated;
    MatrixXcd W; // N_s x (N_s+1)
    MatrixXcd P; // N_t x (K_t+1)
    MatrixXcd V; // (N_s+N_t) x (N_s+K_t+1)

    static BeamformerSet coordinated(MatrixXcd w, MatrixXcd p);
    static BeamformerSet cooperative(MatrixXcd v, int n_s, int n_t);
    /// Worst relative violation of the per-feed and BS power budgets.
    double power_violation(double p_s, double p_t, int n_s) const;
};

/// Common-rate shares. Coordinated: per-beam c_sat and per-CU c_bs against
/// the two common streams. Cooperative: both against the single super stream.
struct CommonRatePortions {
    VectorXd c_sat; // N_s
    VectorXd c_bs;  // K_t
    static CommonRatePortions zeros(int n_s, int k_t);
};

struct SinrTables {
    VectorXd su_common;  // K_s
    VectorXd su_private; // K_s
    VectorXd cu_common;  // K_t
    VectorXd cu_private; // K_t
};

/// Per-beam and per-CU totals plus decodability diagnostics. Violations are
/// reported, never clipped.
struct RateVector {
    VectorXd beam_totals; // N_s
    VectorXd cu_totals;   // K_t
    SinrTables sinrs;
    bool portions_feasible = true;
    double sat_common_slack = 0.0; // min common rate - sum portions (>=0 ok)
    double bs_common_slack = 0.0;
};

/// SINRs of coordinated RSMA reception: SUs see only satellite streams, CUs
/// see all BS streams plus the whole satellite downlink as interference;
/// private SINRs assume the own common stream was cancelled.
SinrTables coordinated_sinrs(const ChannelSet& ch, const BeamformerSet& bf,
                             const VectorXd& sigma2_su, const VectorXd& sigma2_cu);

/// Cooperative reception over aggregate channels g = [z; h]; SUs hear only
/// the satellite rows of V.
SinrTables cooperative_sinrs(const ChannelSet& ch, const BeamformerSet& bf,
                             const VectorXd& sigma2_su, const VectorXd& sigma2_cu);

/// log2(1+SINR) rates with the group-min rule for multicast beams.
RateVector rsma_rates(const SinrTables& sinrs, const CommonRatePortions& portions,
                      const std::vector<int>& group_map, Mode mode);

/// SC-SIC decoding orders; position 0 is decoded first by everyone obligated.
struct NomaOrder {
    std::vector<int> beam_sequence; // satellite beams, first-decoded first
    std::vector<int> cu_sequence;   // CUs, first-decoded first
};

/// Ascending weakest-user (satellite, per the beam rule) / descending norm
/// (BS) decode sequences.
NomaOrder default_noma_order(const ChannelSet& ch);

/// Coordinated SC-SIC rates: each stream's rate is the min decode rate over
/// the obligated receivers (its own plus everyone later in the sequence).
RateVector noma_rates(const ChannelSet& ch, const BeamformerSet& bf, const NomaOrder& order,
                      const VectorXd& sigma2_su, const VectorXd& sigma2_cu);

/// Min over all beam totals and CU totals.
double mmf_objective(const RateVector& rates);

/// Numerically safe log2(1 + x).
double rate_bps(double sinr);

/// Best portions split for fixed rates: maximize min(C_k + private_k) subject
/// to sum C <= common_budget, C >= 0 (bisection on the target).
VectorXd split_portions(const VectorXd& private_rates, double common_budget);

} // namespace stin
