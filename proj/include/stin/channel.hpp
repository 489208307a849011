#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stin/rng.hpp"

namespace stin {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Multibeam GEO satellite front-end parameters. Angles in degrees, gains in
/// dBi, everything else SI. Channel amplitudes come out noise-normalized
/// (the kappa*T*B factor is folded in), so downstream noise variance is 1.
struct SatelliteGeometry {
    double carrier_frequency_hz = 28e9;
    double satellite_height_m = 35786e3;
    double bandwidth_hz = 500e6;
    double three_db_angle_deg = 0.4;
    double max_beam_gain_dbi = 52.0;
    double terminal_gain_dbi = 42.7;
    double system_noise_temperature_k = 300.0;
    double rain_mu = -3.125;
    double rain_sigma = 1.591;
    bool rain_enabled = true;
    /// Unit pointing vectors from the satellite, one per beam.
    std::vector<Vector3d> beam_centers;

    double wavelength_m() const { return 299792458.0 / carrier_frequency_hz; }
    int num_beams() const { return static_cast<int>(beam_centers.size()); }
    void validate() const; // throws std::invalid_argument
};

/// Uniform planar array at the BS plus the multipath count.
struct TerrestrialGeometry {
    int n1 = 4;
    int n2 = 4;
    double element_spacing_1_m = 0.0; // 0 means lambda/2 at 28 GHz
    double element_spacing_2_m = 0.0;
    int num_paths = 3;

    int num_elements() const { return n1 * n2; }
    void validate() const;
};

/// Gateway-side knowledge for the robust design: the phases estimated at t0
/// and the variance of the Gaussian drift accumulated by t1 (radians^2).
struct PhaseUncertaintyModel {
    double delta_sq = 0.0;
    MatrixXd estimated_phase_f; // N_s x K_s
    MatrixXd estimated_phase_z; // N_s x K_t
};

/// One realization of every channel in the network, with the amplitude/phase
/// split the robust solver needs. F, Z columns are per-user satellite
/// channels; H columns are BS->CU channels.
struct ChannelSet {
    MatrixXcd F; // N_s x K_s
    MatrixXcd Z; // N_s x K_t
    MatrixXcd H; // N_t x K_t
    MatrixXd f_amp, z_amp;     // |entry|
    MatrixXd f_phase, z_phase; // true phase in [0, 2pi)
    std::vector<int> group_map; // SU index -> beam index

    int num_beams() const { return static_cast<int>(F.rows()); }
    int num_sus() const { return static_cast<int>(F.cols()); }
    int num_cus() const { return static_cast<int>(Z.cols()); }
    int num_bs_antennas() const { return static_cast<int>(H.rows()); }
    /// SU indices of beam n.
    std::vector<int> beam_group(int n) const;
};

/// Normalized radiation pattern of one feed: G_max * [J1(u)/2u + 36 J3(u)/u^3]^2
/// with u = 2.07123 sin(theta)/sin(theta_3dB). Continuous at theta = 0.
double beam_gain(double theta_deg, const SatelliteGeometry& geom);

/// Beam centers on a ring around nadir, adjacent centers 2*theta_3dB apart.
std::vector<Vector3d> ring_beam_centers(int n_beams, double three_db_angle_deg);

/// Uniform user drops inside each beam's 3 dB footprint; rho users per beam,
/// grouped contiguously (group_map[k] = k / rho).
std::vector<Vector3d> drop_su_positions(const SatelliteGeometry& geom, int rho, Rng& rng);

/// CU drops for the satellite interference path: inside beam 1's footprint.
std::vector<Vector3d> drop_cu_positions(const SatelliteGeometry& geom, int k_t, Rng& rng);

/// Satellite channels F (to SUs) and Z (to CUs) per the free-space /
/// Bessel-gain / lognormal-rain model, with i.i.d. uniform phases. Fills the
/// amplitude/phase decomposition; group_map gets rho = K_s / N_s users per beam.
ChannelSet sample_satellite_channels(const SatelliteGeometry& geom,
                                     const std::vector<Vector3d>& su_positions,
                                     const std::vector<Vector3d>& cu_positions,
                                     std::uint64_t rng_seed);

/// BS->CU channels: sqrt(1/L) sum_l alpha_l a_h(theta,phi) (x) a_v(theta),
/// alpha ~ CN(0,1). Angles in degrees, one (vertical, horizontal) pair per
/// user per path.
MatrixXcd sample_terrestrial_channels(const TerrestrialGeometry& geom,
                                      const std::vector<std::vector<std::pair<double, double>>>& user_angles,
                                      std::uint64_t rng_seed, double wavelength_m);

/// Kronecker steering vector of the UPA, unit-modulus entries.
VectorXcd upa_steering(const TerrestrialGeometry& geom, double theta_deg, double phi_deg,
                       double wavelength_m);

/// All-channels convenience sampler used by the harness: drops positions and
/// angles, then samples F, Z, H with sub-seeds derived from `seed`.
ChannelSet sample_channel_set(const SatelliteGeometry& sat, const TerrestrialGeometry& terr,
                              int rho, int k_t, std::uint64_t seed);

/// Phase-error correlation matrix X: unit diagonal, e^{-delta_sq} off-diagonal.
MatrixXd phase_correlation(int n, double delta_sq);

/// Channel correlation matrix diag(f_hat) X diag(f_hat)^H for one user.
MatrixXcd correlation_matrix(const VectorXcd& f_hat, const MatrixXd& x);

/// F-bar / Z-bar for all SUs and CUs from the amplitude/estimated-phase split.
struct CorrelationSet {
    std::vector<MatrixXcd> f_bar; // per SU, N_s x N_s
    std::vector<MatrixXcd> z_bar; // per CU, N_s x N_s
};
CorrelationSet build_correlation_matrices(const PhaseUncertaintyModel& model,
                                          const MatrixXd& f_amp, const MatrixXd& z_amp);

/// Gateway view of a realization: estimated phases = the sampled ones.
PhaseUncertaintyModel make_uncertainty(const ChannelSet& ch, double delta_sq);

/// JSON round-trip of a ChannelSet for --dump-channels / --load-channels.
std::string dump_channels(const ChannelSet& ch, std::uint64_t seed);
ChannelSet load_channels(const std::string& json_text, std::uint64_t* seed_out = nullptr);

} // namespace stin
