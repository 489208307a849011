#include "stin/channel.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stin {

namespace {

constexpr double kDeg = M_PI / 180.0;
constexpr double kBoltzmann = 1.380649e-23;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Angular offsets are microscopic (theta_3dB = 0.4 deg), so directions are
// parametrized by small tilts from nadir and normalized.
Vector3d tilted_direction(double tilt_rad, double azimuth_rad) {
    const double s = std::sin(tilt_rad);
    return Vector3d(s * std::cos(azimuth_rad), s * std::sin(azimuth_rad), std::cos(tilt_rad));
}

double angle_between_deg(const Vector3d& a, const Vector3d& b) {
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    return std::acos(c) / kDeg;
}

} // namespace

void SatelliteGeometry::validate() const {
    if (carrier_frequency_hz <= 0 || satellite_height_m <= 0 || bandwidth_hz <= 0 ||
        three_db_angle_deg <= 0 || system_noise_temperature_k <= 0)
        throw std::invalid_argument("SatelliteGeometry: physical quantities must be positive");
    if (beam_centers.empty())
        throw std::invalid_argument("SatelliteGeometry: need at least one beam");
    for (size_t i = 0; i < beam_centers.size(); ++i)
        for (size_t j = i + 1; j < beam_centers.size(); ++j)
            if ((beam_centers[i] - beam_centers[j]).norm() < 1e-12)
                throw std::invalid_argument("SatelliteGeometry: beam centers must be distinct");
}

void TerrestrialGeometry::validate() const {
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("TerrestrialGeometry: array dims must be >= 1");
    if (num_paths < 1)
        throw std::invalid_argument("TerrestrialGeometry: need at least one path");
}

std::vector<int> ChannelSet::beam_group(int n) const {
    std::vector<int> g;
    for (size_t k = 0; k < group_map.size(); ++k)
        if (group_map[k] == n) g.push_back(static_cast<int>(k));
    return g;
}

double beam_gain(double theta_deg, const SatelliteGeometry& geom) {
    const double g_max = db_to_linear(geom.max_beam_gain_dbi);
    const double u = 2.07123 * std::sin(theta_deg * kDeg) / std::sin(geom.three_db_angle_deg * kDeg);
    double bracket;
    if (std::abs(u) < 1e-6) {
        // Series limit: J1(u)/2u -> 1/4 - u^2/32, 36 J3(u)/u^3 -> 3/4 - 3u^2/64.
        bracket = 1.0 - 5.0 * u * u / 64.0;
    } else {
        bracket = std::cyl_bessel_j(1, u) / (2.0 * u) + 36.0 * std::cyl_bessel_j(3, u) / (u * u * u);
    }
    return g_max * bracket * bracket;
}

std::vector<Vector3d> ring_beam_centers(int n_beams, double three_db_angle_deg) {
    std::vector<Vector3d> centers;
    if (n_beams == 1) {
        centers.emplace_back(0.0, 0.0, 1.0);
        return centers;
    }
    // Ring radius chosen so adjacent centers sit 2*theta_3dB apart.
    const double sep = 2.0 * three_db_angle_deg * kDeg;
    const double ring = sep / (2.0 * std::sin(M_PI / n_beams));
    for (int n = 0; n < n_beams; ++n)
        centers.push_back(tilted_direction(ring, 2.0 * M_PI * n / n_beams));
    return centers;
}

namespace {

// Uniform drop inside the angular disc of radius theta_3dB around `center`.
Vector3d drop_in_footprint(const Vector3d& center, double three_db_angle_deg, Rng& rng) {
    const double r = three_db_angle_deg * kDeg * std::sqrt(rng.uniform());
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    // Perturb the center tilt in the 2D angular plane.
    const double cx = std::atan2(center.x(), center.z());
    const double cy = std::atan2(center.y(), center.z());
    const double ex = cx + r * std::cos(az);
    const double ey = cy + r * std::sin(az);
    Vector3d v(std::tan(ex), std::tan(ey), 1.0);
    return v.normalized();
}

} // namespace

std::vector<Vector3d> drop_su_positions(const SatelliteGeometry& geom, int rho, Rng& rng) {
    std::vector<Vector3d> pos;
    for (const auto& c : geom.beam_centers)
        for (int i = 0; i < rho; ++i) pos.push_back(drop_in_footprint(c, geom.three_db_angle_deg, rng));
    return pos;
}

std::vector<Vector3d> drop_cu_positions(const SatelliteGeometry& geom, int k_t, Rng& rng) {
    std::vector<Vector3d> pos;
    for (int i = 0; i < k_t; ++i)
        pos.push_back(drop_in_footprint(geom.beam_centers.front(), geom.three_db_angle_deg, rng));
    return pos;
}

namespace {

// Amplitude of one (user, feed) link; rain factor q = chi^{1/2} with
// chi_dB = 20 log10(chi) lognormal.
double link_amplitude(const SatelliteGeometry& geom, double theta_deg, double dist_m, double rain_q) {
    if (dist_m <= 0) throw std::invalid_argument("link_amplitude: nonpositive distance");
    const double g = beam_gain(theta_deg, geom);
    const double g_r = db_to_linear(geom.terminal_gain_dbi);
    const double noise = std::sqrt(kBoltzmann * geom.system_noise_temperature_k * geom.bandwidth_hz);
    const double b = std::sqrt(g_r * g) / (4.0 * M_PI * (dist_m / geom.wavelength_m()) * noise);
    return b * rain_q;
}

double sample_rain_q(const SatelliteGeometry& geom, Rng& rng) {
    if (!geom.rain_enabled) return 1.0;
    const double chi_db = std::exp(geom.rain_mu + geom.rain_sigma * rng.normal());
    const double chi = std::pow(10.0, chi_db / 20.0);
    return std::sqrt(chi);
}

void fill_satellite_block(const SatelliteGeometry& geom, const std::vector<Vector3d>& positions,
                          Rng& rng, MatrixXcd& mat, MatrixXd& amp, MatrixXd& phase) {
    const int n_s = geom.num_beams();
    const int k = static_cast<int>(positions.size());
    mat.resize(n_s, k);
    amp.resize(n_s, k);
    phase.resize(n_s, k);
    const Vector3d nadir(0.0, 0.0, 1.0);
    for (int u = 0; u < k; ++u) {
        const double off_nadir = std::clamp(positions[u].dot(nadir), -1.0, 1.0);
        const double dist = geom.satellite_height_m / off_nadir;
        for (int n = 0; n < n_s; ++n) {
            const double theta = angle_between_deg(positions[u], geom.beam_centers[n]);
            amp(n, u) = link_amplitude(geom, theta, dist, sample_rain_q(geom, rng));
            phase(n, u) = rng.uniform(0.0, 2.0 * M_PI);
            mat(n, u) = std::polar(amp(n, u), phase(n, u));
        }
    }
}

} // namespace

ChannelSet sample_satellite_channels(const SatelliteGeometry& geom,
                                     const std::vector<Vector3d>& su_positions,
                                     const std::vector<Vector3d>& cu_positions,
                                     std::uint64_t rng_seed) {
    geom.validate();
    const int n_s = geom.num_beams();
    const int k_s = static_cast<int>(su_positions.size());
    if (k_s % n_s != 0)
        throw std::invalid_argument("sample_satellite_channels: K_s must be rho * N_s");
    Rng rng(rng_seed);
    ChannelSet ch;
    fill_satellite_block(geom, su_positions, rng, ch.F, ch.f_amp, ch.f_phase);
    fill_satellite_block(geom, cu_positions, rng, ch.Z, ch.z_amp, ch.z_phase);
    const int rho = k_s / n_s;
    ch.group_map.resize(k_s);
    for (int k = 0; k < k_s; ++k) ch.group_map[k] = k / rho;
    return ch;
}

VectorXcd upa_steering(const TerrestrialGeometry& geom, double theta_deg, double phi_deg,
                       double wavelength_m) {
    const double d1 = geom.element_spacing_1_m > 0 ? geom.element_spacing_1_m : wavelength_m / 2.0;
    const double d2 = geom.element_spacing_2_m > 0 ? geom.element_spacing_2_m : wavelength_m / 2.0;
    const double st = std::sin(theta_deg * kDeg), ct = std::cos(theta_deg * kDeg);
    const double cp = std::cos(phi_deg * kDeg);
    VectorXcd a_h(geom.n1), a_v(geom.n2);
    for (int i = 0; i < geom.n1; ++i) {
        const double offset = i - (geom.n1 - 1) / 2.0;
        a_h(i) = std::polar(1.0, 2.0 * M_PI / wavelength_m * offset * d1 * st * cp);
    }
    for (int i = 0; i < geom.n2; ++i) {
        const double offset = i - (geom.n2 - 1) / 2.0;
        a_v(i) = std::polar(1.0, 2.0 * M_PI / wavelength_m * offset * d2 * ct);
    }
    VectorXcd a(geom.num_elements());
    for (int i = 0; i < geom.n1; ++i)
        for (int j = 0; j < geom.n2; ++j) a(i * geom.n2 + j) = a_h(i) * a_v(j);
    return a;
}

MatrixXcd sample_terrestrial_channels(const TerrestrialGeometry& geom,
                                      const std::vector<std::vector<std::pair<double, double>>>& user_angles,
                                      std::uint64_t rng_seed, double wavelength_m) {
    geom.validate();
    Rng rng(rng_seed);
    const int k_t = static_cast<int>(user_angles.size());
    MatrixXcd h = MatrixXcd::Zero(geom.num_elements(), k_t);
    const double scale = std::sqrt(1.0 / geom.num_paths);
    for (int k = 0; k < k_t; ++k) {
        if (static_cast<int>(user_angles[k].size()) != geom.num_paths)
            throw std::invalid_argument("sample_terrestrial_channels: need L angle pairs per user");
        for (const auto& [theta, phi] : user_angles[k]) {
            const std::complex<double> alpha(rng.normal() * M_SQRT1_2, rng.normal() * M_SQRT1_2);
            h.col(k) += scale * alpha * upa_steering(geom, theta, phi, wavelength_m);
        }
    }
    return h;
}

ChannelSet sample_channel_set(const SatelliteGeometry& sat, const TerrestrialGeometry& terr,
                              int rho, int k_t, std::uint64_t seed) {
    Rng pos_rng(derive_seed(seed, 0));
    const auto su_pos = drop_su_positions(sat, rho, pos_rng);
    const auto cu_pos = drop_cu_positions(sat, k_t, pos_rng);
    ChannelSet ch = sample_satellite_channels(sat, su_pos, cu_pos, derive_seed(seed, 1));
    std::vector<std::vector<std::pair<double, double>>> angles(k_t);
    for (int k = 0; k < k_t; ++k)
        for (int l = 0; l < terr.num_paths; ++l)
            angles[k].emplace_back(pos_rng.uniform(60.0, 120.0), pos_rng.uniform(0.0, 360.0));
    ch.H = sample_terrestrial_channels(terr, angles, derive_seed(seed, 2), sat.wavelength_m());
    return ch;
}

MatrixXd phase_correlation(int n, double delta_sq) {
    if (delta_sq < 0) throw std::invalid_argument("phase_correlation: delta_sq must be >= 0");
    // E[e^{j(e_i - e_j)}] = e^{-delta_sq} for i != j, 1 on the diagonal.
    MatrixXd x = MatrixXd::Constant(n, n, std::exp(-delta_sq));
    x.diagonal().setOnes();
    return x;
}

MatrixXcd correlation_matrix(const VectorXcd& f_hat, const MatrixXd& x) {
    const MatrixXcd d = f_hat.asDiagonal();
    return d * x * d.adjoint();
}

CorrelationSet build_correlation_matrices(const PhaseUncertaintyModel& model,
                                          const MatrixXd& f_amp, const MatrixXd& z_amp) {
    const int n_s = static_cast<int>(f_amp.rows());
    const MatrixXd x = phase_correlation(n_s, model.delta_sq);
    CorrelationSet out;
    for (int k = 0; k < f_amp.cols(); ++k) {
        VectorXcd f_hat(n_s);
        for (int n = 0; n < n_s; ++n) f_hat(n) = std::polar(f_amp(n, k), model.estimated_phase_f(n, k));
        out.f_bar.push_back(correlation_matrix(f_hat, x));
    }
    for (int k = 0; k < z_amp.cols(); ++k) {
        VectorXcd z_hat(n_s);
        for (int n = 0; n < n_s; ++n) z_hat(n) = std::polar(z_amp(n, k), model.estimated_phase_z(n, k));
        out.z_bar.push_back(correlation_matrix(z_hat, x));
    }
    return out;
}

PhaseUncertaintyModel make_uncertainty(const ChannelSet& ch, double delta_sq) {
    return PhaseUncertaintyModel{delta_sq, ch.f_phase, ch.z_phase};
}

namespace {

nlohmann::json complex_matrix_to_json(const MatrixXcd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j).real());
            row.push_back(m(i, j).imag());
        }
        rows.push_back(row);
    }
    return rows;
}

MatrixXcd complex_matrix_from_json(const nlohmann::json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) / 2 : 0;
    MatrixXcd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = {rows[i][2 * j].get<double>(), rows[i][2 * j + 1].get<double>()};
    return m;
}

nlohmann::json real_matrix_to_json(const MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

MatrixXd real_matrix_from_json(const nlohmann::json& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

} // namespace

std::string dump_channels(const ChannelSet& ch, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["n_s"] = ch.num_beams();
    j["k_s"] = ch.num_sus();
    j["k_t"] = ch.num_cus();
    j["n_t"] = ch.num_bs_antennas();
    j["F"] = complex_matrix_to_json(ch.F);
    j["Z"] = complex_matrix_to_json(ch.Z);
    j["H"] = complex_matrix_to_json(ch.H);
    j["f_amp"] = real_matrix_to_json(ch.f_amp);
    j["z_amp"] = real_matrix_to_json(ch.z_amp);
    j["f_phase"] = real_matrix_to_json(ch.f_phase);
    j["z_phase"] = real_matrix_to_json(ch.z_phase);
    j["group_map"] = ch.group_map;
    return j.dump(2);
}

ChannelSet load_channels(const std::string& json_text, std::uint64_t* seed_out) {
    const auto j = nlohmann::json::parse(json_text);
    ChannelSet ch;
    ch.F = complex_matrix_from_json(j.at("F"));
    ch.Z = complex_matrix_from_json(j.at("Z"));
    ch.H = complex_matrix_from_json(j.at("H"));
    ch.f_amp = real_matrix_from_json(j.at("f_amp"));
    ch.z_amp = real_matrix_from_json(j.at("z_amp"));
    ch.f_phase = real_matrix_from_json(j.at("f_phase"));
    ch.z_phase = real_matrix_from_json(j.at("z_phase"));
    ch.group_map = j.at("group_map").get<std::vector<int>>();
    if (seed_out) *seed_out = j.value("seed", 0ULL);
    return ch;
}

} // namespace stin
