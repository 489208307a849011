#include "stin/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "stin/rng.hpp"

namespace stin {

double delta_sq_radians(double delta_sq_deg) { return delta_sq_deg * M_PI / 180.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ScenarioConfig c;
    c.n_s = j.value("n_s", c.n_s);
    c.rho = j.value("rho", c.rho);
    c.k_t = j.value("k_t", c.k_t);
    if (j.contains("satellite")) {
        const auto& s = j["satellite"];
        c.sat.three_db_angle_deg = s.value("three_db_angle_deg", c.sat.three_db_angle_deg);
        c.sat.max_beam_gain_dbi = s.value("max_beam_gain_dbi", c.sat.max_beam_gain_dbi);
        c.sat.terminal_gain_dbi = s.value("terminal_gain_dbi", c.sat.terminal_gain_dbi);
        c.sat.rain_enabled = s.value("rain_enabled", c.sat.rain_enabled);
    }
    if (j.contains("terrestrial")) {
        const auto& t = j["terrestrial"];
        c.terr.n1 = t.value("n1", c.terr.n1);
        c.terr.n2 = t.value("n2", c.terr.n2);
        c.terr.num_paths = t.value("num_paths", c.terr.num_paths);
    }
    if (j.contains("schemes")) c.schemes = j["schemes"].get<std::vector<std::string>>();
    if (j.contains("strategies")) c.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("p_t_db")) c.p_t_db = j["p_t_db"].get<std::vector<double>>();
    if (j.contains("p_s_w")) c.p_s_w = j["p_s_w"].get<std::vector<double>>();
    if (j.contains("delta_sq_deg")) c.delta_sq_deg = j["delta_sq_deg"].get<std::vector<double>>();
    c.realizations = j.value("realizations", c.realizations);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.sca.epsilon = j.value("sca_epsilon", c.sca.epsilon);
    c.sca.max_iterations = j.value("sca_max_iterations", c.sca.max_iterations);
    c.robust.epsilon = j.value("robust_epsilon", c.robust.epsilon);
    c.robust.max_iterations = j.value("robust_max_iterations", c.robust.max_iterations);
    c.validate();
    return c;
}

void ScenarioConfig::validate() const {
    if (n_s < 0 || rho < 1 || k_t < 0) throw std::invalid_argument("config: bad counts");
    if (realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
    for (double p : p_s_w)
        if (p < 0) throw std::invalid_argument("config: negative satellite power");
    for (double d : delta_sq_deg)
        if (d < 0) throw std::invalid_argument("config: negative uncertainty");
}

std::vector<SweepCell> ScenarioConfig::grid() const {
    std::vector<SweepCell> cells;
    for (const auto& scheme : schemes) {
        const bool baseline = scheme == "baseline_two_step" || scheme == "baseline_orthogonal";
        for (const auto& strat : strategies) {
            if (baseline && strat != strategies.front()) continue; // one entry per power point
            if (scheme == "cooperative" && strat == "noma") continue;
            for (double pt : p_t_db)
                for (double ps : p_s_w)
                    for (double dd : delta_sq_deg) {
                        if (dd > 0 && (baseline || strat == "noma")) continue;
                        SweepCell c;
                        c.scheme = scheme;
                        c.strategy = baseline ? "rsma" : strat;
                        c.p_t_db = pt;
                        c.p_s_w = ps;
                        c.delta_sq_deg = dd;
                        cells.push_back(c);
                    }
        }
    }
    return cells;
}

namespace {

Strategy parse_strategy(const std::string& s) {
    if (s == "rsma") return Strategy::Rsma;
    if (s == "sdma") return Strategy::Sdma;
    if (s == "noma") return Strategy::Noma;
    throw std::invalid_argument("unknown strategy: " + s);
}

const char* status_str(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        default: return "numerical_failure";
    }
}

ChannelSet satellite_only(const ChannelSet& ch) {
    ChannelSet s = ch;
    s.Z.resize(ch.num_beams(), 0);
    s.H.resize(ch.num_bs_antennas(), 0);
    s.z_amp.resize(ch.num_beams(), 0);
    s.z_phase.resize(ch.num_beams(), 0);
    return s;
}

ChannelSet bs_only(const ChannelSet& ch) {
    ChannelSet s;
    s.F.resize(0, 0);
    s.Z.resize(0, ch.num_cus());
    s.H = ch.H;
    s.f_amp.resize(0, 0);
    s.f_phase.resize(0, 0);
    s.z_amp.resize(0, ch.num_cus());
    s.z_phase.resize(0, ch.num_cus());
    return s;
}

// merge two sub-network reports into one (rates already final)
SolveReport merge_reports(const SolveReport& sat, const SolveReport& bs, double prelog) {
    SolveReport rep;
    rep.status = SolveStatus::Optimal;
    for (const auto* r : {&sat, &bs}) {
        if (r->status == SolveStatus::NumericalFailure) rep.status = SolveStatus::NumericalFailure;
        else if (r->status == SolveStatus::Infeasible && rep.status == SolveStatus::Optimal)
            rep.status = SolveStatus::Infeasible;
    }
    rep.beam_rates = prelog * sat.beam_rates;
    rep.cu_rates = prelog * bs.cu_rates;
    rep.iterations = sat.iterations + bs.iterations;
    rep.solve_seconds = sat.solve_seconds + bs.solve_seconds;
    double mmf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rep.beam_rates.size(); ++i) mmf = std::min(mmf, rep.beam_rates(i));
    for (int i = 0; i < rep.cu_rates.size(); ++i) mmf = std::min(mmf, rep.cu_rates(i));
    rep.achieved_mmf = std::isfinite(mmf) ? mmf : 0.0;
    rep.q_final = rep.achieved_mmf;
    // combined beamformers for inspection
    MatrixXcd w = sat.beamformers.W, p = bs.beamformers.P;
    rep.beamformers = BeamformerSet::coordinated(std::move(w), std::move(p));
    rep.portions.c_sat = sat.portions.c_sat;
    rep.portions.c_bs = bs.portions.c_bs;
    rep.power_residual = std::max(sat.power_residual, bs.power_residual);
    rep.portions_feasible = sat.portions_feasible && bs.portions_feasible;
    return rep;
}

} // namespace

SolveReport baseline_two_step(const ProblemData& d, const ScaConfig& cfg) {
    ProblemData sat = d;
    sat.channels = satellite_only(d.channels);
    sat.mode = Mode::Coordinated;
    sat.sigma2_cu.resize(0);
    const SolveReport sat_rep = run_sca(sat, cfg);

    ProblemData bs = d;
    bs.channels = bs_only(d.channels);
    bs.mode = Mode::Coordinated;
    bs.sigma2_su.resize(0);
    // frozen satellite downlink enters each CU's noise floor as a constant
    VectorXd noise = effective_noise_cu(d);
    const MatrixXcd& w = sat_rep.beamformers.W;
    for (int k = 0; k < d.channels.num_cus(); ++k)
        noise(k) += (w.adjoint() * d.channels.Z.col(k)).squaredNorm();
    bs.sigma2_cu = noise;
    const SolveReport bs_rep = run_sca(bs, cfg);
    return merge_reports(sat_rep, bs_rep, 1.0);
}

SolveReport baseline_orthogonal(const ProblemData& d, const ScaConfig& cfg) {
    ProblemData sat = d;
    sat.channels = satellite_only(d.channels);
    sat.mode = Mode::Coordinated;
    sat.sigma2_cu.resize(0);
    const SolveReport sat_rep = run_sca(sat, cfg);

    ProblemData bs = d;
    bs.channels = bs_only(d.channels);
    bs.mode = Mode::Coordinated;
    bs.sigma2_su.resize(0);
    const SolveReport bs_rep = run_sca(bs, cfg);
    return merge_reports(sat_rep, bs_rep, 0.5);
}

SweepResult run_sweep(const ScenarioConfig& config) {
    config.validate();
    SatelliteGeometry sat = config.sat;
    if (sat.beam_centers.empty())
        sat.beam_centers = ring_beam_centers(config.n_s, sat.three_db_angle_deg);

    const std::vector<SweepCell> cells = config.grid();
    SweepResult res;
    res.realizations = config.realizations;
    res.cells.resize(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) res.cells[i].cell = cells[i];

    for (int r = 0; r < config.realizations; ++r) {
        const std::uint64_t seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(r));
        const ChannelSet ch = sample_channel_set(sat, config.terr, config.rho, config.k_t, seed);
        std::vector<SolveReport> reports(cells.size());
        auto problem_for = [&](const SweepCell& c) {
            ProblemData d;
            d.channels = ch;
            d.p_s = c.p_s_w;
            d.p_t = db_to_linear(c.p_t_db);
            d.mode = c.scheme == "cooperative" ? Mode::Cooperative : Mode::Coordinated;
            d.strategy = parse_strategy(c.strategy);
            return d;
        };
        auto find_cell = [&](const std::string& scheme, const std::string& strat, double pt,
                             double ps) -> int {
            for (size_t i = 0; i < cells.size(); ++i)
                if (cells[i].scheme == scheme && cells[i].strategy == strat &&
                    cells[i].p_t_db == pt && cells[i].p_s_w == ps && cells[i].delta_sq_deg == 0)
                    return static_cast<int>(i);
            return -1;
        };

        // pass 1: perfect-CSIT cells and baselines
        for (size_t i = 0; i < cells.size(); ++i) {
            const SweepCell& c = cells[i];
            if (c.delta_sq_deg > 0) continue;
            try {
                const ProblemData d = problem_for(c);
                if (c.scheme == "baseline_two_step")
                    reports[i] = baseline_two_step(d, config.sca);
                else if (c.scheme == "baseline_orthogonal")
                    reports[i] = baseline_orthogonal(d, config.sca);
                else
                    reports[i] = run_sca(d, config.sca);
            } catch (const std::exception&) {
                reports[i].status = SolveStatus::NumericalFailure;
            }
        }

        // dominance repair: the richer feasible set must not lose to its
        // subset because of a different SCA starting point
        for (size_t i = 0; i < cells.size(); ++i) {
            const SweepCell& c = cells[i];
            if (c.delta_sq_deg > 0 || c.strategy != "rsma") continue;
            if (c.scheme != "coordinated" && c.scheme != "cooperative") continue;
            const int j = find_cell(c.scheme, "sdma", c.p_t_db, c.p_s_w);
            if (j < 0 || reports[j].status != SolveStatus::Optimal) continue;
            if (reports[i].status == SolveStatus::Optimal &&
                reports[i].achieved_mmf >= reports[j].achieved_mmf - 1e-4)
                continue;
            try {
                const ProblemData d = problem_for(c);
                const SolveReport retry =
                    run_sca(d, config.sca, make_state(d, reports[j].beamformers));
                if (retry.status == SolveStatus::Optimal &&
                    (reports[i].status != SolveStatus::Optimal ||
                     retry.achieved_mmf > reports[i].achieved_mmf))
                    reports[i] = retry;
            } catch (const std::exception&) {
            }
        }
        for (size_t i = 0; i < cells.size(); ++i) {
            const SweepCell& c = cells[i];
            if (c.delta_sq_deg > 0 || c.scheme != "cooperative") continue;
            const int j = find_cell("coordinated", c.strategy, c.p_t_db, c.p_s_w);
            if (j < 0 || reports[j].status != SolveStatus::Optimal) continue;
            if (reports[i].status == SolveStatus::Optimal &&
                reports[i].achieved_mmf >= reports[j].achieved_mmf - 1e-4)
                continue;
            try {
                const ProblemData d = problem_for(c);
                const auto& cb = reports[j].beamformers;
                const int n_s = ch.num_beams(), n_t = ch.num_bs_antennas(), kt = ch.num_cus();
                MatrixXcd v = MatrixXcd::Zero(n_s + n_t, n_s + kt + 1);
                if (cb.W.size()) {
                    v.col(0).head(n_s) = cb.W.col(0);
                    v.block(0, 1, n_s, n_s) = cb.W.rightCols(n_s);
                }
                if (cb.P.size()) {
                    v.col(0).tail(n_t) += cb.P.col(0);
                    v.block(n_s, 1 + n_s, n_t, kt) = cb.P.rightCols(kt);
                }
                const SolveReport retry = run_sca(
                    d, config.sca, make_state(d, BeamformerSet::cooperative(v, n_s, n_t)));
                if (retry.status == SolveStatus::Optimal &&
                    (reports[i].status != SolveStatus::Optimal ||
                     retry.achieved_mmf > reports[i].achieved_mmf))
                    reports[i] = retry;
            } catch (const std::exception&) {
            }
        }

        // pass 2: robust cells, warm-started from the matching perfect cell
        for (size_t i = 0; i < cells.size(); ++i) {
            const SweepCell& c = cells[i];
            if (c.delta_sq_deg <= 0) continue;
            try {
                const ProblemData d = problem_for(c);
                const PhaseUncertaintyModel unc =
                    make_uncertainty(ch, delta_sq_radians(c.delta_sq_deg));
                const int j = find_cell(c.scheme, c.strategy, c.p_t_db, c.p_s_w);
                if (j >= 0 && reports[j].status == SolveStatus::Optimal)
                    reports[i] = run_robust(d, unc, config.robust, reports[j].beamformers);
                else
                    reports[i] = run_robust(d, unc, config.robust);
            } catch (const std::exception&) {
                reports[i].status = SolveStatus::NumericalFailure;
            }
        }

        for (size_t i = 0; i < cells.size(); ++i) {
            auto& cs = res.cells[i];
            const SolveReport& rep = reports[i];
            const bool ok = rep.status == SolveStatus::Optimal;
            cs.mmf.push_back(ok ? rep.achieved_mmf : 0.0);
            cs.iterations.push_back(rep.iterations);
            cs.statuses.push_back(status_str(rep.status));
            if (!ok) ++cs.failures;
            if (rep.status == SolveStatus::NumericalFailure) res.any_numerical_failure = true;
        }
    }

    for (auto& cs : res.cells) {
        double sum = 0.0;
        int n = 0;
        for (size_t r = 0; r < cs.mmf.size(); ++r)
            if (cs.statuses[r] == std::string("optimal")) {
                sum += cs.mmf[r];
                ++n;
            }
        cs.mean = n ? sum / n : 0.0;
        double var = 0.0;
        for (size_t r = 0; r < cs.mmf.size(); ++r)
            if (cs.statuses[r] == std::string("optimal")) {
                const double dlt = cs.mmf[r] - cs.mean;
                var += dlt * dlt;
            }
        cs.stderr_mean = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
    }
    return res;
}

void emit_results(const SweepResult& res, const ScenarioConfig& config,
                  const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/results.csv";
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path);
    csv << "scheme,strategy,P_t_dB,P_s_W,delta_sq,realization,mmf_rate_bps_hz,iterations,status\n";
    char line[256];
    for (const auto& cs : res.cells)
        for (size_t r = 0; r < cs.mmf.size(); ++r) {
            std::snprintf(line, sizeof line, "%s,%s,%.10g,%.10g,%.10g,%zu,%.12g,%d,%s\n",
                          cs.cell.scheme.c_str(), cs.cell.strategy.c_str(), cs.cell.p_t_db,
                          cs.cell.p_s_w, cs.cell.delta_sq_deg, r, cs.mmf[r], cs.iterations[r],
                          cs.statuses[r].c_str());
            csv << line;
        }
    csv.close();

    nlohmann::json j;
    j["realizations"] = res.realizations;
    j["master_seed"] = config.master_seed;
    j["baseline_orthogonal_prelog"] = 0.5;
    j["delta_sq_unit"] = "degrees; radians^2 = value * pi / 180";
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cs : res.cells) {
        nlohmann::json c;
        c["scheme"] = cs.cell.scheme;
        c["strategy"] = cs.cell.strategy;
        c["P_t_dB"] = cs.cell.p_t_db;
        c["P_s_W"] = cs.cell.p_s_w;
        c["delta_sq"] = cs.cell.delta_sq_deg;
        c["mean_mmf"] = cs.mean;
        c["stderr_mmf"] = cs.stderr_mean;
        c["failures"] = cs.failures;
        double mean_iters = 0.0;
        for (int it : cs.iterations) mean_iters += it;
        c["mean_iterations"] = cs.iterations.empty() ? 0.0 : mean_iters / cs.iterations.size();
        cells.push_back(c);
    }
    j["cells"] = cells;
    const std::string json_path = out_dir + "/summary.json";
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path);
    js << j.dump(2) << "\n";
}

} // namespace stin
