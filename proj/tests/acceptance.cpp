// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero if any criterion fails. Expect a multi-hour
// runtime on one core: the strategy-ordering and robust-degradation studies
// run hundreds of full optimizations at the reference network size
// (N_s = 3, K_s = 6, N_t = 16, K_t = 4, P_s = 120 W).

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "stin/robust.hpp"
#include "stin/scenario.hpp"

using namespace stin;

namespace {

int g_failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void note(const std::string& text) {
    std::fprintf(stderr, "[acceptance] %s\n", text.c_str());
    std::fflush(stderr);
}

ScenarioConfig reference_config() {
    ScenarioConfig cfg;
    cfg.n_s = 3;
    cfg.rho = 2;
    cfg.k_t = 4;
    cfg.terr.n1 = 4;
    cfg.terr.n2 = 4;
    cfg.sca.max_iterations = 200;
    return cfg;
}

SatelliteGeometry reference_sat(const ScenarioConfig& cfg) {
    SatelliteGeometry s = cfg.sat;
    s.beam_centers = ring_beam_centers(cfg.n_s, s.three_db_angle_deg);
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char buf[512];

// ---------------------------------------------------------------- criterion 1
void criterion1() {
    const ScenarioConfig cfg = reference_config();
    const SatelliteGeometry sat = reference_sat(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string why;
    int worst_iters = 0;
    for (int r = 0; r < 20 && ok; ++r) {
        ProblemData d;
        d.channels = sample_channel_set(sat, cfg.terr, cfg.rho, cfg.k_t, derive_seed(2024, r));
        d.p_s = 120.0;
        d.p_t = db_to_linear(20.0);
        const auto rep = run_sca(d, cfg.sca);
        note("c1 run " + std::to_string(r) + ": q=" + std::to_string(rep.achieved_mmf) +
             " iters=" + std::to_string(rep.iterations));
        if (rep.status != SolveStatus::Optimal) { ok = false; why = "solver failure"; break; }
        const auto& tr = rep.objective_trace;
        for (size_t i = 1; i < tr.size(); ++i)
            if (tr[i] < tr[i - 1] - 1e-8) { ok = false; why = "non-monotone trace"; }
        if (tr.size() >= 2 && std::abs(tr.back() - tr[tr.size() - 2]) >= 1e-5) {
            ok = false;
            why = "did not reach |dq| < 1e-5";
        }
        if (rep.iterations > 200) { ok = false; why = "iteration cap exceeded"; }
        worst_iters = std::max(worst_iters, rep.iterations);
    }
    const double wall = seconds_since(t0);
    if (ok && wall > 1800.0) { ok = false; why = "wall time over 30 minutes"; }
    std::snprintf(buf, sizeof buf,
                  "20 reference-size SCA runs monotone within 1e-8, |dq|<1e-5, max %d iterations, "
                  "%.1f s total%s%s",
                  worst_iters, wall, ok ? "" : "; ", why.c_str());
    verdict(1, ok, buf);
}

// ------------------------------------------------------------ criteria 2 and 3
const CellStats* find_cell(const SweepResult& res, const std::string& scheme,
                           const std::string& strat, double pt) {
    for (const auto& cs : res.cells)
        if (cs.cell.scheme == scheme && cs.cell.strategy == strat && cs.cell.p_t_db == pt)
            return &cs;
    return nullptr;
}

void criterion2() {
    ScenarioConfig cfg = reference_config();
    cfg.schemes = {"coordinated", "cooperative", "baseline_two_step", "baseline_orthogonal"};
    cfg.strategies = {"rsma", "sdma", "noma"};
    cfg.p_t_db = {10.0, 20.0, 30.0};
    cfg.realizations = 20;
    cfg.master_seed = 1;
    note("c2 sweep starting (21 cells x 20 realizations)");
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_sweep(cfg);
    note("c2 sweep done in " + std::to_string(seconds_since(t0)) + " s");

    bool ok = !res.any_numerical_failure;
    std::string why = ok ? "" : "numerical failure in sweep; ";
    for (double pt : cfg.p_t_db) {
        const auto* coop = find_cell(res, "cooperative", "rsma", pt);
        const auto* coord = find_cell(res, "coordinated", "rsma", pt);
        const auto* sdma = find_cell(res, "coordinated", "sdma", pt);
        const auto* noma = find_cell(res, "coordinated", "noma", pt);
        const auto* coop_sdma = find_cell(res, "cooperative", "sdma", pt);
        if (!(coop->mean >= coord->mean && coord->mean >= sdma->mean && sdma->mean >= noma->mean)) {
            ok = false;
            std::snprintf(buf, sizeof buf, "mean ordering broken at P_t=%g dB; ", pt);
            why += buf;
        }
        for (int r = 0; r < cfg.realizations; ++r) {
            if (coord->mmf[r] < sdma->mmf[r] - 1e-4 ||
                coop->mmf[r] < coop_sdma->mmf[r] - 1e-4 ||
                coop->mmf[r] < coord->mmf[r] - 1e-4 ||
                coop_sdma->mmf[r] < sdma->mmf[r] - 1e-4) {
                ok = false;
                std::snprintf(buf, sizeof buf, "per-realization dominance broken (r=%d, P_t=%g); ",
                              r, pt);
                why += buf;
                break;
            }
        }
    }
    const auto* coord20 = find_cell(res, "coordinated", "rsma", 20.0);
    const auto* b1 = find_cell(res, "baseline_two_step", "rsma", 20.0);
    const auto* b2 = find_cell(res, "baseline_orthogonal", "rsma", 20.0);
    if (!(b1->mean < coord20->mean && b2->mean < coord20->mean)) {
        ok = false;
        why += "a baseline is not below coordinated RSMA at 20 dB; ";
    }
    std::snprintf(buf, sizeof buf,
                  "20 paired realizations: means at 20 dB coop %.3f >= coord %.3f >= SDMA %.3f >= "
                  "NOMA %.3f, baselines %.3f/%.3f below; per-realization dominance held%s%s",
                  find_cell(res, "cooperative", "rsma", 20.0)->mean, coord20->mean,
                  find_cell(res, "coordinated", "sdma", 20.0)->mean,
                  find_cell(res, "coordinated", "noma", 20.0)->mean, b1->mean, b2->mean,
                  ok ? "" : "; ", why.c_str());
    verdict(2, ok, buf);
}

void criterion3() {
    ScenarioConfig cfg = reference_config();
    cfg.schemes = {"coordinated", "cooperative"};
    cfg.strategies = {"rsma"};
    cfg.p_t_db = {40.0};
    cfg.realizations = 20;
    cfg.master_seed = 1;
    note("c3 sweep starting");
    const auto res = run_sweep(cfg);
    const double coord = find_cell(res, "coordinated", "rsma", 40.0)->mean;
    const double coop = find_cell(res, "cooperative", "rsma", 40.0)->mean;
    const double rel = std::abs(coop - coord) / coord;
    const bool ok = !res.any_numerical_failure && rel < 0.05;
    std::snprintf(buf, sizeof buf,
                  "at P_t=40 dB mean cooperative %.4f vs coordinated %.4f RSMA, %.2f%% relative gap",
                  coop, coord, 100.0 * rel);
    verdict(3, ok, buf);
}

// ------------------------------------------------- criteria 4, 5, 6 (shared runs)
struct RobustStudy {
    // degradation percentages per delta level, averaged over realizations
    std::vector<double> rsma_deg, sdma_deg;
    std::vector<double> all_residuals;  // max rank-one residual per robust run
    std::vector<double> all_retention;  // recovered expected MMF / lifted q
    // converged solutions of the first realization, one per delta level,
    // kept for the surrogate-accuracy check
    ProblemData probe_problem;
    std::vector<PhaseUncertaintyModel> probe_unc;
    std::vector<BeamformerSet> probe_bf;
    bool failed = false;
};

RobustStudy run_robust_study() {
    const std::vector<double> deltas = {5.0, 15.0, 45.0};
    const int n_real = 50;
    ScenarioConfig cfg = reference_config();
    const SatelliteGeometry sat = reference_sat(cfg);
    RobustStudy st;
    std::vector<double> rsma_perf_sum(deltas.size(), 0), rsma_rob_sum(deltas.size(), 0);
    std::vector<double> sdma_perf_sum(deltas.size(), 0), sdma_rob_sum(deltas.size(), 0);
    for (int r = 0; r < n_real; ++r) {
        ProblemData d;
        d.channels = sample_channel_set(sat, cfg.terr, cfg.rho, cfg.k_t, derive_seed(1, r));
        d.p_s = 120.0;
        d.p_t = db_to_linear(20.0);
        d.strategy = Strategy::Sdma;
        const auto sdma = run_sca(d, cfg.sca);
        d.strategy = Strategy::Rsma;
        auto rsma = run_sca(d, cfg.sca);
        if (sdma.status == SolveStatus::Optimal && rsma.status == SolveStatus::Optimal &&
            rsma.achieved_mmf < sdma.achieved_mmf - 1e-4) {
            const auto retry = run_sca(d, cfg.sca, make_state(d, sdma.beamformers));
            if (retry.status == SolveStatus::Optimal && retry.achieved_mmf > rsma.achieved_mmf)
                rsma = retry;
        }
        if (sdma.status != SolveStatus::Optimal || rsma.status != SolveStatus::Optimal) {
            st.failed = true;
            return st;
        }
        for (size_t j = 0; j < deltas.size(); ++j) {
            const auto unc = make_uncertainty(d.channels, delta_sq_radians(deltas[j]));
            d.strategy = Strategy::Rsma;
            const auto rob_r = run_robust(d, unc, cfg.robust, rsma.beamformers);
            d.strategy = Strategy::Sdma;
            const auto rob_s = run_robust(d, unc, cfg.robust, sdma.beamformers);
            if (rob_r.status != SolveStatus::Optimal || rob_s.status != SolveStatus::Optimal) {
                st.failed = true;
                return st;
            }
            for (const auto* rep : {&rob_r, &rob_s}) {
                double mx = 0;
                for (double x : rep->rank_one_residuals) mx = std::max(mx, x);
                st.all_residuals.push_back(mx);
                st.all_retention.push_back(rep->q_final > 1e-9 ? rep->expected_mmf / rep->q_final
                                                               : 1.0);
            }
            rsma_perf_sum[j] += rsma.achieved_mmf;
            rsma_rob_sum[j] += rob_r.expected_mmf;
            sdma_perf_sum[j] += sdma.achieved_mmf;
            sdma_rob_sum[j] += rob_s.expected_mmf;
            if (r == 0) {
                d.strategy = Strategy::Rsma;
                st.probe_problem = d;
                st.probe_unc.push_back(unc);
                st.probe_bf.push_back(rob_r.beamformers);
            }
        }
        if ((r + 1) % 5 == 0)
            note("robust study: " + std::to_string(r + 1) + "/" + std::to_string(n_real) +
                 " realizations done");
    }
    for (size_t j = 0; j < deltas.size(); ++j) {
        st.rsma_deg.push_back(100.0 * (1.0 - rsma_rob_sum[j] / rsma_perf_sum[j]));
        st.sdma_deg.push_back(100.0 * (1.0 - sdma_rob_sum[j] / sdma_perf_sum[j]));
    }
    return st;
}

void criterion4(const RobustStudy& st) {
    if (st.failed) {
        verdict(4, false, "a solve in the robust study failed");
        return;
    }
    const double rsma_ref[3] = {10.74, 17.50, 23.22};
    const double sdma_ref[3] = {16.14, 26.96, 35.94};
    bool ordering = true, monotone = true, absolutes = true;
    for (int j = 0; j < 3; ++j) {
        if (st.rsma_deg[j] >= st.sdma_deg[j]) ordering = false;
        if (j > 0 && (st.rsma_deg[j] < st.rsma_deg[j - 1] || st.sdma_deg[j] < st.sdma_deg[j - 1]))
            monotone = false;
        if (std::abs(st.rsma_deg[j] - rsma_ref[j]) > 5.0 ||
            std::abs(st.sdma_deg[j] - sdma_ref[j]) > 5.0)
            absolutes = false;
    }
    // the mandatory part is ordering + monotonicity; the absolute percentages
    // depend on the ambiguous delta^2 unit (see README), reported either way
    const bool ok = ordering && monotone;
    std::snprintf(buf, sizeof buf,
                  "50 realizations at 20 dB: RSMA degradation %.2f/%.2f/%.2f%% (ref 10.74/17.50/"
                  "23.22), SDMA %.2f/%.2f/%.2f%% (ref 16.14/26.96/35.94); RSMA<SDMA %s, monotone "
                  "%s, within +/-5 points %s",
                  st.rsma_deg[0], st.rsma_deg[1], st.rsma_deg[2], st.sdma_deg[0], st.sdma_deg[1],
                  st.sdma_deg[2], ordering ? "yes" : "NO", monotone ? "yes" : "NO",
                  absolutes ? "yes" : "no (unit ambiguity documented)");
    verdict(4, ok, buf);
}

void criterion5(const RobustStudy& st) {
    if (st.probe_bf.empty()) {
        verdict(5, false, "no converged robust solution available");
        return;
    }
    const ProblemData& d = st.probe_problem;
    const int draws = 10000;
    std::vector<double> worst_per_level;
    bool ok = true;
    for (size_t lvl = 0; lvl < st.probe_bf.size(); ++lvl) {
        const auto& unc = st.probe_unc[lvl];
        const auto& bf = st.probe_bf[lvl];
        const auto surrogate = expected_sinr_tables(d, unc, bf);
        Rng rng(99);
        SinrTables mc;
        mc.su_common = VectorXd::Zero(d.channels.num_sus());
        mc.su_private = VectorXd::Zero(d.channels.num_sus());
        mc.cu_common = VectorXd::Zero(d.channels.num_cus());
        mc.cu_private = VectorXd::Zero(d.channels.num_cus());
        const double sd = std::sqrt(unc.delta_sq);
        for (int t = 0; t < draws; ++t) {
            ChannelSet ch = d.channels;
            for (int i = 0; i < ch.F.rows(); ++i) {
                for (int j = 0; j < ch.F.cols(); ++j)
                    ch.F(i, j) = std::polar(ch.f_amp(i, j),
                                            unc.estimated_phase_f(i, j) + sd * rng.normal());
                for (int j = 0; j < ch.Z.cols(); ++j)
                    ch.Z(i, j) = std::polar(ch.z_amp(i, j),
                                            unc.estimated_phase_z(i, j) + sd * rng.normal());
            }
            const auto s = coordinated_sinrs(ch, bf, VectorXd::Ones(ch.num_sus()),
                                             VectorXd::Ones(ch.num_cus()));
            auto acc = [](VectorXd& dst, const VectorXd& sinr) {
                for (int i = 0; i < dst.size(); ++i) dst(i) += std::log2(1.0 + sinr(i));
            };
            acc(mc.su_common, s.su_common);
            acc(mc.su_private, s.su_private);
            acc(mc.cu_common, s.cu_common);
            acc(mc.cu_private, s.cu_private);
        }
        double worst = 0;
        auto cmp = [&](const VectorXd& mc_sum, const VectorXd& sur_sinr) {
            for (int i = 0; i < mc_sum.size(); ++i) {
                const double mc_rate = mc_sum(i) / draws;
                const double sur_rate = std::log2(1.0 + sur_sinr(i));
                worst = std::max(worst, std::abs(sur_rate - mc_rate) / std::max(mc_rate, 1e-12));
            }
        };
        cmp(mc.su_common, surrogate.su_common);
        cmp(mc.su_private, surrogate.su_private);
        cmp(mc.cu_common, surrogate.cu_common);
        cmp(mc.cu_private, surrogate.cu_private);
        worst_per_level.push_back(worst);
        if (worst > 0.05) ok = false;
    }
    std::snprintf(buf, sizeof buf,
                  "expected-power surrogate rates vs %d-draw Monte Carlo, worst relative gap over "
                  "all users and streams: %.2f%%/%.2f%%/%.2f%% at the three uncertainty levels "
                  "(limit 5%%)",
                  draws, 100.0 * worst_per_level[0],
                  100.0 * (worst_per_level.size() > 1 ? worst_per_level[1] : 0.0),
                  100.0 * (worst_per_level.size() > 2 ? worst_per_level[2] : 0.0));
    verdict(5, ok, buf);
}

void criterion6(const RobustStudy& st) {
    if (st.failed || st.all_residuals.empty()) {
        verdict(6, false, "a solve in the robust study failed");
        return;
    }
    int res_ok = 0, ret_ok = 0;
    double worst_res = 0, worst_ret = 1e9;
    for (double x : st.all_residuals) {
        if (x <= 1e-3) ++res_ok;
        worst_res = std::max(worst_res, x);
    }
    for (double x : st.all_retention) {
        if (x >= 0.95) ++ret_ok;
        worst_ret = std::min(worst_ret, x);
    }
    const int n = static_cast<int>(st.all_residuals.size());
    const bool ok = res_ok >= (9 * n + 9) / 10 && ret_ok >= (9 * n + 9) / 10;
    std::snprintf(buf, sizeof buf,
                  "%d robust runs: rank-one residual <= 1e-3 on %d (worst %.2e); recovered MMF >= "
                  "95%% of lifted objective on %d (worst %.3f)",
                  n, res_ok, worst_res, ret_ok, worst_ret);
    verdict(6, ok, buf);
}

// ---------------------------------------------------------------- criterion 7
void criterion7() {
    bool ok = true;
    std::string why;
    Rng rng(7);

    // Taylor bound under-approximates the quadratic-over-linear on 1e4 points
    for (int t = 0; t < 10000; ++t) {
        VectorXcd h(3), p0(3), p(3);
        for (int i = 0; i < 3; ++i) {
            h(i) = {rng.normal(), rng.normal()};
            p0(i) = {rng.normal(), rng.normal()};
            p(i) = {rng.normal(), rng.normal()};
        }
        const double a0 = 0.1 + 3.0 * rng.uniform(), a = 0.1 + 3.0 * rng.uniform();
        const double exact = std::norm(h.dot(p)) / a; // h.dot is conjugating
        if (taylor_qol(h, p0, a0, p, a) > exact + 1e-9) {
            ok = false;
            why += "Taylor bound violated; ";
            break;
        }
    }

    // SOC-log tangent containment and exactness on a grid
    for (double a0 = 0.05; a0 < 20.0 && ok; a0 *= 1.7) {
        double v, u;
        soc_log_params(a0, v, u);
        if (std::abs((v - u / a0) - std::log1p(a0)) > 1e-12) {
            ok = false;
            why += "SOC-log not exact at expansion; ";
        }
        for (double a = 0.01; a < 40.0; a *= 1.3)
            if (v - u / a > std::log1p(a) + 1e-12) {
                ok = false;
                why += "SOC-log tangent above the log; ";
                break;
            }
    }

    // boresight gain equals G_max
    SatelliteGeometry sat;
    sat.beam_centers = ring_beam_centers(1, sat.three_db_angle_deg);
    if (std::abs(beam_gain(0.0, sat) - std::pow(10.0, 5.2)) > 1e-6 * std::pow(10.0, 5.2)) {
        ok = false;
        why += "boresight gain != G_max; ";
    }

    // characteristic function: E[e^{j(e_i - e_j)}] = e^{-delta_sq}
    {
        const double dsq = 0.785;
        const double sd = std::sqrt(dsq);
        std::complex<double> acc = 0;
        const int n = 1000000;
        for (int t = 0; t < n; ++t)
            acc += std::exp(std::complex<double>(0, sd * rng.normal() - sd * rng.normal()));
        if (std::abs(acc.real() / n - std::exp(-dsq)) > 1e-2) {
            ok = false;
            why += "characteristic-function mismatch; ";
        }
    }

    // SINR tables vs an explicit elementwise oracle
    {
        ChannelSet ch;
        auto fill = [&](MatrixXcd& m, int r, int c) {
            m.resize(r, c);
            for (int i = 0; i < r * c; ++i) m.data()[i] = {rng.normal(), rng.normal()};
        };
        fill(ch.F, 2, 2);
        fill(ch.Z, 2, 2);
        fill(ch.H, 4, 2);
        ch.group_map = {0, 1};
        MatrixXcd w(2, 3), p(4, 3);
        fill(w, 2, 3);
        fill(p, 4, 3);
        const auto bf = BeamformerSet::coordinated(w, p);
        const auto s = coordinated_sinrs(ch, bf, VectorXd::Ones(2), VectorXd::Ones(2));
        for (int k = 0; k < 2 && ok; ++k) {
            // SU k private: own beam column 1+beam, interference = other private beams
            const int g = ch.group_map[k];
            double den = 1.0;
            for (int n = 0; n < 2; ++n)
                if (n != g) den += std::norm(ch.F.col(k).dot(w.col(1 + n)));
            const double oracle = std::norm(ch.F.col(k).dot(w.col(1 + g))) / den;
            if (std::abs(s.su_private(k) - oracle) > 1e-10) {
                ok = false;
                why += "SU private SINR oracle mismatch; ";
            }
            // CU k private: all satellite streams plus other BS streams interfere
            double den_cu = 1.0;
            for (int c = 0; c < 3; ++c) den_cu += std::norm(ch.Z.col(k).dot(w.col(c)));
            for (int c = 1; c < 3; ++c)
                if (c != 1 + k) den_cu += std::norm(ch.H.col(k).dot(p.col(c)));
            const double oracle_cu = std::norm(ch.H.col(k).dot(p.col(1 + k))) / den_cu;
            if (std::abs(s.cu_private(k) - oracle_cu) > 1e-10) {
                ok = false;
                why += "CU private SINR oracle mismatch; ";
            }
        }
    }

    // closed-form single-user link: q = log2(1 + p_t |h|^2)
    {
        ProblemData d;
        d.channels.F.resize(0, 0);
        d.channels.f_amp.resize(0, 0);
        d.channels.f_phase.resize(0, 0);
        d.channels.Z.resize(0, 1);
        d.channels.z_amp.resize(0, 1);
        d.channels.z_phase.resize(0, 1);
        d.channels.H.resize(1, 1);
        d.channels.H(0, 0) = {0.6, -0.3};
        d.p_s = 0.0;
        d.p_t = 5.0;
        const auto rep = run_sca(d);
        const double exact = std::log2(1.0 + d.p_t * std::norm(d.channels.H(0, 0)));
        if (rep.status != SolveStatus::Optimal || std::abs(rep.achieved_mmf - exact) > 1e-3) {
            ok = false;
            why += "single-user closed form missed; ";
        }
    }

    // two orthogonal users: MMF = common-rate waterline found by bisection
    {
        ProblemData d;
        d.channels.F.resize(0, 0);
        d.channels.f_amp.resize(0, 0);
        d.channels.f_phase.resize(0, 0);
        d.channels.Z.resize(0, 2);
        d.channels.z_amp.resize(0, 2);
        d.channels.z_phase.resize(0, 2);
        d.channels.H = MatrixXcd::Zero(2, 2);
        d.channels.H(0, 0) = 1.1;
        d.channels.H(1, 1) = {0.0, 0.7};
        d.p_s = 0.0;
        d.p_t = 6.0;
        d.strategy = Strategy::Sdma;
        const auto rep = run_sca(d);
        // orthogonal channels: optimum splits power so both private rates are
        // equal; bisect on the common per-user rate target
        const double g1 = std::norm(d.channels.H(0, 0)), g2 = std::norm(d.channels.H(1, 1));
        double lo = 0.0, hi = std::log2(1.0 + d.p_t * std::max(g1, g2));
        for (int it = 0; it < 200; ++it) {
            const double q = 0.5 * (lo + hi);
            const double need = (std::pow(2.0, q) - 1.0) / g1 + (std::pow(2.0, q) - 1.0) / g2;
            (need <= d.p_t ? lo : hi) = q;
        }
        if (rep.status != SolveStatus::Optimal || std::abs(rep.achieved_mmf - lo) > 1e-3) {
            ok = false;
            why += "orthogonal two-user closed form missed; ";
        }
    }

    verdict(7, ok,
            ok ? "Taylor bound, SOC-log tangent, boresight gain, characteristic function, SINR "
                 "oracle and closed-form solutions all within tolerance"
               : why);
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    const RobustStudy st = run_robust_study();
    criterion4(st);
    criterion5(st);
    criterion6(st);
    criterion7();
    std::printf("acceptance: %s (%.0f s)\n", g_failures == 0 ? "ALL PASS" : "FAILURES PRESENT",
                seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
