#include "doctest.h"

#include "stin/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace stin;

namespace {

ScenarioConfig tiny_config() {
    ScenarioConfig cfg;
    cfg.n_s = 2;
    cfg.rho = 1;
    cfg.k_t = 2;
    cfg.terr.n1 = 2;
    cfg.terr.n2 = 2;
    cfg.p_s_w = {4.0};
    cfg.p_t_db = {10.0};
    cfg.realizations = 2;
    cfg.master_seed = 9;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("unit conversions") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(20.0) == doctest::Approx(100.0));
    CHECK(delta_sq_radians(45.0) == doctest::Approx(45.0 * M_PI / 180.0));
    CHECK(delta_sq_radians(0.0) == 0.0);
}

TEST_CASE("grid enumerates supported combinations only") {
    ScenarioConfig cfg = tiny_config();
    cfg.schemes = {"coordinated", "cooperative", "baseline_two_step"};
    cfg.strategies = {"rsma", "sdma", "noma"};
    cfg.p_t_db = {10.0, 20.0};
    cfg.delta_sq_deg = {0.0, 15.0};
    const auto cells = cfg.grid();
    int coop_noma = 0, robust_noma = 0, robust_baseline = 0, baselines = 0;
    for (const auto& c : cells) {
        if (c.scheme == "cooperative" && c.strategy == "noma") ++coop_noma;
        if (c.strategy == "noma" && c.delta_sq_deg > 0) ++robust_noma;
        if (c.scheme == "baseline_two_step") {
            ++baselines;
            if (c.delta_sq_deg > 0) ++robust_baseline;
        }
    }
    CHECK(coop_noma == 0);
    CHECK(robust_noma == 0);
    CHECK(robust_baseline == 0);
    CHECK(baselines == 2); // once per power point
    // coordinated: rsma/sdma at two delta levels + noma at delta=0 -> 5 per power
    // cooperative: rsma/sdma at two delta levels -> 4 per power
    CHECK(cells.size() == 2 * (5 + 4 + 1));
}

TEST_CASE("config parses from json and keeps defaults for missing keys") {
    const auto cfg = ScenarioConfig::from_json(R"({
        "n_s": 2, "rho": 1, "k_t": 3,
        "terrestrial": {"n1": 2, "n2": 2},
        "strategies": ["rsma", "sdma"],
        "p_t_db": [5, 15],
        "realizations": 7,
        "master_seed": 123
    })");
    CHECK(cfg.n_s == 2);
    CHECK(cfg.k_t == 3);
    CHECK(cfg.terr.n1 == 2);
    CHECK(cfg.strategies.size() == 2);
    CHECK(cfg.p_t_db == std::vector<double>{5.0, 15.0});
    CHECK(cfg.realizations == 7);
    CHECK(cfg.master_seed == 123);
    CHECK(cfg.schemes == std::vector<std::string>{"coordinated"}); // default
    CHECK(cfg.p_s_w == std::vector<double>{120.0});                // default
}

TEST_CASE("sweeps are deterministic and strategy/scheme dominance holds per realization") {
    ScenarioConfig cfg = tiny_config();
    cfg.schemes = {"coordinated", "cooperative"};
    cfg.strategies = {"rsma", "sdma"};
    const auto res1 = run_sweep(cfg);
    const auto res2 = run_sweep(cfg);
    REQUIRE(res1.cells.size() == 4);
    CHECK_FALSE(res1.any_numerical_failure);
    auto idx = [&](const std::string& scheme, const std::string& strat) {
        for (size_t i = 0; i < res1.cells.size(); ++i)
            if (res1.cells[i].cell.scheme == scheme && res1.cells[i].cell.strategy == strat)
                return i;
        return size_t(99);
    };
    for (size_t i = 0; i < res1.cells.size(); ++i)
        for (int r = 0; r < cfg.realizations; ++r)
            CHECK(res1.cells[i].mmf[r] == res2.cells[i].mmf[r]); // bitwise
    for (int r = 0; r < cfg.realizations; ++r) {
        CHECK(res1.cells[idx("coordinated", "rsma")].mmf[r] >=
              res1.cells[idx("coordinated", "sdma")].mmf[r] - 1e-4);
        CHECK(res1.cells[idx("cooperative", "rsma")].mmf[r] >=
              res1.cells[idx("cooperative", "sdma")].mmf[r] - 1e-4);
        CHECK(res1.cells[idx("cooperative", "rsma")].mmf[r] >=
              res1.cells[idx("coordinated", "rsma")].mmf[r] - 1e-4);
    }
}

TEST_CASE("two-step baseline decouples exactly when the satellite does not reach the CUs") {
    ScenarioConfig cfg = tiny_config();
    ProblemData d;
    d.channels = sample_channel_set(
        [&] {
            SatelliteGeometry s = cfg.sat;
            s.beam_centers = ring_beam_centers(cfg.n_s, s.three_db_angle_deg);
            return s;
        }(),
        cfg.terr, cfg.rho, cfg.k_t, 77);
    d.channels.Z.setZero();
    d.channels.z_amp.setZero();
    d.p_s = 4.0;
    d.p_t = 10.0;

    const auto two_step = baseline_two_step(d, cfg.sca);
    REQUIRE(two_step.status == SolveStatus::Optimal);

    // oracle: with Z = 0 the sub-networks are independent, so the two-step
    // result must equal the min of the separately optimized sides
    ProblemData sat_only = d;
    sat_only.channels.Z.resize(2, 0);
    sat_only.channels.z_amp.resize(2, 0);
    sat_only.channels.z_phase.resize(2, 0);
    sat_only.channels.H.resize(4, 0);
    ProblemData bs_only = d;
    bs_only.channels.F.resize(0, 0);
    bs_only.channels.f_amp.resize(0, 0);
    bs_only.channels.f_phase.resize(0, 0);
    bs_only.channels.Z.resize(0, 2);
    bs_only.channels.z_amp.resize(0, 2);
    bs_only.channels.z_phase.resize(0, 2);
    bs_only.channels.group_map.clear();
    const auto sat_rep = run_sca(sat_only, cfg.sca);
    const auto bs_rep = run_sca(bs_only, cfg.sca);
    REQUIRE(sat_rep.status == SolveStatus::Optimal);
    REQUIRE(bs_rep.status == SolveStatus::Optimal);
    const double oracle =
        std::min(sat_rep.beam_rates.minCoeff(), bs_rep.cu_rates.minCoeff());
    CHECK(two_step.achieved_mmf == doctest::Approx(oracle).epsilon(5e-3));
}

TEST_CASE("orthogonal baseline pays the half pre-log on otherwise independent sides") {
    ScenarioConfig cfg = tiny_config();
    SatelliteGeometry s = cfg.sat;
    s.beam_centers = ring_beam_centers(cfg.n_s, s.three_db_angle_deg);
    ProblemData d;
    d.channels = sample_channel_set(s, cfg.terr, cfg.rho, cfg.k_t, 78);
    d.p_s = 4.0;
    d.p_t = 10.0;
    const auto orth = baseline_orthogonal(d, cfg.sca);
    REQUIRE(orth.status == SolveStatus::Optimal);

    ProblemData sat_only = d;
    sat_only.channels.Z.resize(2, 0);
    sat_only.channels.z_amp.resize(2, 0);
    sat_only.channels.z_phase.resize(2, 0);
    sat_only.channels.H.resize(4, 0);
    ProblemData bs_only = d;
    bs_only.channels.F.resize(0, 0);
    bs_only.channels.f_amp.resize(0, 0);
    bs_only.channels.f_phase.resize(0, 0);
    bs_only.channels.Z.resize(0, 2);
    bs_only.channels.z_amp.resize(0, 2);
    bs_only.channels.z_phase.resize(0, 2);
    bs_only.channels.group_map.clear();
    const auto sat_rep = run_sca(sat_only, cfg.sca);
    const auto bs_rep = run_sca(bs_only, cfg.sca);
    const double oracle =
        0.5 * std::min(sat_rep.beam_rates.minCoeff(), bs_rep.cu_rates.minCoeff());
    CHECK(orth.achieved_mmf == doctest::Approx(oracle).epsilon(5e-3));
}

TEST_CASE("result files are bit-identical across reruns and carry one row per cell-realization") {
    ScenarioConfig cfg = tiny_config();
    cfg.strategies = {"rsma", "sdma"};
    const auto res = run_sweep(cfg);
    const std::string dir = "./scenario_test_out";
    emit_results(res, cfg, dir);
    const std::string csv1 = slurp(dir + "/results.csv");
    const std::string json1 = slurp(dir + "/summary.json");
    emit_results(res, cfg, dir);
    CHECK(slurp(dir + "/results.csv") == csv1);
    CHECK(slurp(dir + "/summary.json") == json1);
    // header + 2 cells x 2 realizations
    CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 1 + 4);
    CHECK(json1.find("\"delta_sq_unit\"") != std::string::npos);
    std::remove((dir + "/results.csv").c_str());
    std::remove((dir + "/summary.json").c_str());
}

TEST_CASE("cell statistics match a direct recomputation from the per-realization rates") {
    ScenarioConfig cfg = tiny_config();
    cfg.realizations = 3;
    const auto res = run_sweep(cfg);
    REQUIRE(res.cells.size() == 1);
    const auto& cs = res.cells[0];
    REQUIRE(cs.failures == 0);
    double mean = 0;
    for (double v : cs.mmf) mean += v;
    mean /= cs.mmf.size();
    double var = 0;
    for (double v : cs.mmf) var += (v - mean) * (v - mean);
    var /= (cs.mmf.size() - 1);
    CHECK(cs.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(cs.stderr_mean == doctest::Approx(std::sqrt(var / cs.mmf.size())).epsilon(1e-12));
}
