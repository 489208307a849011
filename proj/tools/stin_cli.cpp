#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "stin/robust.hpp"
#include "stin/scenario.hpp"

using namespace stin;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ChannelSet make_channels(int n_s, int rho, int k_t, std::uint64_t seed,
                         const std::string& load_path) {
    if (!load_path.empty()) return load_channels(read_file(load_path));
    SatelliteGeometry sat;
    sat.beam_centers = ring_beam_centers(n_s, sat.three_db_angle_deg);
    return sample_channel_set(sat, TerrestrialGeometry{}, rho, k_t, seed);
}

std::uint64_t env_seed(std::uint64_t fallback) {
    if (const char* s = std::getenv("STIN_SEED")) return std::strtoull(s, nullptr, 10);
    return fallback;
}

std::string env_outdir(const std::string& fallback) {
    if (const char* s = std::getenv("STIN_OUTDIR")) return s;
    return fallback;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-min fair beamforming for satellite-terrestrial integrated networks"};
    app.require_subcommand(1);

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "Optimize one instance and print the report as JSON");
    std::string mode = "coordinated", strategy = "rsma", load_path;
    double p_t_db = 20.0, p_s_w = 120.0, delta_sq_deg = 0.0;
    std::uint64_t seed = 1;
    int n_s = 3, rho = 2, k_t = 4;
    solve->add_option("--mode", mode, "coordinated|cooperative");
    solve->add_option("--strategy", strategy, "rsma|sdma|noma");
    solve->add_option("--p-t-db", p_t_db, "BS power in dB over unit noise");
    solve->add_option("--p-s", p_s_w, "satellite power in Watts");
    solve->add_option("--delta-sq-deg", delta_sq_deg,
                      "phase uncertainty (degrees); > 0 selects the robust solver");
    solve->add_option("--seed", seed, "channel realization seed");
    solve->add_option("--n-s", n_s, "satellite beams");
    solve->add_option("--rho", rho, "users per beam");
    solve->add_option("--k-t", k_t, "cellular users");
    solve->add_option("--load-channels", load_path, "JSON channel dump to reuse");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "Run a Monte Carlo sweep from a config file");
    std::string config_path, out_dir = ".";
    sweep->add_option("--config", config_path, "ScenarioConfig JSON")->required();
    sweep->add_option("--out", out_dir, "output directory for results.csv / summary.json");

    // ---- validate ----
    auto* validate = app.add_subcommand("validate", "Run the invariant suite on small instances");

    // ---- dump-channels ----
    auto* dump = app.add_subcommand("dump-channels", "Sample a channel set and print it as JSON");
    std::uint64_t dump_seed = 1;
    int d_ns = 3, d_rho = 2, d_kt = 4;
    std::string dump_out;
    dump->add_option("--seed", dump_seed, "realization seed");
    dump->add_option("--n-s", d_ns, "satellite beams");
    dump->add_option("--rho", d_rho, "users per beam");
    dump->add_option("--k-t", d_kt, "cellular users");
    dump->add_option("--out", dump_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            ProblemData d;
            d.channels = make_channels(n_s, rho, k_t, env_seed(seed), load_path);
            d.p_s = p_s_w;
            d.p_t = db_to_linear(p_t_db);
            d.mode = mode == "cooperative" ? Mode::Cooperative : Mode::Coordinated;
            d.strategy = strategy == "sdma"   ? Strategy::Sdma
                         : strategy == "noma" ? Strategy::Noma
                                              : Strategy::Rsma;
            SolveReport rep;
            if (delta_sq_deg > 0) {
                const auto unc = make_uncertainty(d.channels, delta_sq_radians(delta_sq_deg));
                rep = run_robust(d, unc);
            } else {
                rep = run_sca(d);
            }
            std::cout << rep.to_json() << "\n";
            return rep.status == SolveStatus::NumericalFailure ? 1 : 0;
        }

        if (*sweep) {
            ScenarioConfig cfg = ScenarioConfig::from_json(read_file(config_path));
            cfg.master_seed = env_seed(cfg.master_seed);
            const std::string dir = env_outdir(out_dir);
            const SweepResult res = run_sweep(cfg);
            emit_results(res, cfg, dir);
            std::fprintf(stderr, "wrote %s/results.csv and %s/summary.json\n", dir.c_str(),
                         dir.c_str());
            return res.any_numerical_failure ? 1 : 0;
        }

        if (*validate) {
            // small paired sweep exercising the dominance and determinism invariants
            ScenarioConfig cfg;
            cfg.n_s = 2;
            cfg.rho = 1;
            cfg.k_t = 2;
            cfg.terr.n1 = 2;
            cfg.terr.n2 = 2;
            cfg.schemes = {"coordinated", "cooperative"};
            cfg.strategies = {"rsma", "sdma"};
            cfg.p_t_db = {20.0};
            cfg.p_s_w = {120.0};
            cfg.realizations = 3;
            cfg.sca.max_iterations = 25;
            cfg.master_seed = env_seed(7);
            const SweepResult a = run_sweep(cfg);
            const SweepResult b = run_sweep(cfg);
            bool ok = !a.any_numerical_failure;
            auto cell = [&](const SweepResult& r, const std::string& scheme,
                            const std::string& strat) -> const CellStats& {
                for (const auto& c : r.cells)
                    if (c.cell.scheme == scheme && c.cell.strategy == strat) return c;
                throw std::runtime_error("missing cell");
            };
            for (int r = 0; r < cfg.realizations; ++r) {
                const double crs = cell(a, "coordinated", "rsma").mmf[r];
                const double csd = cell(a, "coordinated", "sdma").mmf[r];
                const double prs = cell(a, "cooperative", "rsma").mmf[r];
                if (crs < csd - 1e-4) ok = false;
                if (prs < crs - 1e-4) ok = false;
            }
            for (size_t i = 0; i < a.cells.size(); ++i)
                for (size_t r = 0; r < a.cells[i].mmf.size(); ++r)
                    if (a.cells[i].mmf[r] != b.cells[i].mmf[r]) ok = false;
            std::printf("dominance and determinism checks: %s\n", ok ? "pass" : "FAIL");
            return ok ? 0 : 1;
        }

        if (*dump) {
            SatelliteGeometry sat;
            sat.beam_centers = ring_beam_centers(d_ns, sat.three_db_angle_deg);
            const std::uint64_t s = env_seed(dump_seed);
            const ChannelSet ch = sample_channel_set(sat, TerrestrialGeometry{}, d_rho, d_kt, s);
            const std::string text = dump_channels(ch, s);
            if (dump_out.empty()) {
                std::cout << text << "\n";
            } else {
                std::ofstream out(dump_out);
                if (!out) throw std::runtime_error("cannot write " + dump_out);
                out << text << "\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
