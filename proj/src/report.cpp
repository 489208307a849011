#include "stin/report.hpp"

#include "json.hpp"

namespace stin {

namespace {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        default: return "numerical_failure";
    }
}

nlohmann::json vec_json(const VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

} // namespace

std::string SolveReport::to_json() const {
    nlohmann::json j;
    j["status"] = status_name(status);
    j["mode"] = mode == Mode::Coordinated ? "coordinated" : "cooperative";
    j["strategy"] = strategy == Strategy::Rsma   ? "rsma"
                    : strategy == Strategy::Sdma ? "sdma"
                                                 : "noma";
    j["objective_trace"] = objective_trace;
    j["q_final"] = q_final;
    j["achieved_mmf"] = achieved_mmf;
    j["beam_rates"] = vec_json(beam_rates);
    j["cu_rates"] = vec_json(cu_rates);
    j["portions"]["c_sat"] = vec_json(portions.c_sat);
    j["portions"]["c_bs"] = vec_json(portions.c_bs);
    j["power_residual"] = power_residual;
    j["portions_feasible"] = portions_feasible;
    j["iterations"] = iterations;
    j["solve_seconds"] = solve_seconds;
    if (!rank_one_residuals.empty()) {
        j["rank_one_residuals"] = rank_one_residuals;
        j["beta_trace"] = beta_trace;
        j["expected_mmf"] = expected_mmf;
    }
    return j.dump(2);
}

} // namespace stin
