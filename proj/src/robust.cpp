#include "stin/robust.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "stin/rng.hpp"

namespace stin {

double rank_one_residual(const MatrixXcd& x) {
    const double tr = x.trace().real();
    if (tr <= 0) throw std::invalid_argument("rank_one_residual: nonpositive trace");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(x, Eigen::EigenvaluesOnly);
    return 1.0 - es.eigenvalues().maxCoeff() / tr;
}

namespace {

struct Term {
    int lift;
    MatrixXcd a; // Hermitian coefficient: contribution is tr(a * X_lift)
};

// one expected-SINR constraint family: signal trace, interference traces
struct Entity {
    Term own;
    std::vector<Term> intf;
    double sigma2 = 1.0;
    int kind = 0; // 0 cu-private, 1 su-private, 2 cu-common, 3 su-common
    int user = 0;
};

struct RobustModel {
    std::vector<int> lift_dims;
    std::vector<std::string> lift_names;
    std::vector<Entity> entities;
    std::vector<std::vector<std::pair<int, int>>> feed_entries; // per feed: (lift, diag idx)
    double feed_budget = 0.0;
    std::vector<int> bs_trace_lifts;                  // coordinated: whole traces
    std::vector<std::pair<int, std::pair<int, int>>> bs_diag; // cooperative: diag ranges
    double bs_budget = 0.0;
    MatrixXcd u; // BS subspace basis
    Mode mode = Mode::Coordinated;
    std::vector<int> group_map;
    bool sat_active = false, bs_active = false, common = false;
    bool sus_present = false, cus_present = false;
    int n_s = 0, k_s = 0, k_t = 0, rdim = 0;
};

MatrixXcd bs_basis(const MatrixXcd& h) {
    if (h.cols() == 0 || h.rows() == 0) return MatrixXcd(h.rows(), 0);
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(h);
    qr.setThreshold(1e-12);
    return MatrixXcd(qr.householderQ()).leftCols(static_cast<int>(qr.rank()));
}

RobustModel build_model(const ProblemData& d, const PhaseUncertaintyModel& unc) {
    const auto& ch = d.channels;
    RobustModel m;
    m.n_s = ch.num_beams();
    m.k_s = ch.num_sus();
    m.k_t = ch.num_cus();
    m.mode = d.mode;
    m.group_map = ch.group_map;
    m.sus_present = m.n_s > 0 && m.k_s > 0;
    m.cus_present = m.k_t > 0;
    m.sat_active = m.sus_present && d.p_s > 0;
    m.bs_active = m.cus_present && ch.num_bs_antennas() > 0 && d.p_t > 0;
    m.common = d.strategy == Strategy::Rsma;
    if (d.strategy == Strategy::Noma)
        throw std::invalid_argument("robust design supports rsma and sdma only");
    m.u = bs_basis(ch.H);
    m.rdim = static_cast<int>(m.u.cols());
    m.feed_budget = m.n_s > 0 ? d.p_s / m.n_s : 0.0;
    m.bs_budget = d.p_t;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);
    const CorrelationSet cs = build_correlation_matrices(unc, ch.f_amp, ch.z_amp);

    auto add_lift = [&](const std::string& name, int dim) {
        m.lift_names.push_back(name);
        m.lift_dims.push_back(dim);
        return static_cast<int>(m.lift_dims.size()) - 1;
    };

    if (d.mode == Mode::Coordinated) {
        int wc = -1, pc = -1;
        std::vector<int> w, p;
        if (m.sat_active) {
            if (m.common) wc = add_lift("Wc", m.n_s);
            for (int n = 0; n < m.n_s; ++n) w.push_back(add_lift("W" + std::to_string(n), m.n_s));
        }
        if (m.bs_active) {
            if (m.common) pc = add_lift("Pc", m.rdim);
            for (int k = 0; k < m.k_t; ++k) p.push_back(add_lift("P" + std::to_string(k), m.rdim));
        }
        if (m.bs_active) {
            for (int k = 0; k < m.k_t; ++k) {
                const VectorXcd hr = m.u.adjoint() * ch.H.col(k);
                const MatrixXcd hh = hr * hr.adjoint();
                Entity e;
                e.kind = 0;
                e.user = k;
                e.sigma2 = s2cu(k);
                e.own = {p[k], hh};
                for (int j = 0; j < m.k_t; ++j)
                    if (j != k) e.intf.push_back({p[j], hh});
                if (m.sat_active) {
                    if (m.common) e.intf.push_back({wc, cs.z_bar[k]});
                    for (int i = 0; i < m.n_s; ++i) e.intf.push_back({w[i], cs.z_bar[k]});
                }
                m.entities.push_back(e);
                if (m.common) {
                    Entity c = e;
                    c.kind = 2;
                    c.own = {pc, hh};
                    c.intf.push_back({p[k], hh}); // own private not yet decoded
                    m.entities.push_back(c);
                }
            }
        }
        if (m.sat_active) {
            for (int k = 0; k < m.k_s; ++k) {
                const int own = ch.group_map[k];
                Entity e;
                e.kind = 1;
                e.user = k;
                e.sigma2 = s2su(k);
                e.own = {w[own], cs.f_bar[k]};
                for (int i = 0; i < m.n_s; ++i)
                    if (i != own) e.intf.push_back({w[i], cs.f_bar[k]});
                m.entities.push_back(e);
                if (m.common) {
                    Entity c = e;
                    c.kind = 3;
                    c.own = {wc, cs.f_bar[k]};
                    c.intf.push_back({w[own], cs.f_bar[k]});
                    m.entities.push_back(c);
                }
            }
            m.feed_entries.resize(m.n_s);
            for (int n = 0; n < m.n_s; ++n) {
                if (wc >= 0) m.feed_entries[n].emplace_back(wc, n);
                for (int i : w) m.feed_entries[n].emplace_back(i, n);
            }
        }
        if (m.bs_active) {
            if (pc >= 0) m.bs_trace_lifts.push_back(pc);
            for (int i : p) m.bs_trace_lifts.push_back(i);
        }
        return m;
    }

    // cooperative: one aggregate space [satellite rows; reduced BS rows]
    const int ms = m.sat_active ? m.n_s : 0;
    const int rb = m.bs_active ? m.rdim : 0;
    const int dim = ms + rb;
    if (dim == 0) return m;
    const double cross = std::exp(-unc.delta_sq / 2.0); // E e^{j phase error}
    int vc = -1;
    std::vector<int> streams;
    if (m.common) vc = add_lift("Vc", dim);
    if (m.sat_active)
        for (int n = 0; n < m.n_s; ++n) streams.push_back(add_lift("Vs" + std::to_string(n), dim));
    if (m.bs_active)
        for (int k = 0; k < m.k_t; ++k) streams.push_back(add_lift("Vb" + std::to_string(k), dim));
    if (streams.empty()) return m;

    auto su_corr = [&](int k) {
        MatrixXcd g = MatrixXcd::Zero(dim, dim);
        g.topLeftCorner(ms, ms) = cs.f_bar[k];
        return g;
    };
    auto cu_corr = [&](int k) {
        MatrixXcd g = MatrixXcd::Zero(dim, dim);
        const VectorXcd hr = rb ? VectorXcd(m.u.adjoint() * ch.H.col(k)) : VectorXcd();
        if (ms) {
            g.topLeftCorner(ms, ms) = cs.z_bar[k];
            if (rb) {
                const VectorXcd zhat = ch.Z.col(k); // estimated phases = sampled ones
                g.topRightCorner(ms, rb) = cross * zhat * hr.adjoint();
                g.bottomLeftCorner(rb, ms) = g.topRightCorner(ms, rb).adjoint();
            }
        }
        if (rb) g.bottomRightCorner(rb, rb) = hr * hr.adjoint();
        return g;
    };

    if (m.sat_active) {
        for (int k = 0; k < m.k_s; ++k) {
            const MatrixXcd g = su_corr(k);
            const int own = ch.group_map[k];
            Entity e;
            e.kind = 1;
            e.user = k;
            e.sigma2 = s2su(k);
            e.own = {streams[own], g};
            for (size_t j = 0; j < streams.size(); ++j)
                if (static_cast<int>(j) != own) e.intf.push_back({streams[j], g});
            m.entities.push_back(e);
            if (m.common) {
                Entity c = e;
                c.kind = 3;
                c.own = {vc, g};
                c.intf.push_back({streams[own], g});
                m.entities.push_back(c);
            }
        }
    }
    if (m.bs_active) {
        for (int k = 0; k < m.k_t; ++k) {
            const MatrixXcd g = cu_corr(k);
            const int own = (m.sat_active ? m.n_s : 0) + k;
            Entity e;
            e.kind = 0;
            e.user = k;
            e.sigma2 = s2cu(k);
            e.own = {streams[own], g};
            for (size_t j = 0; j < streams.size(); ++j)
                if (static_cast<int>(j) != own) e.intf.push_back({streams[j], g});
            m.entities.push_back(e);
            if (m.common) {
                Entity c = e;
                c.kind = 2;
                c.own = {vc, g};
                c.intf.push_back({streams[own], g});
                m.entities.push_back(c);
            }
        }
    }
    std::vector<int> all = streams;
    if (vc >= 0) all.push_back(vc);
    if (m.sat_active) {
        m.feed_entries.resize(m.n_s);
        for (int n = 0; n < m.n_s; ++n)
            for (int i : all) m.feed_entries[n].emplace_back(i, n);
    }
    if (m.bs_active)
        for (int i : all) m.bs_diag.emplace_back(i, std::make_pair(ms, rb));
    return m;
}

double eval_term(const Term& t, const std::vector<MatrixXcd>& lifts) {
    return (t.a * lifts[t.lift]).trace().real();
}

void eval_entity(const Entity& e, const std::vector<MatrixXcd>& lifts, double& num, double& in) {
    num = eval_term(e.own, lifts);
    in = e.sigma2;
    for (const auto& t : e.intf) in += eval_term(t, lifts);
}

struct RobustState {
    std::vector<MatrixXcd> lifts;
    std::vector<VectorXcd> v0; // principal eigenvectors, one per lift
    VectorXd t0, xi0;          // per entity: full power and log-interference
    double beta = 10.0;
};

void refresh_expansion(const RobustModel& m, RobustState& st) {
    st.v0.resize(st.lifts.size());
    for (size_t i = 0; i < st.lifts.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(st.lifts[i]);
        st.v0[i] = es.eigenvectors().col(st.lifts[i].rows() - 1);
    }
    st.t0.resize(m.entities.size());
    st.xi0.resize(m.entities.size());
    for (size_t i = 0; i < m.entities.size(); ++i) {
        double num, in;
        eval_entity(m.entities[i], st.lifts, num, in);
        st.t0(i) = std::max(num + in, 1e-12);
        st.xi0(i) = std::log(std::max(in, 1e-12));
    }
}

struct BuiltRobust {
    ConicProblem prob;
    std::vector<int> lift_vars, c_sat, c_bs;
    int q = -1;
};

BuiltRobust build_subproblem(const RobustModel& m, const RobustState& st) {
    BuiltRobust b;
    auto& pr = b.prob;
    b.q = pr.add_scalar("q");
    for (size_t i = 0; i < m.lift_dims.size(); ++i) {
        b.lift_vars.push_back(pr.add_hermitian(m.lift_names[i], m.lift_dims[i]));
        pr.add_psd(b.lift_vars.back());
    }
    if (m.common) {
        if (m.sat_active)
            for (int n = 0; n < m.n_s; ++n) b.c_sat.push_back(pr.add_scalar("Cs" + std::to_string(n)));
        if (m.bs_active)
            for (int k = 0; k < m.k_t; ++k) b.c_bs.push_back(pr.add_scalar("Cb" + std::to_string(k)));
        for (int v : b.c_sat) pr.add_ineq(-pr.scalar(v));
        for (int v : b.c_bs) pr.add_ineq(-pr.scalar(v));
    }

    // objective: q - beta * sum[ tr(X) - v0^H X v0 ]
    LinExpr obj = pr.scalar(b.q);
    for (size_t i = 0; i < b.lift_vars.size(); ++i) {
        const MatrixXcd vv = st.v0[i] * st.v0[i].adjoint();
        obj -= st.beta * (pr.trace(b.lift_vars[i]) - pr.trace_product(vv, b.lift_vars[i]));
    }
    pr.set_objective(obj);

    LinExpr csum_sat, csum_bs, csum_all;
    for (int v : b.c_sat) csum_sat += pr.scalar(v);
    for (int v : b.c_bs) csum_bs += pr.scalar(v);
    csum_all = csum_sat + csum_bs;

    std::vector<int> rate_cu(m.k_t, -1), rate_su(m.k_s, -1);
    for (size_t i = 0; i < m.entities.size(); ++i) {
        const Entity& e = m.entities[i];
        LinExpr num = pr.trace_product(e.own.a, b.lift_vars[e.own.lift]);
        LinExpr in = LinExpr(e.sigma2);
        for (const auto& t : e.intf) in += pr.trace_product(t.a, b.lift_vars[t.lift]);

        const int t_var = pr.add_scalar("t" + std::to_string(i));
        const int eta = pr.add_scalar("eta" + std::to_string(i));
        const int xi = pr.add_scalar("xi" + std::to_string(i));
        // t <= signal + interference
        pr.add_ineq(pr.scalar(t_var) - num - in);
        // eta <= log t via the tangent SOC device at t0
        const double c = std::log(st.t0(i)) + 1.0;
        std::vector<LinExpr> rows;
        rows.push_back(pr.scalar(t_var) + pr.scalar(eta) - LinExpr(c));
        rows.push_back(LinExpr(2.0 * std::sqrt(st.t0(i))));
        pr.add_soc(std::move(rows), pr.scalar(t_var) - pr.scalar(eta) + LinExpr(c));
        // interference <= e^{xi0} (xi - xi0 + 1)
        const double ex = std::exp(st.xi0(i));
        pr.add_ineq(in - ex * pr.scalar(xi) + LinExpr(ex * (st.xi0(i) - 1.0)));

        // eta - xi >= rate * ln2, plus the epigraph link for private rates
        LinExpr rate_ln2;
        if (e.kind == 0 || e.kind == 1) {
            const int rv = pr.add_scalar("rate" + std::to_string(i));
            (e.kind == 0 ? rate_cu[e.user] : rate_su[e.user]) = rv;
            rate_ln2 = M_LN2 * pr.scalar(rv);
        } else if (m.mode == Mode::Cooperative) {
            rate_ln2 = M_LN2 * csum_all; // single super common stream
        } else {
            rate_ln2 = M_LN2 * (e.kind == 2 ? csum_bs : csum_sat);
        }
        pr.add_ineq(rate_ln2 - pr.scalar(eta) + pr.scalar(xi));
    }

    // epigraph links q <= rate + portion
    for (int k = 0; k < m.k_t; ++k) {
        if (rate_cu[k] < 0) continue;
        LinExpr link = pr.scalar(b.q) - pr.scalar(rate_cu[k]);
        if (m.common && !b.c_bs.empty()) link -= pr.scalar(b.c_bs[k]);
        pr.add_ineq(link);
    }
    for (int k = 0; k < m.k_s; ++k) {
        if (rate_su[k] < 0) continue;
        LinExpr link = pr.scalar(b.q) - pr.scalar(rate_su[k]);
        if (m.common && !b.c_sat.empty()) link -= pr.scalar(b.c_sat[m.group_map[k]]);
        pr.add_ineq(link);
    }
    if (!m.sat_active && m.sus_present) pr.add_ineq(pr.scalar(b.q));
    if (!m.bs_active && m.cus_present) pr.add_ineq(pr.scalar(b.q));
    if (!m.sus_present && !m.cus_present) pr.add_ineq(pr.scalar(b.q));

    // power
    for (const auto& feed : m.feed_entries) {
        LinExpr p;
        for (const auto& [lift, idx] : feed) {
            MatrixXcd enn = MatrixXcd::Zero(m.lift_dims[lift], m.lift_dims[lift]);
            enn(idx, idx) = 1.0;
            p += pr.trace_product(enn, b.lift_vars[lift]);
        }
        pr.add_ineq(p - LinExpr(m.feed_budget));
    }
    if (!m.bs_trace_lifts.empty()) {
        LinExpr p;
        for (int lift : m.bs_trace_lifts) p += pr.trace(b.lift_vars[lift]);
        pr.add_ineq(p - LinExpr(m.bs_budget));
    }
    if (!m.bs_diag.empty()) {
        LinExpr p;
        for (const auto& [lift, range] : m.bs_diag) {
            MatrixXcd sel = MatrixXcd::Zero(m.lift_dims[lift], m.lift_dims[lift]);
            for (int i = 0; i < range.second; ++i) sel(range.first + i, range.first + i) = 1.0;
            p += pr.trace_product(sel, b.lift_vars[lift]);
        }
        pr.add_ineq(p - LinExpr(m.bs_budget));
    }
    return b;
}

} // namespace

SinrTables expected_sinr_tables(const ProblemData& d, const PhaseUncertaintyModel& unc,
                                const BeamformerSet& bf) {
    const RobustModel m = build_model(d, unc);
    // lifts = outer products of the beamformer columns in model order
    std::vector<MatrixXcd> lifts;
    auto outer = [](const VectorXcd& v) { return MatrixXcd(v * v.adjoint()); };
    if (d.mode == Mode::Coordinated) {
        if (m.sat_active) {
            if (m.common) lifts.push_back(outer(bf.W.col(0)));
            for (int n = 0; n < m.n_s; ++n) lifts.push_back(outer(bf.W.col(1 + n)));
        }
        if (m.bs_active) {
            if (m.common) lifts.push_back(outer(m.u.adjoint() * bf.P.col(0)));
            for (int k = 0; k < m.k_t; ++k) lifts.push_back(outer(m.u.adjoint() * bf.P.col(1 + k)));
        }
    } else {
        const int ms = m.sat_active ? m.n_s : 0;
        auto reduce = [&](const VectorXcd& full) {
            VectorXcd v(ms + (m.bs_active ? m.rdim : 0));
            if (ms) v.head(ms) = full.head(m.n_s);
            if (m.bs_active) v.tail(m.rdim) = m.u.adjoint() * full.tail(d.channels.num_bs_antennas());
            return v;
        };
        if (m.common) lifts.push_back(outer(reduce(bf.V.col(0))));
        if (m.sat_active)
            for (int n = 0; n < m.n_s; ++n) lifts.push_back(outer(reduce(bf.V.col(1 + n))));
        if (m.bs_active)
            for (int k = 0; k < m.k_t; ++k) lifts.push_back(outer(reduce(bf.V.col(1 + m.n_s + k))));
    }
    SinrTables t;
    t.su_private.setZero(m.k_s);
    t.su_common.setZero(m.k_s);
    t.cu_private.setZero(m.k_t);
    t.cu_common.setZero(m.k_t);
    for (const Entity& e : m.entities) {
        double num, in;
        eval_entity(e, lifts, num, in);
        const double sinr = num / in;
        switch (e.kind) {
            case 0: t.cu_private(e.user) = sinr; break;
            case 1: t.su_private(e.user) = sinr; break;
            case 2: t.cu_common(e.user) = sinr; break;
            default: t.su_common(e.user) = sinr; break;
        }
    }
    return t;
}

SolveReport run_robust(const ProblemData& d, const PhaseUncertaintyModel& unc,
                       const RobustConfig& cfg) {
    // warm start from the perfect-CSIT design on the estimated channels
    const SolveReport warm = run_sca(d, cfg.warm_start);
    if (warm.status != SolveStatus::Optimal) {
        SolveReport rep;
        rep.mode = d.mode;
        rep.strategy = d.strategy;
        rep.status = warm.status;
        return rep;
    }
    return run_robust(d, unc, cfg, warm.beamformers);
}

SolveReport run_robust(const ProblemData& d, const PhaseUncertaintyModel& unc,
                       const RobustConfig& cfg, const BeamformerSet& warm_bf) {
    const auto tstart = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.mode = d.mode;
    rep.strategy = d.strategy;

    const RobustModel m = build_model(d, unc);
    RobustState st;
    st.beta = cfg.beta0;
    {
        const BeamformerSet& bf = warm_bf;
        auto outer = [](const VectorXcd& v) { return MatrixXcd(v * v.adjoint()); };
        if (d.mode == Mode::Coordinated) {
            if (m.sat_active) {
                if (m.common) st.lifts.push_back(outer(bf.W.col(0)));
                for (int n = 0; n < m.n_s; ++n) st.lifts.push_back(outer(bf.W.col(1 + n)));
            }
            if (m.bs_active) {
                if (m.common) st.lifts.push_back(outer(m.u.adjoint() * bf.P.col(0)));
                for (int k = 0; k < m.k_t; ++k)
                    st.lifts.push_back(outer(m.u.adjoint() * bf.P.col(1 + k)));
            }
        } else {
            const int ms = m.sat_active ? m.n_s : 0;
            auto reduce = [&](const VectorXcd& full) {
                VectorXcd v(ms + (m.bs_active ? m.rdim : 0));
                if (ms) v.head(ms) = full.head(m.n_s);
                if (m.bs_active)
                    v.tail(m.rdim) = m.u.adjoint() * full.tail(d.channels.num_bs_antennas());
                return v;
            };
            if (m.common) st.lifts.push_back(outer(reduce(bf.V.col(0))));
            if (m.sat_active)
                for (int n = 0; n < m.n_s; ++n) st.lifts.push_back(outer(reduce(bf.V.col(1 + n))));
            if (m.bs_active)
                for (int k = 0; k < m.k_t; ++k)
                    st.lifts.push_back(outer(reduce(bf.V.col(1 + m.n_s + k))));
        }
        // keep the expansion eigen-decomposable even for zero columns
        for (auto& x : st.lifts) x += 1e-9 * MatrixXcd::Identity(x.rows(), x.cols());
    }
    refresh_expansion(m, st);

    CommonRatePortions portions = CommonRatePortions::zeros(m.n_s, m.k_t);
    double q_lifted = 0.0;
    int stall = 0;
    double prev_max_res = 1.0;
    bool any_solved = false;
    bool failed = false;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        RobustState trial = st;
        ConicSolution sol;
        bool solved = false;
        BuiltRobust built;
        for (int attempt = 0; attempt <= 3; ++attempt) {
            built = build_subproblem(m, trial);
            sol = built.prob.solve(cfg.solver);
            if (sol.status == SolveStatus::Optimal) {
                solved = true;
                break;
            }
            for (size_t i = 0; i < trial.lifts.size(); ++i)
                trial.lifts[i] = 0.5 * (trial.lifts[i] + st.lifts[i]);
            refresh_expansion(m, trial);
        }
        if (!solved) {
            failed = !any_solved;
            break;
        }
        any_solved = true;
        for (size_t i = 0; i < st.lifts.size(); ++i)
            st.lifts[i] = built.prob.get_hermitian(sol, built.lift_vars[i]);
        q_lifted = built.prob.get_scalar(sol, built.q);
        for (size_t n = 0; n < built.c_sat.size(); ++n)
            portions.c_sat(n) = std::max(0.0, built.prob.get_scalar(sol, built.c_sat[n]));
        for (size_t k = 0; k < built.c_bs.size(); ++k)
            portions.c_bs(k) = std::max(0.0, built.prob.get_scalar(sol, built.c_bs[k]));
        rep.objective_trace.push_back(sol.objective); // q - PF
        ++rep.iterations;

        double max_res = 0.0;
        for (const auto& x : st.lifts) max_res = std::max(max_res, rank_one_residual(x));
        refresh_expansion(m, st);

        bool beta_changed = false;
        auto escalate = [&] {
            if (st.beta >= cfg.beta_cap) return;
            st.beta = std::min(st.beta * cfg.beta_factor, cfg.beta_cap);
            stall = 0;
            beta_changed = true;
            rep.beta_trace.push_back(st.beta);
        };
        if (max_res > cfg.residual_tol && max_res > prev_max_res - 1e-4) {
            if (++stall >= cfg.stall_window) escalate();
        } else {
            stall = 0;
        }
        prev_max_res = max_res;

        if (rep.objective_trace.size() >= 2 && !beta_changed) {
            const double diff = std::abs(rep.objective_trace.back() -
                                         rep.objective_trace[rep.objective_trace.size() - 2]);
            if (diff < cfg.epsilon) {
                // never declare convergence on a solution that is still far
                // from rank one while the penalty can be raised further
                if (max_res > cfg.residual_tol) {
                    escalate();
                    if (!beta_changed) break;
                } else {
                    break;
                }
            }
        }
    }
    if (failed) {
        rep.status = SolveStatus::NumericalFailure;
        return rep;
    }

    rep.q_final = q_lifted;
    for (const auto& x : st.lifts) rep.rank_one_residuals.push_back(rank_one_residual(x));
    rep.beta_trace.insert(rep.beta_trace.begin(), cfg.beta0);

    // EVD recovery: principal direction scaled to the lifted matrix's power
    auto recover = [](const MatrixXcd& x) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(x);
        return VectorXcd(es.eigenvectors().col(x.rows() - 1) * std::sqrt(x.trace().real()));
    };
    auto assemble = [&](const std::vector<MatrixXcd>& lifts) {
        size_t idx = 0;
        if (d.mode == Mode::Coordinated) {
            MatrixXcd w = MatrixXcd::Zero(m.n_s, m.n_s + 1);
            MatrixXcd p = MatrixXcd::Zero(d.channels.num_bs_antennas(), m.k_t + 1);
            if (m.sat_active) {
                if (m.common) w.col(0) = recover(lifts[idx++]);
                for (int n = 0; n < m.n_s; ++n) w.col(1 + n) = recover(lifts[idx++]);
            }
            if (m.bs_active) {
                if (m.common) p.col(0) = m.u * recover(lifts[idx++]);
                for (int k = 0; k < m.k_t; ++k) p.col(1 + k) = m.u * recover(lifts[idx++]);
            }
            return BeamformerSet::coordinated(std::move(w), std::move(p));
        }
        const int ms = m.sat_active ? m.n_s : 0;
        const int n_t = d.channels.num_bs_antennas();
        MatrixXcd v = MatrixXcd::Zero(m.n_s + n_t, m.n_s + m.k_t + 1);
        auto lift_up = [&](const VectorXcd& red) {
            VectorXcd full = VectorXcd::Zero(m.n_s + n_t);
            if (ms) full.head(m.n_s) = red.head(m.n_s);
            if (m.bs_active) full.tail(n_t) = m.u * red.tail(m.rdim);
            return full;
        };
        if (m.common) v.col(0) = lift_up(recover(lifts[idx++]));
        if (m.sat_active)
            for (int n = 0; n < m.n_s; ++n) v.col(1 + n) = lift_up(recover(lifts[idx++]));
        if (m.bs_active)
            for (int k = 0; k < m.k_t; ++k) v.col(1 + m.n_s + k) = lift_up(recover(lifts[idx++]));
        return BeamformerSet::cooperative(std::move(v), m.n_s, n_t);
    };
    BeamformerSet bf = assemble(st.lifts);
    const double viol = bf.power_violation(d.p_s, d.p_t, m.n_s);
    if (viol > 1e-6) {
        const double s = 1.0 / std::sqrt(1.0 + viol);
        bf.W *= s;
        bf.P *= s;
        bf.V *= s;
    }

    // expected rates of whatever beamformers we report, with portions rescaled
    // into the recovered common-rate budgets
    auto expected_mmf_of = [&](const BeamformerSet& cand, CommonRatePortions* out_portions) {
        const SinrTables tables = expected_sinr_tables(d, unc, cand);
        CommonRatePortions p = portions;
        if (m.common) {
            if (d.mode == Mode::Coordinated) {
                double sat_budget = m.k_s ? rate_bps(tables.su_common.minCoeff()) : 0.0;
                double bs_budget = m.k_t ? rate_bps(tables.cu_common.minCoeff()) : 0.0;
                if (p.c_sat.sum() > sat_budget && p.c_sat.sum() > 0)
                    p.c_sat *= sat_budget / p.c_sat.sum();
                if (p.c_bs.sum() > bs_budget && p.c_bs.sum() > 0) p.c_bs *= bs_budget / p.c_bs.sum();
            } else {
                double budget = std::numeric_limits<double>::infinity();
                for (int k = 0; k < m.k_s; ++k)
                    budget = std::min(budget, rate_bps(tables.su_common(k)));
                for (int k = 0; k < m.k_t; ++k)
                    budget = std::min(budget, rate_bps(tables.cu_common(k)));
                const double tot = p.c_sat.sum() + p.c_bs.sum();
                if (tot > budget && tot > 0) {
                    p.c_sat *= budget / tot;
                    p.c_bs *= budget / tot;
                }
            }
        }
        const RateVector rv = rsma_rates(tables, p, d.channels.group_map, d.mode);
        if (out_portions) *out_portions = p;
        rep.beam_rates = rv.beam_totals;
        rep.cu_rates = rv.cu_totals;
        return mmf_objective(rv);
    };
    CommonRatePortions used = portions;
    double mmf = expected_mmf_of(bf, &used);

    // Gaussian-rounding fallback when the principal direction loses too much
    if (cfg.randomization && mmf < 0.95 * q_lifted) {
        Rng rng(0x5eed);
        std::vector<Eigen::LLT<MatrixXcd>> chols;
        for (const auto& x : st.lifts)
            chols.emplace_back(MatrixXcd(x + 1e-10 * MatrixXcd::Identity(x.rows(), x.cols())));
        for (int draw = 0; draw < 50; ++draw) {
            std::vector<MatrixXcd> cand_lifts;
            for (size_t i = 0; i < st.lifts.size(); ++i) {
                VectorXcd g(st.lifts[i].rows());
                for (int j = 0; j < g.size(); ++j)
                    g(j) = std::complex<double>(rng.normal(), rng.normal()) / std::sqrt(2.0);
                VectorXcd v = chols[i].matrixL() * g;
                if (v.norm() > 0) v *= std::sqrt(st.lifts[i].trace().real()) / v.norm();
                cand_lifts.push_back(v * v.adjoint());
            }
            BeamformerSet cand = assemble(cand_lifts);
            const double cviol = cand.power_violation(d.p_s, d.p_t, m.n_s);
            if (cviol > 1e-6) {
                const double s = 1.0 / std::sqrt(1.0 + cviol);
                cand.W *= s;
                cand.P *= s;
                cand.V *= s;
            }
            CommonRatePortions cp = portions;
            const double cm = expected_mmf_of(cand, &cp);
            if (cm > mmf) {
                mmf = cm;
                bf = cand;
                used = cp;
            }
        }
        expected_mmf_of(bf, &used); // restore report rate vectors for the winner
    }

    rep.beamformers = bf;
    rep.portions = used;
    rep.expected_mmf = mmf;
    rep.achieved_mmf = mmf;
    rep.portions_feasible = true;
    rep.power_residual = bf.power_violation(d.p_s, d.p_t, m.n_s);
    rep.status = SolveStatus::Optimal;
    rep.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tstart).count();
    return rep;
}

} // namespace stin
