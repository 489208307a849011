#include "stin/sca.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

namespace stin {

double taylor_qol(const VectorXcd& h, const VectorXcd& p0, double a0,
                  const VectorXcd& p, double a) {
    if (a0 <= 0) throw std::invalid_argument("taylor_qol: expansion denominator must be positive");
    const std::complex<double> hp0 = h.dot(p0); // h^H p0
    const std::complex<double> hp = h.dot(p);
    const double cross = 2.0 * (std::conj(hp0) * hp).real();
    return cross / a0 - std::norm(hp0) / (a0 * a0) * a;
}

void soc_log_params(double a0, double& v, double& u) {
    if (a0 < 0) throw std::invalid_argument("soc_log_params: negative expansion point");
    v = a0 / (a0 + 1.0) + std::log1p(a0);
    u = a0 * a0 / (a0 + 1.0);
}

VectorXd effective_noise_su(const ProblemData& d) {
    if (d.sigma2_su.size()) return d.sigma2_su;
    return VectorXd::Ones(d.channels.num_sus());
}

VectorXd effective_noise_cu(const ProblemData& d) {
    if (d.sigma2_cu.size()) return d.sigma2_cu;
    return VectorXd::Ones(d.channels.num_cus());
}

namespace {

constexpr double kAuxFloor = 1e-6;

struct Sides {
    bool sat = false; // satellite actually transmitting
    bool bs = false;
    bool beams_present = false; // SU rates exist (possibly pinned at 0)
    bool cus_present = false;
};

Sides classify(const ProblemData& d) {
    Sides s;
    s.beams_present = d.channels.num_beams() > 0 && d.channels.num_sus() > 0;
    s.cus_present = d.channels.num_cus() > 0;
    s.sat = s.beams_present && d.p_s > 0;
    s.bs = s.cus_present && d.channels.num_bs_antennas() > 0 && d.p_t > 0;
    return s;
}

// Orthonormal basis of the span of the CU channels; BS precoders outside this
// span burn power without touching any SINR, so restricting to it is lossless
// and shrinks every subproblem.
MatrixXcd bs_basis(const MatrixXcd& h) {
    if (h.cols() == 0 || h.rows() == 0) return MatrixXcd(h.rows(), 0);
    Eigen::ColPivHouseholderQR<MatrixXcd> qr(h);
    qr.setThreshold(1e-12);
    const int r = static_cast<int>(qr.rank());
    return MatrixXcd(qr.householderQ()) .leftCols(r);
}

// f-hat surrogate of |h^H p|^2 / aux as a linear expression in (p, aux).
LinExpr taylor_expr(ConicProblem& pr, const VectorXcd& h, int p_var,
                    const VectorXcd& p0, double a0, int aux_var) {
    const std::complex<double> hp0 = h.dot(p0);
    const VectorXcd c = h * hp0; // c^H p = conj(h^H p0) * h^H p
    LinExpr e = pr.re_inner(c, p_var);
    e *= 2.0 / a0;
    e -= std::norm(hp0) / (a0 * a0) * pr.scalar(aux_var);
    return e;
}

// sum of |terms|^2 <= lin, hyperbolic SOC form.
void add_quad_le(ConicProblem& pr, const std::vector<CLinExpr>& terms, const LinExpr& lin) {
    std::vector<LinExpr> rows;
    rows.reserve(2 * terms.size() + 1);
    for (const auto& t : terms) {
        rows.push_back(t.re);
        rows.push_back(t.im);
    }
    rows.push_back(0.5 * (lin - LinExpr(1.0)));
    pr.add_soc(std::move(rows), 0.5 * (lin + LinExpr(1.0)));
}

// Tangent device for ln(1+aux) >= rate_ln2 at expansion point a0.
void add_soc_log(ConicProblem& pr, const LinExpr& aux, const LinExpr& rate_ln2, double a0) {
    double v, u;
    soc_log_params(a0, v, u);
    std::vector<LinExpr> rows;
    rows.push_back(aux + rate_ln2 - LinExpr(v));
    rows.push_back(LinExpr(2.0 * std::sqrt(u)));
    pr.add_soc(std::move(rows), aux - rate_ln2 + LinExpr(v));
}

// || stacked coordinates of the given (var, coordinate) pairs || <= sqrt(budget)
void add_power_soc(ConicProblem& pr, const std::vector<std::pair<int, int>>& entries,
                   const std::vector<int>& dims, double budget) {
    std::vector<LinExpr> rows;
    for (size_t i = 0; i < entries.size(); ++i) {
        VectorXcd e = VectorXcd::Zero(dims[i]);
        e(entries[i].second) = 1.0;
        const CLinExpr c = pr.inner(e, entries[i].first);
        rows.push_back(c.re);
        rows.push_back(c.im);
    }
    pr.add_soc(std::move(rows), LinExpr(std::sqrt(budget)));
}

double clamp_aux(double x) { return std::max(x, kAuxFloor); }

// ---------------------------------------------------------------------------
// coordinated RSMA / SDMA
// ---------------------------------------------------------------------------

struct CoordIds {
    int q = -1, w_c = -1, p_c = -1;
    std::vector<int> w, p, c_sat, c_bs, r, al, a, ac, b, bc;
    MatrixXcd u; // BS subspace basis
};

struct Built {
    ConicProblem prob;
    CoordIds ids;
};

Built build_coord(const ProblemData& d, const ScaState& st) {
    const auto& ch = d.channels;
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    const Sides sides = classify(d);
    const bool common = d.strategy == Strategy::Rsma;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);

    Built bp;
    auto& pr = bp.prob;
    auto& ids = bp.ids;
    ids.q = pr.add_scalar("q");
    pr.set_objective(pr.scalar(ids.q));

    ids.u = bs_basis(ch.H);
    const int rdim = static_cast<int>(ids.u.cols());

    if (sides.sat) {
        if (common) ids.w_c = pr.add_cvector("w_c", n_s);
        for (int n = 0; n < n_s; ++n) ids.w.push_back(pr.add_cvector("w" + std::to_string(n), n_s));
        if (common)
            for (int n = 0; n < n_s; ++n) ids.c_sat.push_back(pr.add_scalar("Csat" + std::to_string(n)));
        for (int k = 0; k < k_s; ++k) {
            ids.r.push_back(pr.add_scalar("r" + std::to_string(k)));
            ids.b.push_back(pr.add_scalar("b" + std::to_string(k)));
            if (common) ids.bc.push_back(pr.add_scalar("bc" + std::to_string(k)));
        }
    }
    if (sides.bs) {
        if (common) ids.p_c = pr.add_cvector("p_c", rdim);
        for (int k = 0; k < k_t; ++k) ids.p.push_back(pr.add_cvector("p" + std::to_string(k), rdim));
        for (int k = 0; k < k_t; ++k) {
            if (common) ids.c_bs.push_back(pr.add_scalar("Cbs" + std::to_string(k)));
            ids.al.push_back(pr.add_scalar("al" + std::to_string(k)));
            ids.a.push_back(pr.add_scalar("a" + std::to_string(k)));
            if (common) ids.ac.push_back(pr.add_scalar("ac" + std::to_string(k)));
        }
    }

    // --- BS-side constraint families ---
    if (sides.bs) {
        const MatrixXcd hr = ids.u.adjoint() * ch.H; // reduced CU channels
        const MatrixXcd pr0 = ids.u.adjoint() * st.bf.P; // reduced expansion point
        for (int k = 0; k < k_t; ++k) {
            std::vector<CLinExpr> intf;
            for (int j = 0; j < k_t; ++j)
                if (j != k) intf.push_back(pr.inner(hr.col(k), ids.p[j]));
            if (sides.sat) {
                if (common) intf.push_back(pr.inner(ch.Z.col(k), ids.w_c));
                for (int i = 0; i < n_s; ++i) intf.push_back(pr.inner(ch.Z.col(k), ids.w[i]));
            }
            const LinExpr f1 =
                taylor_expr(pr, hr.col(k), ids.p[k], pr0.col(k + 1), st.a(k), ids.a[k]);
            add_quad_le(pr, intf, f1 - LinExpr(s2cu(k)));
            if (common) {
                std::vector<CLinExpr> all = intf;
                all.push_back(pr.inner(hr.col(k), ids.p[k]));
                const LinExpr f3 =
                    taylor_expr(pr, hr.col(k), ids.p_c, pr0.col(0), st.a_c(k), ids.ac[k]);
                add_quad_le(pr, all, f3 - LinExpr(s2cu(k)));
            }
            add_soc_log(pr, pr.scalar(ids.a[k]), M_LN2 * pr.scalar(ids.al[k]), st.a(k));
            if (common) {
                LinExpr csum;
                for (int j = 0; j < k_t; ++j) csum += pr.scalar(ids.c_bs[j]);
                add_soc_log(pr, pr.scalar(ids.ac[k]), M_LN2 * csum, st.a_c(k));
            }
            LinExpr link = pr.scalar(ids.q) - pr.scalar(ids.al[k]);
            if (common) link -= pr.scalar(ids.c_bs[k]);
            pr.add_ineq(link);
        }
        if (common)
            for (int k = 0; k < k_t; ++k) pr.add_ineq(-pr.scalar(ids.c_bs[k]));
    } else if (sides.cus_present) {
        pr.add_ineq(pr.scalar(ids.q)); // CU rates pinned at 0
    }

    // --- satellite-side constraint families ---
    if (sides.sat) {
        for (int k = 0; k < k_s; ++k) {
            const int own = ch.group_map[k];
            std::vector<CLinExpr> intf;
            for (int i = 0; i < n_s; ++i)
                if (i != own) intf.push_back(pr.inner(ch.F.col(k), ids.w[i]));
            const LinExpr f2 =
                taylor_expr(pr, ch.F.col(k), ids.w[own], st.bf.W.col(own + 1), st.b(k), ids.b[k]);
            add_quad_le(pr, intf, f2 - LinExpr(s2su(k)));
            if (common) {
                std::vector<CLinExpr> all = intf;
                all.push_back(pr.inner(ch.F.col(k), ids.w[own]));
                const LinExpr f4 =
                    taylor_expr(pr, ch.F.col(k), ids.w_c, st.bf.W.col(0), st.b_c(k), ids.bc[k]);
                add_quad_le(pr, all, f4 - LinExpr(s2su(k)));
            }
            add_soc_log(pr, pr.scalar(ids.b[k]), M_LN2 * pr.scalar(ids.r[k]), st.b(k));
            if (common) {
                LinExpr csum;
                for (int n = 0; n < n_s; ++n) csum += pr.scalar(ids.c_sat[n]);
                add_soc_log(pr, pr.scalar(ids.bc[k]), M_LN2 * csum, st.b_c(k));
            }
            LinExpr link = pr.scalar(ids.q) - pr.scalar(ids.r[k]);
            if (common) link -= pr.scalar(ids.c_sat[own]);
            pr.add_ineq(link);
        }
        if (common)
            for (int n = 0; n < n_s; ++n) pr.add_ineq(-pr.scalar(ids.c_sat[n]));
    } else if (sides.beams_present) {
        pr.add_ineq(pr.scalar(ids.q)); // SU rates pinned at 0
    }
    if (!sides.beams_present && !sides.cus_present) pr.add_ineq(pr.scalar(ids.q));

    // --- power ---
    if (sides.bs) {
        std::vector<std::pair<int, int>> entries;
        std::vector<int> dims;
        auto push_col = [&](int var) {
            for (int i = 0; i < rdim; ++i) {
                entries.emplace_back(var, i);
                dims.push_back(rdim);
            }
        };
        if (common) push_col(ids.p_c);
        for (int v : ids.p) push_col(v);
        add_power_soc(pr, entries, dims, d.p_t);
    }
    if (sides.sat) {
        for (int n = 0; n < n_s; ++n) {
            std::vector<std::pair<int, int>> entries;
            std::vector<int> dims;
            if (common) {
                entries.emplace_back(ids.w_c, n);
                dims.push_back(n_s);
            }
            for (int v : ids.w) {
                entries.emplace_back(v, n);
                dims.push_back(n_s);
            }
            add_power_soc(pr, entries, dims, d.p_s / n_s);
        }
    }
    return bp;
}

ScaState extract_coord(const ProblemData& d, const Built& bp, const ConicSolution& sol) {
    const auto& ch = d.channels;
    const auto& ids = bp.ids;
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    const int n_t = ch.num_bs_antennas();
    ScaState st;
    MatrixXcd w = MatrixXcd::Zero(n_s, n_s + 1);
    MatrixXcd p = MatrixXcd::Zero(n_t, k_t + 1);
    if (!ids.w.empty()) {
        if (ids.w_c >= 0) w.col(0) = bp.prob.get_cvector(sol, ids.w_c);
        for (int n = 0; n < n_s; ++n) w.col(n + 1) = bp.prob.get_cvector(sol, ids.w[n]);
    }
    if (!ids.p.empty()) {
        if (ids.p_c >= 0) p.col(0) = ids.u * bp.prob.get_cvector(sol, ids.p_c);
        for (int k = 0; k < k_t; ++k) p.col(k + 1) = ids.u * bp.prob.get_cvector(sol, ids.p[k]);
    }
    st.bf = BeamformerSet::coordinated(std::move(w), std::move(p));
    st.a.setZero(k_t);
    st.a_c.setZero(k_t);
    st.b.setZero(k_s);
    st.b_c.setZero(k_s);
    for (size_t k = 0; k < ids.a.size(); ++k) st.a(k) = clamp_aux(bp.prob.get_scalar(sol, ids.a[k]));
    for (size_t k = 0; k < ids.ac.size(); ++k) st.a_c(k) = clamp_aux(bp.prob.get_scalar(sol, ids.ac[k]));
    for (size_t k = 0; k < ids.b.size(); ++k) st.b(k) = clamp_aux(bp.prob.get_scalar(sol, ids.b[k]));
    for (size_t k = 0; k < ids.bc.size(); ++k) st.b_c(k) = clamp_aux(bp.prob.get_scalar(sol, ids.bc[k]));
    st.portions = CommonRatePortions::zeros(n_s, k_t);
    for (size_t n = 0; n < ids.c_sat.size(); ++n)
        st.portions.c_sat(n) = std::max(0.0, bp.prob.get_scalar(sol, ids.c_sat[n]));
    for (size_t k = 0; k < ids.c_bs.size(); ++k)
        st.portions.c_bs(k) = std::max(0.0, bp.prob.get_scalar(sol, ids.c_bs[k]));
    st.q = sol.objective;
    return st;
}

// ---------------------------------------------------------------------------
// cooperative RSMA / SDMA: aggregate columns over [satellite rows; BS rows]
// ---------------------------------------------------------------------------

struct CoopIds {
    int q = -1, v_c = -1;
    std::vector<int> v_sat, v_bs, c, r, al, a, ac, b, bc;
    MatrixXcd u;
    int m_s = 0; // satellite rows actually present in the reduced columns
};

struct BuiltCoop {
    ConicProblem prob;
    CoopIds ids;
};

BuiltCoop build_coop(const ProblemData& d, const ScaState& st) {
    const auto& ch = d.channels;
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    const Sides sides = classify(d);
    const bool common = d.strategy == Strategy::Rsma;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);

    if (d.strategy == Strategy::Noma)
        throw std::invalid_argument("cooperative NOMA is not supported");

    BuiltCoop bp;
    auto& pr = bp.prob;
    auto& ids = bp.ids;
    ids.q = pr.add_scalar("q");
    pr.set_objective(pr.scalar(ids.q));
    ids.u = bs_basis(ch.H);
    const int rdim = static_cast<int>(ids.u.cols());
    ids.m_s = sides.sat ? n_s : 0;
    const int vdim = ids.m_s + (sides.bs ? rdim : 0);
    const int bs_off = ids.m_s;

    // reduced channels: SU sees satellite rows only, CU sees the aggregate
    auto su_chan = [&](int k) {
        VectorXcd f = VectorXcd::Zero(vdim);
        f.head(ids.m_s) = ch.F.col(k);
        return f;
    };
    auto cu_chan = [&](int k) {
        VectorXcd g = VectorXcd::Zero(vdim);
        if (ids.m_s) g.head(n_s) = ch.Z.col(k);
        if (sides.bs) g.tail(rdim) = ids.u.adjoint() * ch.H.col(k);
        return g;
    };
    // reduce a full-height expansion column to the variable coordinates
    auto reduce_col = [&](const VectorXcd& full) {
        VectorXcd v = VectorXcd::Zero(vdim);
        if (ids.m_s) v.head(n_s) = full.head(n_s);
        if (sides.bs) v.tail(rdim) = ids.u.adjoint() * full.tail(ch.num_bs_antennas());
        return v;
    };

    const int n_streams = (sides.sat ? n_s : 0) + (sides.bs ? k_t : 0);
    if (vdim == 0 || n_streams == 0) {
        pr.add_ineq(pr.scalar(ids.q));
        return bp;
    }

    if (common) ids.v_c = pr.add_cvector("v_c", vdim);
    if (sides.sat)
        for (int n = 0; n < n_s; ++n) ids.v_sat.push_back(pr.add_cvector("vs" + std::to_string(n), vdim));
    if (sides.bs)
        for (int k = 0; k < k_t; ++k) ids.v_bs.push_back(pr.add_cvector("vb" + std::to_string(k), vdim));
    if (common)
        for (int i = 0; i < n_s + k_t; ++i) ids.c.push_back(pr.add_scalar("C" + std::to_string(i)));

    std::vector<int> priv_cols; // variable ids of every private column
    for (int v : ids.v_sat) priv_cols.push_back(v);
    for (int v : ids.v_bs) priv_cols.push_back(v);
    // expansion points per private column, aligned with priv_cols
    std::vector<VectorXcd> priv0;
    for (int n = 0; n < n_s && sides.sat; ++n) priv0.push_back(reduce_col(st.bf.V.col(1 + n)));
    for (int k = 0; k < k_t && sides.bs; ++k) priv0.push_back(reduce_col(st.bf.V.col(1 + n_s + k)));
    const VectorXcd vc0 = common ? reduce_col(st.bf.V.col(0)) : VectorXcd();

    LinExpr csum;
    if (common)
        for (int i : ids.c) csum += pr.scalar(i);

    // --- SU constraints ---
    if (sides.sat) {
        for (int k = 0; k < k_s; ++k) {
            ids.r.push_back(pr.add_scalar("r" + std::to_string(k)));
            ids.b.push_back(pr.add_scalar("b" + std::to_string(k)));
            if (common) ids.bc.push_back(pr.add_scalar("bc" + std::to_string(k)));
            const int own = ch.group_map[k];
            const VectorXcd f = su_chan(k);
            std::vector<CLinExpr> intf;
            for (size_t j = 0; j < priv_cols.size(); ++j)
                if (static_cast<int>(j) != own) intf.push_back(pr.inner(f, priv_cols[j]));
            const LinExpr f2 = taylor_expr(pr, f, priv_cols[own], priv0[own], st.b(k), ids.b[k]);
            add_quad_le(pr, intf, f2 - LinExpr(s2su(k)));
            if (common) {
                std::vector<CLinExpr> all = intf;
                all.push_back(pr.inner(f, priv_cols[own]));
                const LinExpr f4 = taylor_expr(pr, f, ids.v_c, vc0, st.b_c(k), ids.bc[k]);
                add_quad_le(pr, all, f4 - LinExpr(s2su(k)));
                add_soc_log(pr, pr.scalar(ids.bc[k]), M_LN2 * csum, st.b_c(k));
            }
            add_soc_log(pr, pr.scalar(ids.b[k]), M_LN2 * pr.scalar(ids.r[k]), st.b(k));
            LinExpr link = pr.scalar(ids.q) - pr.scalar(ids.r[k]);
            if (common) link -= pr.scalar(ids.c[own]);
            pr.add_ineq(link);
        }
    } else if (sides.beams_present) {
        pr.add_ineq(pr.scalar(ids.q));
    }

    // --- CU constraints ---
    if (sides.bs) {
        for (int k = 0; k < k_t; ++k) {
            ids.al.push_back(pr.add_scalar("al" + std::to_string(k)));
            ids.a.push_back(pr.add_scalar("a" + std::to_string(k)));
            if (common) ids.ac.push_back(pr.add_scalar("ac" + std::to_string(k)));
            const int own = (sides.sat ? n_s : 0) + k;
            const VectorXcd g = cu_chan(k);
            std::vector<CLinExpr> intf;
            for (size_t j = 0; j < priv_cols.size(); ++j)
                if (static_cast<int>(j) != own) intf.push_back(pr.inner(g, priv_cols[j]));
            const LinExpr f1 = taylor_expr(pr, g, priv_cols[own], priv0[own], st.a(k), ids.a[k]);
            add_quad_le(pr, intf, f1 - LinExpr(s2cu(k)));
            if (common) {
                std::vector<CLinExpr> all = intf;
                all.push_back(pr.inner(g, priv_cols[own]));
                const LinExpr f3 = taylor_expr(pr, g, ids.v_c, vc0, st.a_c(k), ids.ac[k]);
                add_quad_le(pr, all, f3 - LinExpr(s2cu(k)));
                add_soc_log(pr, pr.scalar(ids.ac[k]), M_LN2 * csum, st.a_c(k));
            }
            add_soc_log(pr, pr.scalar(ids.a[k]), M_LN2 * pr.scalar(ids.al[k]), st.a(k));
            LinExpr link = pr.scalar(ids.q) - pr.scalar(ids.al[k]);
            if (common) link -= pr.scalar(ids.c[n_s + k]);
            pr.add_ineq(link);
        }
    } else if (sides.cus_present) {
        pr.add_ineq(pr.scalar(ids.q));
    }
    if (common)
        for (int i : ids.c) pr.add_ineq(-pr.scalar(i));

    // --- power: per satellite feed, then the BS row block ---
    std::vector<int> all_cols = priv_cols;
    if (common) all_cols.push_back(ids.v_c);
    if (sides.sat) {
        for (int n = 0; n < n_s; ++n) {
            std::vector<std::pair<int, int>> entries;
            std::vector<int> dims;
            for (int v : all_cols) {
                entries.emplace_back(v, n);
                dims.push_back(vdim);
            }
            add_power_soc(pr, entries, dims, d.p_s / n_s);
        }
    }
    if (sides.bs) {
        std::vector<std::pair<int, int>> entries;
        std::vector<int> dims;
        for (int v : all_cols)
            for (int i = 0; i < rdim; ++i) {
                entries.emplace_back(v, bs_off + i);
                dims.push_back(vdim);
            }
        add_power_soc(pr, entries, dims, d.p_t);
    }
    return bp;
}

ScaState extract_coop(const ProblemData& d, const BuiltCoop& bp, const ConicSolution& sol) {
    const auto& ch = d.channels;
    const auto& ids = bp.ids;
    const int n_s = ch.num_beams(), k_s = ch.num_sus(), k_t = ch.num_cus();
    const int n_t = ch.num_bs_antennas();
    ScaState st;
    MatrixXcd v = MatrixXcd::Zero(n_s + n_t, n_s + k_t + 1);
    auto lift = [&](const VectorXcd& red) {
        VectorXcd full = VectorXcd::Zero(n_s + n_t);
        if (ids.m_s) full.head(n_s) = red.head(n_s);
        if (ids.u.cols()) full.tail(n_t) = ids.u * red.tail(ids.u.cols());
        return full;
    };
    if (ids.v_c >= 0) v.col(0) = lift(bp.prob.get_cvector(sol, ids.v_c));
    for (size_t n = 0; n < ids.v_sat.size(); ++n)
        v.col(1 + n) = lift(bp.prob.get_cvector(sol, ids.v_sat[n]));
    for (size_t k = 0; k < ids.v_bs.size(); ++k)
        v.col(1 + n_s + k) = lift(bp.prob.get_cvector(sol, ids.v_bs[k]));
    st.bf = BeamformerSet::cooperative(std::move(v), n_s, n_t);
    st.a.setZero(k_t);
    st.a_c.setZero(k_t);
    st.b.setZero(k_s);
    st.b_c.setZero(k_s);
    for (size_t k = 0; k < ids.a.size(); ++k) st.a(k) = clamp_aux(bp.prob.get_scalar(sol, ids.a[k]));
    for (size_t k = 0; k < ids.ac.size(); ++k) st.a_c(k) = clamp_aux(bp.prob.get_scalar(sol, ids.ac[k]));
    for (size_t k = 0; k < ids.b.size(); ++k) st.b(k) = clamp_aux(bp.prob.get_scalar(sol, ids.b[k]));
    for (size_t k = 0; k < ids.bc.size(); ++k) st.b_c(k) = clamp_aux(bp.prob.get_scalar(sol, ids.bc[k]));
    st.portions = CommonRatePortions::zeros(n_s, k_t);
    for (size_t i = 0; i < ids.c.size(); ++i) {
        const double val = std::max(0.0, bp.prob.get_scalar(sol, ids.c[i]));
        if (static_cast<int>(i) < n_s)
            st.portions.c_sat(i) = val;
        else
            st.portions.c_bs(i - n_s) = val;
    }
    st.q = sol.objective;
    return st;
}

// ---------------------------------------------------------------------------
// NOMA (coordinated): fixed decoding orders, SIC rate constraints per
// obligated (stream, receiver) pair, same Taylor/SOC devices, no common stream
// ---------------------------------------------------------------------------

struct NomaPairs {
    NomaOrder order;
    std::vector<std::pair<int, int>> sat; // (beam stream n, SU k)
    std::vector<std::pair<int, int>> bs;  // (CU stream j, CU k)
    std::vector<int> beam_pos, cu_pos;
};

NomaPairs noma_pairs(const ChannelSet& ch) {
    NomaPairs np;
    np.order = default_noma_order(ch);
    const int n_s = ch.num_beams(), k_t = ch.num_cus();
    np.beam_pos.resize(n_s);
    np.cu_pos.resize(k_t);
    for (int i = 0; i < n_s; ++i) np.beam_pos[np.order.beam_sequence[i]] = i;
    for (int i = 0; i < k_t; ++i) np.cu_pos[np.order.cu_sequence[i]] = i;
    for (int n = 0; n < n_s; ++n)
        for (int k = 0; k < ch.num_sus(); ++k)
            if (np.beam_pos[ch.group_map[k]] >= np.beam_pos[n]) np.sat.emplace_back(n, k);
    for (int j = 0; j < k_t; ++j)
        for (int k = 0; k < k_t; ++k)
            if (np.cu_pos[k] >= np.cu_pos[j]) np.bs.emplace_back(j, k);
    return np;
}

// true decode SINR of each obligated pair under the given beamformers
void noma_pair_sinrs(const ProblemData& d, const NomaPairs& np, const BeamformerSet& bf,
                     VectorXd& sat_sinr, VectorXd& bs_sinr) {
    const auto& ch = d.channels;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);
    sat_sinr.resize(np.sat.size());
    for (size_t i = 0; i < np.sat.size(); ++i) {
        const auto [n, k] = np.sat[i];
        const VectorXcd fw = bf.W.adjoint() * ch.F.col(k);
        double den = s2su(k);
        for (int m = 0; m < ch.num_beams(); ++m)
            if (np.beam_pos[m] > np.beam_pos[n]) den += std::norm(fw(1 + m));
        sat_sinr(i) = std::norm(fw(1 + n)) / den;
    }
    bs_sinr.resize(np.bs.size());
    for (size_t i = 0; i < np.bs.size(); ++i) {
        const auto [j, k] = np.bs[i];
        const VectorXcd hp = bf.P.adjoint() * ch.H.col(k);
        double den = s2cu(k);
        if (bf.W.size() > 0) den += (bf.W.adjoint() * ch.Z.col(k)).squaredNorm();
        for (int m = 0; m < ch.num_cus(); ++m)
            if (np.cu_pos[m] > np.cu_pos[j]) den += std::norm(hp(1 + m));
        bs_sinr(i) = std::norm(hp(1 + j)) / den;
    }
}

struct NomaIds {
    int q = -1;
    std::vector<int> w, p, r_beam, al_cu, b_pair, a_pair;
    MatrixXcd u;
};

struct BuiltNoma {
    ConicProblem prob;
    NomaIds ids;
    NomaPairs np;
};

BuiltNoma build_noma(const ProblemData& d, const ScaState& st) {
    const auto& ch = d.channels;
    const int n_s = ch.num_beams(), k_t = ch.num_cus();
    const Sides sides = classify(d);
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);

    BuiltNoma bp;
    bp.np = noma_pairs(ch);
    auto& pr = bp.prob;
    auto& ids = bp.ids;
    ids.q = pr.add_scalar("q");
    pr.set_objective(pr.scalar(ids.q));
    ids.u = bs_basis(ch.H);
    const int rdim = static_cast<int>(ids.u.cols());

    if (sides.sat) {
        for (int n = 0; n < n_s; ++n) {
            ids.w.push_back(pr.add_cvector("w" + std::to_string(n), n_s));
            ids.r_beam.push_back(pr.add_scalar("rb" + std::to_string(n)));
        }
        for (size_t i = 0; i < bp.np.sat.size(); ++i)
            ids.b_pair.push_back(pr.add_scalar("bp" + std::to_string(i)));
        for (size_t i = 0; i < bp.np.sat.size(); ++i) {
            const auto [n, k] = bp.np.sat[i];
            std::vector<CLinExpr> intf;
            for (int m = 0; m < n_s; ++m)
                if (bp.np.beam_pos[m] > bp.np.beam_pos[n])
                    intf.push_back(pr.inner(ch.F.col(k), ids.w[m]));
            const LinExpr fh = taylor_expr(pr, ch.F.col(k), ids.w[n], st.bf.W.col(1 + n),
                                           st.b(i), ids.b_pair[i]);
            add_quad_le(pr, intf, fh - LinExpr(s2su(k)));
            add_soc_log(pr, pr.scalar(ids.b_pair[i]), M_LN2 * pr.scalar(ids.r_beam[n]), st.b(i));
        }
        for (int n = 0; n < n_s; ++n)
            pr.add_ineq(pr.scalar(ids.q) - pr.scalar(ids.r_beam[n]));
    } else if (sides.beams_present) {
        pr.add_ineq(pr.scalar(ids.q));
    }

    if (sides.bs) {
        const MatrixXcd hr = ids.u.adjoint() * ch.H;
        const MatrixXcd pr0 = ids.u.adjoint() * st.bf.P;
        for (int k = 0; k < k_t; ++k) {
            ids.p.push_back(pr.add_cvector("p" + std::to_string(k), rdim));
            ids.al_cu.push_back(pr.add_scalar("alc" + std::to_string(k)));
        }
        for (size_t i = 0; i < bp.np.bs.size(); ++i)
            ids.a_pair.push_back(pr.add_scalar("ap" + std::to_string(i)));
        for (size_t i = 0; i < bp.np.bs.size(); ++i) {
            const auto [j, k] = bp.np.bs[i];
            std::vector<CLinExpr> intf;
            for (int m = 0; m < k_t; ++m)
                if (bp.np.cu_pos[m] > bp.np.cu_pos[j]) intf.push_back(pr.inner(hr.col(k), ids.p[m]));
            if (sides.sat)
                for (int n = 0; n < n_s; ++n) intf.push_back(pr.inner(ch.Z.col(k), ids.w[n]));
            const LinExpr fh =
                taylor_expr(pr, hr.col(k), ids.p[j], pr0.col(1 + j), st.a(i), ids.a_pair[i]);
            add_quad_le(pr, intf, fh - LinExpr(s2cu(k)));
            add_soc_log(pr, pr.scalar(ids.a_pair[i]), M_LN2 * pr.scalar(ids.al_cu[j]), st.a(i));
        }
        for (int j = 0; j < k_t; ++j)
            pr.add_ineq(pr.scalar(ids.q) - pr.scalar(ids.al_cu[j]));
    } else if (sides.cus_present) {
        pr.add_ineq(pr.scalar(ids.q));
    }
    if (!sides.beams_present && !sides.cus_present) pr.add_ineq(pr.scalar(ids.q));

    if (sides.bs) {
        std::vector<std::pair<int, int>> entries;
        std::vector<int> dims;
        for (int v : ids.p)
            for (int i = 0; i < rdim; ++i) {
                entries.emplace_back(v, i);
                dims.push_back(rdim);
            }
        add_power_soc(pr, entries, dims, d.p_t);
    }
    if (sides.sat) {
        for (int n = 0; n < n_s; ++n) {
            std::vector<std::pair<int, int>> entries;
            std::vector<int> dims;
            for (int v : ids.w) {
                entries.emplace_back(v, n);
                dims.push_back(n_s);
            }
            add_power_soc(pr, entries, dims, d.p_s / n_s);
        }
    }
    return bp;
}

ScaState extract_noma(const ProblemData& d, const BuiltNoma& bp, const ConicSolution& sol) {
    const auto& ch = d.channels;
    const auto& ids = bp.ids;
    const int n_s = ch.num_beams(), k_t = ch.num_cus(), n_t = ch.num_bs_antennas();
    ScaState st;
    MatrixXcd w = MatrixXcd::Zero(n_s, n_s + 1);
    MatrixXcd p = MatrixXcd::Zero(n_t, k_t + 1);
    for (size_t n = 0; n < ids.w.size(); ++n) w.col(1 + n) = bp.prob.get_cvector(sol, ids.w[n]);
    for (size_t k = 0; k < ids.p.size(); ++k) p.col(1 + k) = ids.u * bp.prob.get_cvector(sol, ids.p[k]);
    st.bf = BeamformerSet::coordinated(std::move(w), std::move(p));
    st.b.setZero(bp.np.sat.size());
    st.a.setZero(bp.np.bs.size());
    for (size_t i = 0; i < ids.b_pair.size(); ++i)
        st.b(i) = clamp_aux(bp.prob.get_scalar(sol, ids.b_pair[i]));
    for (size_t i = 0; i < ids.a_pair.size(); ++i)
        st.a(i) = clamp_aux(bp.prob.get_scalar(sol, ids.a_pair[i]));
    st.portions = CommonRatePortions::zeros(n_s, k_t);
    st.q = sol.objective;
    return st;
}

// ---------------------------------------------------------------------------

BeamformerSet matched_filter_init(const ProblemData& d) {
    const auto& ch = d.channels;
    const int n_s = ch.num_beams(), k_t = ch.num_cus(), n_t = ch.num_bs_antennas();
    const Sides sides = classify(d);
    const bool common = d.strategy == Strategy::Rsma;
    const double common_frac = common ? 0.1 : 0.0;

    MatrixXcd w = MatrixXcd::Zero(n_s, n_s + 1);
    if (sides.sat) {
        for (int n = 0; n < n_s; ++n) {
            VectorXcd centroid = VectorXcd::Zero(n_s);
            for (int k : ch.beam_group(n)) centroid += ch.F.col(k);
            w.col(1 + n) = centroid.normalized();
        }
        double max_row = 0;
        for (int n = 0; n < n_s; ++n) max_row = std::max(max_row, w.row(n).squaredNorm());
        w *= std::sqrt((1.0 - common_frac) * (d.p_s / n_s) / max_row);
        if (common) {
            VectorXcd sum = VectorXcd::Zero(n_s);
            for (int k = 0; k < ch.num_sus(); ++k) sum += ch.F.col(k);
            sum.normalize();
            const double peak = sum.cwiseAbs().maxCoeff();
            w.col(0) = sum * std::sqrt(common_frac * (d.p_s / n_s)) / peak;
        }
    }
    MatrixXcd p = MatrixXcd::Zero(n_t, k_t + 1);
    if (sides.bs) {
        for (int k = 0; k < k_t; ++k)
            p.col(1 + k) = ch.H.col(k).normalized() * std::sqrt((1.0 - common_frac) * d.p_t / k_t);
        if (common) {
            VectorXcd sum = VectorXcd::Zero(n_t);
            for (int k = 0; k < k_t; ++k) sum += ch.H.col(k);
            p.col(0) = sum.normalized() * std::sqrt(common_frac * d.p_t);
        }
    }
    if (d.mode == Mode::Coordinated) return BeamformerSet::coordinated(std::move(w), std::move(p));
    MatrixXcd v = MatrixXcd::Zero(n_s + n_t, n_s + k_t + 1);
    for (int n = 0; n < n_s; ++n) v.col(1 + n).head(n_s) = w.col(1 + n);
    for (int k = 0; k < k_t; ++k) v.col(1 + n_s + k).tail(n_t) = p.col(1 + k);
    if (common) {
        v.col(0).head(n_s) = w.col(0);
        v.col(0).tail(n_t) = p.col(0);
    }
    return BeamformerSet::cooperative(std::move(v), n_s, n_t);
}

} // namespace

ScaState make_state(const ProblemData& d, const BeamformerSet& bf_in) {
    const auto& ch = d.channels;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);
    ScaState st;
    st.bf = bf_in;
    st.portions = CommonRatePortions::zeros(ch.num_beams(), ch.num_cus());
    const Sides sides = classify(d);

    // The surrogate of a zero common column is identically zero and makes the
    // subproblem infeasible, so seed a tiny common component when warm-starting
    // RSMA from a common-free point.
    if (d.strategy == Strategy::Rsma) {
        auto seed_common = [](Eigen::Ref<VectorXcd> col, const VectorXcd& dir, double scale) {
            if (col.squaredNorm() < 1e-20 && dir.squaredNorm() > 0)
                col = dir.normalized() * scale;
        };
        if (d.mode == Mode::Coordinated) {
            if (sides.sat && st.bf.W.cols() > 0) {
                VectorXcd dir = ch.F.rowwise().sum();
                st.bf.W *= std::sqrt(1.0 - 1e-6);
                seed_common(st.bf.W.col(0), dir, 1e-4 * std::sqrt(d.p_s / ch.num_beams()));
            }
            if (sides.bs && st.bf.P.cols() > 0) {
                VectorXcd dir = ch.H.rowwise().sum();
                st.bf.P *= std::sqrt(1.0 - 1e-6);
                seed_common(st.bf.P.col(0), dir, 1e-4 * std::sqrt(d.p_t));
            }
        } else if (st.bf.V.cols() > 0) {
            VectorXcd dir = VectorXcd::Zero(st.bf.V.rows());
            if (sides.sat) dir.head(ch.num_beams()) = ch.F.rowwise().sum();
            if (sides.bs) dir.tail(ch.num_bs_antennas()) = ch.H.rowwise().sum();
            st.bf.V *= std::sqrt(1.0 - 1e-6);
            seed_common(st.bf.V.col(0), dir, 1e-4 * std::sqrt(std::min(d.p_t, d.p_s)));
        }
    }

    if (d.strategy == Strategy::Noma) {
        if (d.mode == Mode::Cooperative)
            throw std::invalid_argument("cooperative NOMA is not supported");
        const NomaPairs np = noma_pairs(ch);
        VectorXd sat_sinr, bs_sinr;
        noma_pair_sinrs(d, np, st.bf, sat_sinr, bs_sinr);
        st.b = sat_sinr.unaryExpr([](double x) { return clamp_aux(x); });
        st.a = bs_sinr.unaryExpr([](double x) { return clamp_aux(x); });
        const auto rv = noma_rates(ch, st.bf, np.order, s2su, s2cu);
        st.q = mmf_objective(rv);
        return st;
    }

    const SinrTables tables = d.mode == Mode::Coordinated
                                  ? coordinated_sinrs(ch, st.bf, s2su, s2cu)
                                  : cooperative_sinrs(ch, st.bf, s2su, s2cu);
    auto cl = [](const VectorXd& v) { return v.unaryExpr([](double x) { return clamp_aux(x); }); };
    st.a = cl(tables.cu_private);
    st.a_c = cl(tables.cu_common);
    st.b = cl(tables.su_private);
    st.b_c = cl(tables.su_common);
    const auto rv = rsma_rates(tables, st.portions, ch.group_map, d.mode);
    st.q = mmf_objective(rv);
    return st;
}

ScaState initialize_state(const ProblemData& d) {
    return make_state(d, matched_filter_init(d));
}

ConicProblem build_subproblem_coordinated(const ProblemData& d, const ScaState& st) {
    return d.strategy == Strategy::Noma ? std::move(build_noma(d, st).prob)
                                        : std::move(build_coord(d, st).prob);
}

ConicProblem build_subproblem_cooperative(const ProblemData& d, const ScaState& st) {
    return std::move(build_coop(d, st).prob);
}

namespace {

ScaState average_states(const ScaState& prev, const ScaState& cur, double lambda) {
    ScaState st = cur;
    st.bf.W = lambda * prev.bf.W + (1 - lambda) * cur.bf.W;
    st.bf.P = lambda * prev.bf.P + (1 - lambda) * cur.bf.P;
    st.bf.V = lambda * prev.bf.V + (1 - lambda) * cur.bf.V;
    auto mix = [&](const VectorXd& a, const VectorXd& b) {
        return (lambda * a + (1 - lambda) * b).unaryExpr([](double x) { return clamp_aux(x); }).eval();
    };
    st.a = mix(prev.a, cur.a);
    st.a_c = mix(prev.a_c, cur.a_c);
    st.b = mix(prev.b, cur.b);
    st.b_c = mix(prev.b_c, cur.b_c);
    return st;
}

void fill_achieved(const ProblemData& d, const ScaState& st, SolveReport& rep) {
    const auto& ch = d.channels;
    const VectorXd s2su = effective_noise_su(d), s2cu = effective_noise_cu(d);
    rep.beamformers = st.bf;
    rep.portions = st.portions;
    rep.power_residual = st.bf.power_violation(d.p_s, d.p_t, ch.num_beams());
    if (d.strategy == Strategy::Noma) {
        const auto rv = noma_rates(ch, st.bf, noma_pairs(ch).order, s2su, s2cu);
        rep.beam_rates = rv.beam_totals;
        rep.cu_rates = rv.cu_totals;
        rep.achieved_mmf = mmf_objective(rv);
        rep.portions_feasible = true;
        return;
    }
    const SinrTables tables = d.mode == Mode::Coordinated
                                  ? coordinated_sinrs(ch, st.bf, s2su, s2cu)
                                  : cooperative_sinrs(ch, st.bf, s2su, s2cu);
    const auto rv = rsma_rates(tables, st.portions, ch.group_map, d.mode);
    rep.beam_rates = rv.beam_totals;
    rep.cu_rates = rv.cu_totals;
    rep.achieved_mmf = mmf_objective(rv);
    rep.portions_feasible = rv.portions_feasible;
}

} // namespace

SolveReport run_sca(const ProblemData& d, const ScaConfig& config, const ScaState& init) {
    if (d.mode == Mode::Cooperative && d.strategy == Strategy::Noma)
        throw std::invalid_argument("cooperative NOMA is not supported");
    const auto t0 = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.mode = d.mode;
    rep.strategy = d.strategy;

    ScaState state = init;
    if (state.bf.power_violation(d.p_s, d.p_t, d.channels.num_beams()) > 1e-6) {
        rep.status = SolveStatus::Infeasible;
        fill_achieved(d, state, rep);
        return rep;
    }
    rep.objective_trace.push_back(state.q);

    ScaState prev = state;
    ScaState best = state;
    bool failed = false;
    int zero_streak = 0;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        ConicSolution sol;
        ScaState trial = state;
        bool solved = false;
        ScaState best_cand;
        double best_q = -std::numeric_limits<double>::max();
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            // near convergence the extracted expansion state can go slightly
            // degenerate; first re-derive a clean state from the same
            // beamformers, then relax the barrier path, and only as a last
            // resort damp the expansion point toward the previous iterate
            SolverOptions opts = config.solver;
            if (attempt == 1) {
                trial = make_state(d, state.bf);
            } else if (attempt == 2) {
                trial = make_state(d, state.bf);
                opts.mu = 2.0;
                opts.max_newton_iters = 8 * config.solver.max_newton_iters;
                opts.feasibility_tol = 10.0 * config.solver.feasibility_tol;
            } else if (attempt == 3) {
                // thin-interior final iterations: a slow, high-budget barrier
                // path tracks the central path where the default one stalls
                trial = make_state(d, state.bf);
                opts.mu = 1.2;
                opts.max_newton_iters = 32 * config.solver.max_newton_iters;
            } else if (attempt >= 4) {
                trial = average_states(prev, trial, config.damping);
                opts.mu = 2.0;
                opts.max_newton_iters = 8 * config.solver.max_newton_iters;
                opts.feasibility_tol = 10.0 * config.solver.feasibility_tol;
            }
            ScaState cand;
            bool sub_ok = false;
            if (d.mode == Mode::Cooperative) {
                const BuiltCoop bp = build_coop(d, trial);
                sol = bp.prob.solve(opts);
                if (sol.status == SolveStatus::Optimal) {
                    cand = extract_coop(d, bp, sol);
                    sub_ok = true;
                }
            } else if (d.strategy == Strategy::Noma) {
                const BuiltNoma bp = build_noma(d, trial);
                sol = bp.prob.solve(opts);
                if (sol.status == SolveStatus::Optimal) {
                    cand = extract_noma(d, bp, sol);
                    sub_ok = true;
                }
            } else {
                const Built bp = build_coord(d, trial);
                sol = bp.prob.solve(opts);
                if (sol.status == SolveStatus::Optimal) {
                    cand = extract_coord(d, bp, sol);
                    sub_ok = true;
                }
            }
            // a solution below the previous iterate is a numerical artifact
            // (the previous iterate is feasible in every subproblem expanded
            // at it), so treat it like a solver failure and retry
            if (sub_ok && cand.q > best_q) {
                best_q = cand.q;
                best_cand = cand;
            }
            if (sub_ok && cand.q >= prev.q - 1e-9) {
                state = cand;
                solved = true;
                break;
            }
        }
        if (!solved) {
            const auto& tr = rep.objective_trace;
            const double last_dq =
                tr.size() >= 2 ? tr.back() - tr[tr.size() - 2] : std::numeric_limits<double>::max();
            const bool has_cand = best_q > -std::numeric_limits<double>::max();
            // converged: the trace had flattened out, or the subproblem solved
            // but could not move past the current iterate
            if (last_dq < 10.0 * config.epsilon ||
                (has_cand && best_q >= prev.q - config.epsilon)) {
                state = prev; // keep the last good iterate
                break;
            }
            // a genuine drop mid-climb means the current point expands badly
            // (e.g. a warm start with a vanishing column); the surrogate value
            // is real there, so accept it and keep going — the best iterate is
            // retained for the final answer either way
            if (has_cand) {
                state = best_cand;
                rep.objective_trace.push_back(state.q);
                ++rep.iterations;
                prev = state;
                if (state.q > best.q) best = state;
                continue;
            }
            failed = true;
            state = prev;
            break;
        }
        rep.objective_trace.push_back(state.q);
        ++rep.iterations;
        const double dq = std::abs(state.q - prev.q);
        prev = state;
        if (state.q > best.q) best = state;
        if (dq < config.epsilon) break;
        zero_streak = state.q < 1e-9 ? zero_streak + 1 : 0;
        if (zero_streak >= 5) break;
    }

    // report the best accepted iterate: a run that had to step through a dip
    // (or was warm-started above where it converged) keeps its best solution
    if (best.q > state.q) state = best;
    rep.q_final = state.q;
    fill_achieved(d, state, rep);
    rep.status = failed ? SolveStatus::NumericalFailure : SolveStatus::Optimal;
    rep.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

SolveReport run_sca(const ProblemData& d, const ScaConfig& config) {
    return run_sca(d, config, initialize_state(d));
}

} // namespace stin
