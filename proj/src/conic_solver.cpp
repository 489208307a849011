#include "stin/conic.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace stin {

namespace {

using Row = std::vector<std::pair<int, double>>; // sparse coefficient row

struct CompiledRow {
    Row a;
    double b = 0.0;
    double eval(const VectorXd& x) const {
        double v = b;
        for (const auto& [i, c] : a) v += c * x(i);
        return v;
    }
};

CompiledRow compile(const LinExpr& e) {
    CompiledRow r;
    r.b = e.constant;
    r.a.assign(e.coeffs.begin(), e.coeffs.end());
    return r;
}

struct SocBlock {
    CompiledRow t;
    std::vector<CompiledRow> u;
};

struct PsdBlock {
    int offset; // first parameter of the Hermitian variable
    int n;      // complex dimension
    std::vector<MatrixXd> basis; // real 2n embeddings of the n^2 parameter directions

    void build() {
        basis.clear();
        MatrixXcd b = MatrixXcd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            b(i, i) = 1.0;
            basis.push_back(real_embedding(b));
            b(i, i) = 0.0;
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                b(i, j) = 1.0;
                b(j, i) = 1.0;
                basis.push_back(real_embedding(b));
                b(i, j) = std::complex<double>(0.0, 1.0);
                b(j, i) = std::complex<double>(0.0, -1.0);
                basis.push_back(real_embedding(b));
                b(i, j) = b(j, i) = 0.0;
            }
    }

    MatrixXd assemble(const VectorXd& x, double relax) const {
        MatrixXd m = MatrixXd::Identity(2 * n, 2 * n) * relax;
        for (int p = 0; p < n * n; ++p) m += x(offset + p) * basis[p];
        return m;
    }
};

} // namespace

struct BarrierSolver {
    const ConicProblem& prob;
    SolverOptions opts;

    int np = 0;        // parameters of the original problem
    int dim = 0;       // np, plus 1 in phase I for the relaxation scalar
    int relax_idx = -1;
    double nu = 0.0;   // total barrier parameter

    std::vector<CompiledRow> lin;
    std::vector<SocBlock> socs;
    std::vector<PsdBlock> psds;
    CompiledRow obj; // maximize

    MatrixXd null_basis; // x = x_part + null_basis * z
    VectorXd x_part;
    bool have_eqs = false;
    bool eq_consistent = true;
    int newton_iters = 0;

    explicit BarrierSolver(const ConicProblem& p, const SolverOptions& o) : prob(p), opts(o) {
        np = p.num_params_;
        obj = compile(p.objective_);
        for (const auto& e : p.ineqs_) lin.push_back(compile(e));
        for (const auto& s : p.socs_) {
            SocBlock b;
            b.t = compile(s.t);
            for (const auto& u : s.u) b.u.push_back(compile(u));
            socs.push_back(std::move(b));
        }
        for (int v : p.psd_vars_) {
            PsdBlock b;
            b.offset = p.vars_[v].offset;
            b.n = p.vars_[v].dim;
            b.build();
            psds.push_back(std::move(b));
        }
        nu = lin.size() + 2.0 * socs.size();
        for (const auto& b : psds) nu += 2.0 * b.n;
        setup_equalities();
    }

    void setup_equalities() {
        x_part = VectorXd::Zero(np);
        if (prob.eqs_.empty()) return;
        have_eqs = true;
        const int m = static_cast<int>(prob.eqs_.size());
        MatrixXd A = MatrixXd::Zero(m, np);
        VectorXd rhs(m);
        for (int r = 0; r < m; ++r) {
            rhs(r) = -prob.eqs_[r].constant;
            for (const auto& [i, c] : prob.eqs_[r].coeffs) A(r, i) = c;
        }
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
        x_part = cod.solve(rhs);
        eq_consistent = (A * x_part - rhs).norm() <= 1e-8 * (1.0 + rhs.norm());
        Eigen::FullPivLU<MatrixXd> lu(A);
        lu.setThreshold(1e-10);
        null_basis = lu.kernel();
        if (null_basis.cols() == 1 && null_basis.isZero(0)) null_basis.resize(np, 0);
    }

    // ---- barrier value / derivatives over the full (possibly extended) space ----

    bool in_domain(const VectorXd& x) const {
        const double s = relax_idx >= 0 ? x(relax_idx) : 0.0;
        for (const auto& r : lin)
            if (r.eval(x) - s >= 0) return false;
        for (const auto& b : socs) {
            const double t = b.t.eval(x) + s;
            if (t <= 0) return false;
            double uu = 0;
            for (const auto& u : b.u) uu += std::pow(u.eval(x), 2);
            if (t * t - uu <= 0) return false;
        }
        for (const auto& b : psds) {
            Eigen::LLT<MatrixXd> llt(b.assemble(x, s));
            if (llt.info() != Eigen::Success) return false;
        }
        if (relax_idx >= 0 && s <= -1.0) return false; // phase-I floor keeps s bounded
        return true;
    }

    double barrier_value(const VectorXd& x) const {
        const double s = relax_idx >= 0 ? x(relax_idx) : 0.0;
        double phi = 0.0;
        for (const auto& r : lin) phi -= std::log(s - r.eval(x));
        for (const auto& b : socs) {
            const double t = b.t.eval(x) + s;
            double uu = 0;
            for (const auto& u : b.u) uu += std::pow(u.eval(x), 2);
            phi -= std::log(t * t - uu);
        }
        for (const auto& b : psds) {
            Eigen::LLT<MatrixXd> llt(b.assemble(x, s));
            phi -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        }
        if (relax_idx >= 0) phi -= std::log(1.0 + s);
        return phi;
    }

    void add_outer(MatrixXd& H, const Row& r1, const Row& r2, double w) const {
        for (const auto& [i, ci] : r1)
            for (const auto& [j, cj] : r2) H(i, j) += w * ci * cj;
    }

    void barrier_derivs(const VectorXd& x, VectorXd& g, MatrixXd& H) const {
        const double s = relax_idx >= 0 ? x(relax_idx) : 0.0;
        g.setZero(dim);
        H.setZero(dim, dim);
        auto add_grad = [&](const Row& r, double w) {
            for (const auto& [i, c] : r) g(i) += w * c;
        };
        for (const auto& r : lin) {
            const double d = s - r.eval(x); // > 0
            Row row = r.a;
            if (relax_idx >= 0) row.emplace_back(relax_idx, -1.0);
            add_grad(row, 1.0 / d);
            add_outer(H, row, row, 1.0 / (d * d));
        }
        for (const auto& b : socs) {
            // phi = -log(t^2 - u'u); rows g0=t (with relax), gi=u_i.
            std::vector<Row> rows;
            std::vector<double> vals;
            Row trow = b.t.a;
            if (relax_idx >= 0) trow.emplace_back(relax_idx, 1.0);
            rows.push_back(std::move(trow));
            vals.push_back(b.t.eval(x) + s);
            for (const auto& u : b.u) {
                rows.push_back(u.a);
                vals.push_back(u.eval(x));
            }
            const int m = static_cast<int>(rows.size());
            double d = vals[0] * vals[0];
            for (int i = 1; i < m; ++i) d -= vals[i] * vals[i];
            // grad wrt stacked value vector: -2*Q*v/d with Q = diag(1,-1,..,-1)
            std::vector<double> qv(m);
            for (int i = 0; i < m; ++i) qv[i] = (i == 0 ? vals[i] : -vals[i]);
            for (int i = 0; i < m; ++i) add_grad(rows[i], -2.0 * qv[i] / d);
            // hess: 4*Qv Qv'/d^2 - 2*Q/d
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    double w = 4.0 * qv[i] * qv[j] / (d * d);
                    if (i == j) w -= 2.0 * (i == 0 ? 1.0 : -1.0) / d;
                    if (w != 0.0) add_outer(H, rows[i], rows[j], w);
                }
        }
        for (const auto& b : psds) {
            const MatrixXd m = b.assemble(x, s);
            const MatrixXd minv = m.llt().solve(MatrixXd::Identity(m.rows(), m.cols()));
            const int npar = b.n * b.n;
            std::vector<MatrixXd> cs(npar + (relax_idx >= 0 ? 1 : 0));
            for (int p = 0; p < npar; ++p) cs[p] = minv * b.basis[p];
            if (relax_idx >= 0) cs[npar] = minv;
            auto gidx = [&](int p) { return p < npar ? b.offset + p : relax_idx; };
            const int total = static_cast<int>(cs.size());
            for (int p = 0; p < total; ++p) {
                g(gidx(p)) -= cs[p].trace();
                for (int q = p; q < total; ++q) {
                    const double v = cs[p].cwiseProduct(cs[q].transpose()).sum();
                    H(gidx(p), gidx(q)) += v;
                    if (q != p) H(gidx(q), gidx(p)) += v;
                }
            }
        }
        if (relax_idx >= 0) {
            const double d = 1.0 + s;
            g(relax_idx) -= 1.0 / d;
            H(relax_idx, relax_idx) += 1.0 / (d * d);
        }
    }

    // objective gradient over the full space (maximize -> minimize negative)
    VectorXd objective_grad(double t, bool phase1) const {
        VectorXd c = VectorXd::Zero(dim);
        if (phase1) {
            c(relax_idx) = t;
        } else {
            for (const auto& [i, v] : obj.a) c(i) = -t * v;
        }
        return c;
    }

    double objective_value(const VectorXd& x, double t, bool phase1) const {
        return phase1 ? t * x(relax_idx) : -t * obj.eval(x);
    }

    // Newton centering in the reduced space; returns false on numerical failure.
    bool center(VectorXd& x, double t, bool phase1, const MatrixXd& basis,
                double stop_below = -std::numeric_limits<double>::infinity()) {
        VectorXd g(dim);
        MatrixXd H(dim, dim);
        for (int iter = 0; iter < 80; ++iter) {
            if (++newton_iters > opts.max_newton_iters) return false;
            if (phase1 && x(relax_idx) < stop_below) return true;
            barrier_derivs(x, g, H);
            g += objective_grad(t, phase1);
            VectorXd gz = basis.transpose() * g;
            MatrixXd Hz = basis.transpose() * H * basis;
            Hz.diagonal().array() += 1e-12 * (1.0 + Hz.diagonal().cwiseAbs().maxCoeff());
            Eigen::LDLT<MatrixXd> ldlt(Hz);
            VectorXd dz = -ldlt.solve(gz);
            double lambda2 = -gz.dot(dz);
            if (!std::isfinite(lambda2)) return false;
            if (lambda2 < 0) { // fall back to gradient descent direction
                dz = -gz;
                lambda2 = gz.squaredNorm();
            }
            if (lambda2 / 2.0 < 1e-10) return true;
            const VectorXd dx = basis * dz;
            double f0 = objective_value(x, t, phase1) + barrier_value(x);
            double alpha = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                VectorXd xn = x + alpha * dx;
                if (in_domain(xn)) {
                    const double fn = objective_value(xn, t, phase1) + barrier_value(xn);
                    if (fn <= f0 - 1e-4 * alpha * lambda2) {
                        x = xn;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!moved) return true; // stalled at numerical precision; accept current point
        }
        return true;
    }

    double worst_violation(const VectorXd& x) const {
        double w = 0.0;
        for (const auto& e : prob.eqs_) w = std::max(w, std::abs(e.eval(x)));
        for (const auto& r : lin) w = std::max(w, r.eval(x));
        for (const auto& b : socs) {
            double uu = 0;
            for (const auto& u : b.u) uu += std::pow(u.eval(x), 2);
            w = std::max(w, std::sqrt(uu) - b.t.eval(x));
        }
        for (const auto& b : psds) {
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.assemble(x, 0.0),
                                                       Eigen::EigenvaluesOnly);
            w = std::max(w, -es.eigenvalues().minCoeff());
        }
        return w;
    }

    ConicSolution run() {
        ConicSolution sol;
        if (!eq_consistent) {
            sol.status = SolveStatus::Infeasible;
            return sol;
        }
        const MatrixXd basis = have_eqs ? null_basis : MatrixXd::Identity(np, np);
        if (have_eqs && basis.cols() == 0) {
            // Equalities pin the point entirely.
            sol.x = x_part;
            sol.primal_residual = worst_violation(sol.x);
            sol.objective = obj.eval(sol.x);
            sol.status = sol.primal_residual <= opts.feasibility_tol
                             ? SolveStatus::Optimal
                             : SolveStatus::Infeasible;
            return sol;
        }
        if (nu == 0.0) {
            sol.status = SolveStatus::NumericalFailure; // unconstrained direction: unsupported
            return sol;
        }

        // Phase I: find a strictly feasible point, relaxing every cone by s.
        VectorXd x = x_part;
        relax_idx = np;
        dim = np + 1;
        {
            VectorXd xe(dim);
            xe.head(np) = x;
            xe(np) = 1.0;
            // grow s until the relaxed point is interior
            for (int k = 0; k < 60 && !in_domain(xe); ++k) xe(np) = xe(np) * 2.0 + 1.0;
            if (!in_domain(xe)) {
                sol.status = SolveStatus::NumericalFailure;
                return sol;
            }
            MatrixXd basis_e = MatrixXd::Zero(dim, basis.cols() + 1);
            basis_e.topLeftCorner(np, basis.cols()) = basis;
            basis_e(np, basis.cols()) = 1.0;
            double t = 1.0;
            const double nu1 = nu + 1.0;
            while (true) {
                if (!center(xe, t, true, basis_e, -0.25)) {
                    sol.status = SolveStatus::NumericalFailure;
                    return sol;
                }
                if (xe(np) < -1e-9) break;
                if (nu1 / t < 0.1 * opts.feasibility_tol) break;
                t *= opts.mu;
            }
            if (xe(np) >= 0.0) {
                sol.status = xe(np) > opts.feasibility_tol ? SolveStatus::Infeasible
                                                           : SolveStatus::NumericalFailure;
                return sol;
            }
            x = xe.head(np);
        }

        // Phase II: path following on the true objective.
        relax_idx = -1;
        dim = np;
        double t = std::max(1.0, nu / (1.0 + std::abs(obj.eval(x))));
        while (true) {
            if (!center(x, t, false, basis)) {
                sol.status = SolveStatus::NumericalFailure;
                return sol;
            }
            if (nu / t <= opts.gap_tol * std::max(1.0, std::abs(obj.eval(x)))) break;
            t *= opts.mu;
        }

        sol.x = x;
        sol.objective = obj.eval(x);
        sol.primal_residual = worst_violation(x);
        sol.newton_iters = newton_iters;
        sol.status = std::isfinite(sol.objective) && sol.primal_residual <= opts.feasibility_tol
                         ? SolveStatus::Optimal
                         : SolveStatus::NumericalFailure;
        return sol;
    }
};

ConicSolution ConicProblem::solve(const SolverOptions& opts) const {
    try {
        BarrierSolver solver(*this, opts);
        return solver.run();
    } catch (const std::exception&) {
        ConicSolution sol;
        sol.status = SolveStatus::NumericalFailure;
        return sol;
    }
}

} // namespace stin
