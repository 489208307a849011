#pragma once

// Solver-agnostic convex subproblem layer: assemble linear, second-order-cone
// and Hermitian-PSD constraints over named variables, then solve with the
// built-in barrier method.  Complex-to-real lowering happens here once, so the
// optimization modules can stay in complex notation.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stin {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Real affine expression over the flattened parameter vector.
struct LinExpr {
    std::map<int, double> coeffs;
    double constant = 0.0;

    LinExpr() = default;
    /* implicit */ LinExpr(double c) : constant(c) {}

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double s);
    double eval(const VectorXd& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);
LinExpr operator-(LinExpr a);

// Complex affine expression (pair of real ones).
struct CLinExpr {
    LinExpr re, im;
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct SolverOptions {
    double feasibility_tol = 1e-6;
    double gap_tol = 1e-8;
    int max_newton_iters = 4000;
    double mu = 20.0;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = 0.0;
    VectorXd x;             // flattened parameters
    double primal_residual = 0.0;
    int newton_iters = 0;
};

class ConicProblem {
  public:
    // --- variable declaration (returns variable id) ---
    int add_scalar(const std::string& name);
    int add_cvector(const std::string& name, int n);
    int add_hermitian(const std::string& name, int n);

    // --- expression helpers ---
    LinExpr scalar(int var) const;
    // c^H x for a declared complex vector variable.
    CLinExpr inner(const VectorXcd& c, int vec_var) const;
    LinExpr re_inner(const VectorXcd& c, int vec_var) const;
    // Re tr(A X) for a declared Hermitian variable (exact tr(AX) if A Hermitian).
    LinExpr trace_product(const MatrixXcd& A, int herm_var) const;
    LinExpr trace(int herm_var) const;

    // --- constraints ---
    void add_eq(const LinExpr& e);             // e == 0
    void add_ineq(const LinExpr& e);           // e <= 0
    void add_soc(std::vector<LinExpr> u, LinExpr t); // ||u|| <= t
    void add_soc(const std::vector<CLinExpr>& u, const LinExpr& t);
    void add_psd(int herm_var);

    void set_objective(const LinExpr& e);      // maximize e

    // --- solve & extraction ---
    ConicSolution solve(const SolverOptions& opts = {}) const;
    double get_scalar(const ConicSolution& s, int var) const;
    VectorXcd get_cvector(const ConicSolution& s, int var) const;
    MatrixXcd get_hermitian(const ConicSolution& s, int var) const;

    // --- debugging dump: variables, then constraints, one per line ---
    std::string dump() const;
    static ConicProblem parse(const std::string& text);

    int num_params() const { return num_params_; }
    int num_constraints() const {
        return static_cast<int>(eqs_.size() + ineqs_.size() + socs_.size() + psd_vars_.size());
    }
    int num_inequalities() const { return static_cast<int>(ineqs_.size()); }
    int num_socs() const { return static_cast<int>(socs_.size()); }

  private:
    friend struct BarrierSolver;

    enum class VarKind { Scalar, CVector, Hermitian };
    struct VarInfo {
        VarKind kind;
        std::string name;
        int offset;  // first parameter index
        int dim;     // scalar:1, cvector:n, hermitian:n
        int params;  // number of real parameters
    };
    struct SocConstraint {
        LinExpr t;
        std::vector<LinExpr> u;
    };

    const VarInfo& check_var(int var, VarKind kind) const;

    std::vector<VarInfo> vars_;
    int num_params_ = 0;
    LinExpr objective_;
    std::vector<LinExpr> eqs_;
    std::vector<LinExpr> ineqs_;
    std::vector<SocConstraint> socs_;
    std::vector<int> psd_vars_;
};

// Real symmetric 2n embedding [[A,-B],[B,A]] of a complex matrix A+iB.
MatrixXd real_embedding(const MatrixXcd& m);

} // namespace stin
