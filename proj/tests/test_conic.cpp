#include "doctest.h"

#include "stin/conic.hpp"
#include "stin/rng.hpp"

#include <Eigen/Eigenvalues>

using namespace stin;

TEST_CASE("trivial SOC: maximize t subject to |t| <= 1") {
    ConicProblem p;
    const int t = p.add_scalar("t");
    p.set_objective(p.scalar(t));
    p.add_soc({p.scalar(t)}, LinExpr(1.0));
    const auto sol = p.solve();
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(p.get_scalar(sol, t) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("SOC ball: maximize x+y over the radius-sqrt(2) disc") {
    ConicProblem p;
    const int x = p.add_scalar("x"), y = p.add_scalar("y");
    p.set_objective(p.scalar(x) + p.scalar(y));
    p.add_soc({p.scalar(x), p.scalar(y)}, LinExpr(std::sqrt(2.0)));
    const auto sol = p.solve();
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(p.get_scalar(sol, x) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("PSD variational identity: max tr(AX), tr(X)=1, X psd gives lambda_max") {
    Rng rng(42);
    MatrixXcd a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = {rng.normal(), rng.normal()};
    a = ((a + a.adjoint()) / 2.0).eval();

    ConicProblem p;
    const int x = p.add_hermitian("X", 3);
    p.add_psd(x);
    p.add_eq(p.trace(x) - LinExpr(1.0));
    p.set_objective(p.trace_product(a, x));
    const auto sol = p.solve();
    REQUIRE(sol.status == SolveStatus::Optimal);

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
    const double lmax = es.eigenvalues().maxCoeff();
    CHECK(sol.objective == doctest::Approx(lmax).epsilon(1e-6));

    // and the maximizer concentrates on the top eigenvector
    const MatrixXcd xopt = p.get_hermitian(sol, x);
    const VectorXcd v = es.eigenvectors().col(2);
    CHECK(std::abs((v.adjoint() * xopt * v)(0).real() - 1.0) < 1e-4);
}

TEST_CASE("3-variable LP solves to the hand-enumerated vertex") {
    // max x + 2y + 3z  s.t. x+y+z <= 4, y+z <= 3, x <= 2, x,y,z >= 0
    // vertex enumeration gives (1, 0, 3) with value 10.
    ConicProblem p;
    const int x = p.add_scalar("x"), y = p.add_scalar("y"), z = p.add_scalar("z");
    p.set_objective(p.scalar(x) + 2.0 * p.scalar(y) + 3.0 * p.scalar(z));
    p.add_ineq(p.scalar(x) + p.scalar(y) + p.scalar(z) - LinExpr(4.0));
    p.add_ineq(p.scalar(y) + p.scalar(z) - LinExpr(3.0));
    p.add_ineq(p.scalar(x) - LinExpr(2.0));
    p.add_ineq(-p.scalar(x));
    p.add_ineq(-p.scalar(y));
    p.add_ineq(-p.scalar(z));
    const auto sol = p.solve();
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(p.get_scalar(sol, x) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(p.get_scalar(sol, z) == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("infeasible linear system is reported as such") {
    ConicProblem p;
    const int x = p.add_scalar("x");
    p.set_objective(p.scalar(x));
    p.add_ineq(p.scalar(x) - LinExpr(1.0));   // x <= 1
    p.add_ineq(LinExpr(2.0) - p.scalar(x));   // x >= 2
    const auto sol = p.solve();
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("dump/parse round-trip reproduces the constraint set") {
    ConicProblem p;
    const int t = p.add_scalar("t");
    const int w = p.add_cvector("w", 2);
    const int x = p.add_hermitian("X", 2);
    VectorXcd h(2);
    h << std::complex<double>(0.3, -1.1), std::complex<double>(2.0, 0.25);
    p.set_objective(p.scalar(t));
    p.add_eq(p.trace(x) - LinExpr(1.0));
    p.add_ineq(p.re_inner(h, w) - 2.0 * p.scalar(t));
    p.add_soc({p.inner(h, w)}, p.scalar(t) + LinExpr(0.5));
    p.add_psd(x);

    const std::string text = p.dump();
    const ConicProblem q = ConicProblem::parse(text);
    CHECK(q.dump() == text);
    CHECK(q.num_constraints() == p.num_constraints());
}

TEST_CASE("real embedding preserves the spectrum of a Hermitian matrix") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        MatrixXcd a(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = {rng.normal(), rng.normal()};
        a = ((a + a.adjoint()) / 2.0).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> ec(a);
        Eigen::SelfAdjointEigenSolver<MatrixXd> er(real_embedding(a));
        CHECK(std::abs(ec.eigenvalues().maxCoeff() - er.eigenvalues().maxCoeff()) < 1e-8);
        CHECK(std::abs(ec.eigenvalues().minCoeff() - er.eigenvalues().minCoeff()) < 1e-8);
    }
}

TEST_CASE("solution satisfies constraints within the feasibility tolerance") {
    ConicProblem p;
    const int w = p.add_cvector("w", 3);
    VectorXcd h(3);
    h << std::complex<double>(1, 0), std::complex<double>(0, 1), std::complex<double>(1, 1);
    p.set_objective(p.re_inner(h, w));
    // ||w|| <= 2 via SOC on the identity rows
    std::vector<CLinExpr> rows;
    for (int k = 0; k < 3; ++k) {
        VectorXcd e = VectorXcd::Zero(3);
        e(k) = 1.0;
        rows.push_back(p.inner(e, w));
    }
    p.add_soc(rows, LinExpr(2.0));
    const auto sol = p.solve();
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0 * h.norm()).epsilon(1e-6));
    CHECK(sol.primal_residual <= 1e-6);
}
