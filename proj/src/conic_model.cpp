#include "stin/conic.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace stin {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    constant += o.constant;
    for (const auto& [i, c] : o.coeffs) coeffs[i] += c;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    constant -= o.constant;
    for (const auto& [i, c] : o.coeffs) coeffs[i] -= c;
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    constant *= s;
    for (auto& [i, c] : coeffs) c *= s;
    return *this;
}

double LinExpr::eval(const VectorXd& x) const {
    double v = constant;
    for (const auto& [i, c] : coeffs) v += c * x(i);
    return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }

int ConicProblem::add_scalar(const std::string& name) {
    vars_.push_back({VarKind::Scalar, name, num_params_, 1, 1});
    num_params_ += 1;
    return static_cast<int>(vars_.size()) - 1;
}

int ConicProblem::add_cvector(const std::string& name, int n) {
    vars_.push_back({VarKind::CVector, name, num_params_, n, 2 * n});
    num_params_ += 2 * n;
    return static_cast<int>(vars_.size()) - 1;
}

int ConicProblem::add_hermitian(const std::string& name, int n) {
    vars_.push_back({VarKind::Hermitian, name, num_params_, n, n * n});
    num_params_ += n * n;
    return static_cast<int>(vars_.size()) - 1;
}

const ConicProblem::VarInfo& ConicProblem::check_var(int var, VarKind kind) const {
    if (var < 0 || var >= static_cast<int>(vars_.size()))
        throw std::invalid_argument("conic: unknown variable id");
    if (vars_[var].kind != kind) throw std::invalid_argument("conic: variable kind mismatch");
    return vars_[var];
}

LinExpr ConicProblem::scalar(int var) const {
    const auto& v = check_var(var, VarKind::Scalar);
    LinExpr e;
    e.coeffs[v.offset] = 1.0;
    return e;
}

CLinExpr ConicProblem::inner(const VectorXcd& c, int vec_var) const {
    const auto& v = check_var(vec_var, VarKind::CVector);
    if (c.size() != v.dim) throw std::invalid_argument("conic: inner dimension mismatch");
    CLinExpr e;
    for (int k = 0; k < v.dim; ++k) {
        const int re_idx = v.offset + 2 * k, im_idx = re_idx + 1;
        const double cr = c(k).real(), ci = c(k).imag();
        if (cr != 0) { e.re.coeffs[re_idx] += cr; e.im.coeffs[im_idx] += cr; }
        if (ci != 0) { e.re.coeffs[im_idx] += ci; e.im.coeffs[re_idx] -= ci; }
    }
    return e;
}

LinExpr ConicProblem::re_inner(const VectorXcd& c, int vec_var) const {
    return inner(c, vec_var).re;
}

LinExpr ConicProblem::trace_product(const MatrixXcd& A, int herm_var) const {
    const auto& v = check_var(herm_var, VarKind::Hermitian);
    const int n = v.dim;
    if (A.rows() != n || A.cols() != n)
        throw std::invalid_argument("conic: trace_product dimension mismatch");
    LinExpr e;
    int off = v.offset;
    for (int i = 0; i < n; ++i) e.coeffs[off + i] += A(i, i).real();
    int p = off + n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            // X_ij = re + i*im, X_ji = conj; Re tr(AX) picks up both entries.
            const double ar = 0.5 * (A(i, j) + A(j, i)).real();
            const double ai = 0.5 * (A(i, j) - A(j, i)).imag();
            e.coeffs[p] += 2.0 * ar;
            e.coeffs[p + 1] += 2.0 * ai;
            p += 2;
        }
    return e;
}

LinExpr ConicProblem::trace(int herm_var) const {
    const auto& v = check_var(herm_var, VarKind::Hermitian);
    LinExpr e;
    for (int i = 0; i < v.dim; ++i) e.coeffs[v.offset + i] = 1.0;
    return e;
}

void ConicProblem::add_eq(const LinExpr& e) { eqs_.push_back(e); }
void ConicProblem::add_ineq(const LinExpr& e) { ineqs_.push_back(e); }

void ConicProblem::add_soc(std::vector<LinExpr> u, LinExpr t) {
    socs_.push_back({std::move(t), std::move(u)});
}

void ConicProblem::add_soc(const std::vector<CLinExpr>& u, const LinExpr& t) {
    std::vector<LinExpr> rows;
    rows.reserve(2 * u.size());
    for (const auto& e : u) {
        rows.push_back(e.re);
        rows.push_back(e.im);
    }
    add_soc(std::move(rows), t);
}

void ConicProblem::add_psd(int herm_var) {
    check_var(herm_var, VarKind::Hermitian);
    psd_vars_.push_back(herm_var);
}

void ConicProblem::set_objective(const LinExpr& e) { objective_ = e; }

double ConicProblem::get_scalar(const ConicSolution& s, int var) const {
    return s.x(check_var(var, VarKind::Scalar).offset);
}

VectorXcd ConicProblem::get_cvector(const ConicSolution& s, int var) const {
    const auto& v = check_var(var, VarKind::CVector);
    VectorXcd out(v.dim);
    for (int k = 0; k < v.dim; ++k)
        out(k) = {s.x(v.offset + 2 * k), s.x(v.offset + 2 * k + 1)};
    return out;
}

MatrixXcd ConicProblem::get_hermitian(const ConicSolution& s, int var) const {
    const auto& v = check_var(var, VarKind::Hermitian);
    const int n = v.dim;
    MatrixXcd out(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = s.x(v.offset + i);
    int p = v.offset + n;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            out(i, j) = {s.x(p), s.x(p + 1)};
            out(j, i) = std::conj(out(i, j));
            p += 2;
        }
    return out;
}

MatrixXd real_embedding(const MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    MatrixXd out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = m.real();
    out.bottomRightCorner(n, n) = m.real();
    out.topRightCorner(n, n) = -m.imag();
    out.bottomLeftCorner(n, n) = m.imag();
    return out;
}

namespace {

std::string expr_to_string(const LinExpr& e) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", e.constant);
    std::string s = buf;
    for (const auto& [i, c] : e.coeffs) {
        std::snprintf(buf, sizeof buf, " %d:%a", i, c);
        s += buf;
    }
    return s;
}

LinExpr expr_from_stream(std::istream& in) {
    LinExpr e;
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("conic parse: missing expression");
    e.constant = std::strtod(tok.c_str(), nullptr);
    while (in >> tok) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos) {
            // Not a term; caller handles separators by pre-splitting.
            throw std::runtime_error("conic parse: bad term '" + tok + "'");
        }
        e.coeffs[std::stoi(tok.substr(0, colon))] =
            std::strtod(tok.c_str() + colon + 1, nullptr);
    }
    return e;
}

LinExpr expr_from_string(const std::string& s) {
    std::istringstream in(s);
    return expr_from_stream(in);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string ConicProblem::dump() const {
    std::ostringstream out;
    for (const auto& v : vars_) {
        switch (v.kind) {
            case VarKind::Scalar: out << "var s " << v.name << "\n"; break;
            case VarKind::CVector: out << "var v " << v.name << " " << v.dim << "\n"; break;
            case VarKind::Hermitian: out << "var h " << v.name << " " << v.dim << "\n"; break;
        }
    }
    out << "maximize " << expr_to_string(objective_) << "\n";
    for (const auto& e : eqs_) out << "eq " << expr_to_string(e) << "\n";
    for (const auto& e : ineqs_) out << "ineq " << expr_to_string(e) << "\n";
    for (const auto& s : socs_) {
        out << "soc " << expr_to_string(s.t);
        for (const auto& u : s.u) out << " | " << expr_to_string(u);
        out << "\n";
    }
    for (int v : psd_vars_) out << "psd " << vars_[v].name << "\n";
    return out.str();
}

ConicProblem ConicProblem::parse(const std::string& text) {
    ConicProblem p;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string kw;
        in >> kw;
        if (kw == "var") {
            std::string kind, name;
            in >> kind >> name;
            if (kind == "s") {
                p.add_scalar(name);
            } else {
                int n;
                in >> n;
                kind == "v" ? p.add_cvector(name, n) : p.add_hermitian(name, n);
            }
        } else if (kw == "maximize") {
            p.objective_ = expr_from_stream(in);
        } else if (kw == "eq") {
            p.eqs_.push_back(expr_from_stream(in));
        } else if (kw == "ineq") {
            p.ineqs_.push_back(expr_from_stream(in));
        } else if (kw == "soc") {
            std::string rest;
            std::getline(in, rest);
            const auto parts = split(rest, '|');
            SocConstraint c;
            c.t = expr_from_string(parts[0]);
            for (size_t i = 1; i < parts.size(); ++i) c.u.push_back(expr_from_string(parts[i]));
            p.socs_.push_back(std::move(c));
        } else if (kw == "psd") {
            std::string name;
            in >> name;
            for (size_t i = 0; i < p.vars_.size(); ++i)
                if (p.vars_[i].name == name) p.psd_vars_.push_back(static_cast<int>(i));
        } else {
            throw std::runtime_error("conic parse: unknown line '" + line + "'");
        }
    }
    return p;
}

} // namespace stin
