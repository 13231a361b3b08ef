#include "twoscale/linalg.hpp"

#include <algorithm>
#include <cassert>

namespace twoscale {

CsrMatrix::CsrMatrix(int n, const std::vector<std::vector<int>>& pattern) : n_(n) {
    assert(static_cast<int>(pattern.size()) == n);
    row_ptr_.resize(n + 1, 0);
    for (int r = 0; r < n; ++r) row_ptr_[r + 1] = row_ptr_[r] + static_cast<int>(pattern[r].size());
    col_idx_.reserve(row_ptr_[n]);
    for (int r = 0; r < n; ++r) {
        assert(std::is_sorted(pattern[r].begin(), pattern[r].end()));
        col_idx_.insert(col_idx_.end(), pattern[r].begin(), pattern[r].end());
    }
    vals_.assign(row_ptr_[n], 0.0);
}

void CsrMatrix::zero() { std::fill(vals_.begin(), vals_.end(), 0.0); }

int CsrMatrix::find(int row, int col) const {
    const int lo = row_ptr_[row], hi = row_ptr_[row + 1];
    auto it = std::lower_bound(col_idx_.begin() + lo, col_idx_.begin() + hi, col);
    if (it == col_idx_.begin() + hi || *it != col) return -1;
    return static_cast<int>(it - col_idx_.begin());
}

void CsrMatrix::add(int row, int col, double v) {
    const int k = find(row, col);
    if (k < 0) throw SolverError("matrix entry outside sparsity pattern");
    vals_[k] += v;
}

double CsrMatrix::get(int row, int col) const {
    const int k = find(row, col);
    return k < 0 ? 0.0 : vals_[k];
}

void CsrMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n_, 0.0);
    for (int r = 0; r < n_; ++r) {
        double s = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += vals_[k] * x[col_idx_[k]];
        y[r] = s;
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (int r = 0; r < n_; ++r) d[r] = get(r, r);
    return d;
}

void CsrMatrix::eliminate(const std::vector<std::pair<int, double>>& constraints,
                          std::vector<double>& b) {
    if (constraints.empty()) return;
    std::vector<char> is_constrained(n_, 0);
    std::vector<double> value(n_, 0.0);
    for (const auto& [dof, g] : constraints) {
        is_constrained[dof] = 1;
        value[dof] = g;
    }
    for (int r = 0; r < n_; ++r) {
        if (is_constrained[r]) {
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                vals_[k] = (col_idx_[k] == r) ? 1.0 : 0.0;
            b[r] = value[r];
        } else {
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                const int c = col_idx_[k];
                if (is_constrained[c]) {
                    b[r] -= vals_[k] * value[c];
                    vals_[k] = 0.0;
                }
            }
        }
    }
}

double CsrMatrix::symmetry_error() const {
    double max_entry = 0.0, max_diff = 0.0;
    for (int r = 0; r < n_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const int c = col_idx_[k];
            max_entry = std::max(max_entry, std::abs(vals_[k]));
            if (c > r) max_diff = std::max(max_diff, std::abs(vals_[k] - get(c, r)));
        }
    }
    return max_entry > 0.0 ? max_diff / max_entry : 0.0;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return std::sqrt(s);
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

CgResult cg_solve(const CsrMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                  double tol, int maxit) {
    const int n = A.size();
    CgResult res;
    x.resize(n, 0.0);

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        res.converged = true;
        return res;
    }

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = (d != 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r(n), z(n), p(n), Ap(n);
    A.apply(x, Ap);
    for (int i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = 0.0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];

    double rnorm = norm2(r);
    res.residual = rnorm / bnorm;
    if (res.residual <= tol) {
        res.converged = true;
        return res;
    }

    for (int it = 1; it <= maxit; ++it) {
        A.apply(p, Ap);
        double pAp = 0.0;
        for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0) {
            res.indefinite = true;
            res.iterations = it;
            return res;
        }
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (int i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        rnorm = norm2(r);
        res.iterations = it;
        res.residual = rnorm / bnorm;
        if (res.residual <= tol) {
            res.converged = true;
            return res;
        }
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        double rz_new = 0.0;
        for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

}  // namespace twoscale
