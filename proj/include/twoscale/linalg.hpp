#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twoscale {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

struct Mat2 {
    // Row-major: [[a00, a01], [a10, a11]]
    double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    double det() const { return a00 * a11 - a01 * a10; }
    Mat2 transpose() const { return {a00, a10, a01, a11}; }
    Mat2 inverse() const {
        const double d = det();
        return {a11 / d, -a01 / d, -a10 / d, a00 / d};
    }
    // Cofactor matrix: det(A) * A^{-T}.
    Mat2 cofactor() const { return {a11, -a10, -a01, a00}; }
    Vec2 apply(Vec2 v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
    Mat2 mul(const Mat2& o) const {
        return {a00 * o.a00 + a01 * o.a10, a00 * o.a01 + a01 * o.a11,
                a10 * o.a00 + a11 * o.a10, a10 * o.a01 + a11 * o.a11};
    }
};

// Square sparse matrix in compressed row form with a fixed symmetric pattern.
class CsrMatrix {
public:
    CsrMatrix() = default;
    // Pattern given as per-row sorted column lists.
    CsrMatrix(int n, const std::vector<std::vector<int>>& pattern);

    int size() const { return n_; }
    void zero();
    void add(int row, int col, double v);
    double get(int row, int col) const;

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> diagonal() const;

    // Symmetric elimination of Dirichlet constraints: moves column contributions
    // to the rhs, zeroes row and column, puts 1 on the diagonal and the value in b.
    void eliminate(const std::vector<std::pair<int, double>>& constraints,
                   std::vector<double>& b);

    // Largest |A - A^T| entry relative to the largest |A| entry.
    double symmetry_error() const;

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return vals_; }
    std::vector<double>& values() { return vals_; }

private:
    int n_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> vals_;

    int find(int row, int col) const;
};

// Linear system with pending Dirichlet constraints.
struct SparseSystem {
    CsrMatrix A;
    std::vector<double> b;
    std::vector<std::pair<int, double>> dirichlet;  // dof -> prescribed value

    void apply_dirichlet() { A.eliminate(dirichlet, b); }
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CgResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // relative to ||b||
    bool indefinite = false;
};

// Jacobi-preconditioned conjugate gradients; terminates when
// ||b - A x|| <= tol * ||b||. Starts from x as given (callers pass zeros or a
// previous iterate). Reports negative curvature instead of looping on
// indefinite systems.
CgResult cg_solve(const CsrMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                  double tol, int maxit);

double norm2(const std::vector<double>& v);
void axpy(double a, const std::vector<double>& x, std::vector<double>& y);  // y += a x

}  // namespace twoscale
