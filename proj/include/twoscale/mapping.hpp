#pragma once

#include <string>
#include <vector>

#include "twoscale/expr.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/linalg.hpp"

namespace twoscale {

struct DegenerateMapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MapBounds {
    double lo = 1e-6;
    double hi = 1e6;
};

// The micro-domain deformation zeta(x, yhat) with its symbolic partials
// dzeta[a][b] = d zeta_a / d yhat_b (constructed, never user-supplied).
struct Diffeo {
    VecExpr zeta;
    std::array<std::array<Expr, 2>, 2> dzeta;

    static Diffeo from_map(VecExpr z);
    static Diffeo identity();

    // True when the Jacobian (and hence J, K, nu) varies with the macro point.
    bool jacobian_depends_on_x() const;
};

// Tape-compiled evaluation of zeta and its Jacobian quantities.
class CompiledDiffeo {
public:
    CompiledDiffeo(const Diffeo& d, const ParamMap& params);

    Vec2 map(Vec2 x, Vec2 yhat) const;
    Mat2 jac(Vec2 x, Vec2 yhat) const;
    double detJ(Vec2 x, Vec2 yhat) const;     // throws on nonpositive determinant
    Mat2 kmat(Vec2 x, Vec2 yhat) const;       // throws when |det| <= 1e-12
    // Boundary covector nu = J K^T nhat; |nu| is the physical length element per
    // unit reference length and nu/|nu| the physical outward unit normal.
    Vec2 nanson(Vec2 x, Vec2 yhat, Vec2 nhat) const;

    bool jacobian_depends_on_x() const { return jac_depends_on_x_; }
    double det_raw(Vec2 x, Vec2 yhat) const { return jac(x, yhat).det(); }

private:
    CompiledExpr z0_, z1_;
    CompiledExpr d00_, d01_, d10_, d11_;
    bool jac_depends_on_x_;
};

// Per-(macro point, quadrature point) table of J, A = K K^T J and, on boundary
// faces, the covector nu and its length. Entries are keyed by integer indices
// over one shared reference quadrature layout; when the Jacobian of zeta is
// x-independent all macro points share a single row. Immutable once built.
class MapCache {
public:
    struct CellEntry {
        double J;
        double A00, A01, A11;  // symmetric positive definite wherever J > 0
    };
    struct FaceEntry {
        double J;
        Vec2 nu;
        double nu_len;
    };

    const CellEntry& cell(int point, int cell_idx, int q) const {
        return cells_[row(point) * cell_stride_ + cell_idx * nq_cell_ + q];
    }
    const FaceEntry& face(int point, int face_idx, int q) const {
        return faces_[row(point) * face_stride_ + face_idx * nq_face_ + q];
    }

    int point_count() const { return points_; }
    bool shared_row() const { return rows_ == 1 && points_ > 1; }
    bool has_cells() const { return !cells_.empty(); }

private:
    int points_ = 0, rows_ = 0;
    int nq_cell_ = 0, nq_face_ = 0;
    std::size_t cell_stride_ = 0, face_stride_ = 0;
    std::vector<CellEntry> cells_;
    std::vector<FaceEntry> faces_;

    int row(int point) const { return rows_ == 1 ? 0 : point; }

    friend MapCache build_cache(const CompiledDiffeo&, const std::vector<Vec2>&, const Grid&,
                                const QuadratureRule&, int, bool);
};

// Builds the cache over the product (macro points) x (micro quadrature layout);
// cell entries are optional (pass with_cells = false for boundary-only use).
// Aborts with the offending location on a degenerate map.
MapCache build_cache(const CompiledDiffeo& d, const std::vector<Vec2>& macro_points,
                     const Grid& micro, const QuadratureRule& rule, int workers,
                     bool with_cells = true);

struct DiffeoValidation {
    bool pass = true;
    double min_det = 0.0, max_det = 0.0;
    Vec2 worst_x{}, worst_yhat{};
    std::string message;
};

// Samples det grad_y zeta over the given lattices and checks the bounds
// c_lo <= det <= c_hi. Reports; never throws.
DiffeoValidation validate_diffeo(const CompiledDiffeo& d, MapBounds bounds,
                                 const std::vector<Vec2>& xs, const std::vector<Vec2>& yhats);

// Structural parameter checks: (|k1 - k2|/2)|Gamma_I_x| < 1 and
// (|k3 - k4|/2)|Gamma_O_x| < min D^w, with the boundary measures computed from
// the physical length element |nu|. Violations are warnings, not errors.
struct Assumption6Report {
    struct Row {
        double gamma_in, gamma_out;  // physical measures at this macro point
        bool ok1, ok2;
    };
    std::vector<Row> rows;
    double min_dw = 0.0;
    double lhs1_max = 0.0, lhs2_max = 0.0;
    bool ok1 = true, ok2 = true;  // conjunction over all points
};

Assumption6Report check_assumption6(double kappa1, double kappa2, double kappa3, double kappa4,
                                    const CompiledExpr& dw, const MapCache& cache,
                                    const Grid& micro, const QuadratureRule& rule,
                                    const BoundaryRoles& roles,
                                    const std::vector<Vec2>& macro_points);

}  // namespace twoscale
