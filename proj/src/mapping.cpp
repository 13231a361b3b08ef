#include "twoscale/mapping.hpp"

#include <cmath>
#include <sstream>

#include "twoscale/parallel.hpp"

namespace twoscale {

Diffeo Diffeo::from_map(VecExpr z) {
    Diffeo d;
    d.zeta = std::move(z);
    d.dzeta[0][0] = d.zeta.c0.diff(Var::y0).simplified();
    d.dzeta[0][1] = d.zeta.c0.diff(Var::y1).simplified();
    d.dzeta[1][0] = d.zeta.c1.diff(Var::y0).simplified();
    d.dzeta[1][1] = d.zeta.c1.diff(Var::y1).simplified();
    return d;
}

Diffeo Diffeo::identity() {
    return from_map({Expr::variable(Var::y0), Expr::variable(Var::y1)});
}

bool Diffeo::jacobian_depends_on_x() const {
    for (const auto& row : dzeta)
        for (const auto& e : row)
            if (e.depends_on(Var::x0) || e.depends_on(Var::x1)) return true;
    return false;
}

CompiledDiffeo::CompiledDiffeo(const Diffeo& d, const ParamMap& params)
    : z0_(d.zeta.c0, params),
      z1_(d.zeta.c1, params),
      d00_(d.dzeta[0][0], params),
      d01_(d.dzeta[0][1], params),
      d10_(d.dzeta[1][0], params),
      d11_(d.dzeta[1][1], params),
      jac_depends_on_x_(d.jacobian_depends_on_x()) {}

Vec2 CompiledDiffeo::map(Vec2 x, Vec2 yhat) const {
    return {z0_(x.x, x.y, yhat.x, yhat.y), z1_(x.x, x.y, yhat.x, yhat.y)};
}

Mat2 CompiledDiffeo::jac(Vec2 x, Vec2 yhat) const {
    return {d00_(x.x, x.y, yhat.x, yhat.y), d01_(x.x, x.y, yhat.x, yhat.y),
            d10_(x.x, x.y, yhat.x, yhat.y), d11_(x.x, x.y, yhat.x, yhat.y)};
}

namespace {
[[noreturn]] void degenerate(const char* what, double det, Vec2 x, Vec2 yhat) {
    std::ostringstream os;
    os << what << ": det grad_y zeta = " << det << " at x = (" << x.x << ", " << x.y
       << "), yhat = (" << yhat.x << ", " << yhat.y << ")";
    throw DegenerateMapError(os.str());
}
}  // namespace

double CompiledDiffeo::detJ(Vec2 x, Vec2 yhat) const {
    const double det = jac(x, yhat).det();
    if (det <= 0.0) degenerate("nonpositive Jacobian determinant", det, x, yhat);
    return det;
}

Mat2 CompiledDiffeo::kmat(Vec2 x, Vec2 yhat) const {
    const Mat2 F = jac(x, yhat);
    const double det = F.det();
    if (std::abs(det) <= 1e-12) degenerate("singular Jacobian", det, x, yhat);
    return F.inverse();
}

Vec2 CompiledDiffeo::nanson(Vec2 x, Vec2 yhat, Vec2 nhat) const {
    const Mat2 F = jac(x, yhat);
    const double det = F.det();
    if (std::abs(det) <= 1e-12) degenerate("singular Jacobian", det, x, yhat);
    // J K^T nhat = cof(F) nhat; no inversion needed.
    return F.cofactor().apply(nhat);
}

MapCache build_cache(const CompiledDiffeo& d, const std::vector<Vec2>& macro_points,
                     const Grid& micro, const QuadratureRule& rule, int workers,
                     bool with_cells) {
    MapCache cache;
    cache.points_ = static_cast<int>(macro_points.size());
    cache.rows_ = d.jacobian_depends_on_x() ? cache.points_ : std::min(1, cache.points_);
    cache.nq_cell_ = rule.n_cell();
    cache.nq_face_ = rule.n_face();
    cache.cell_stride_ = with_cells ? std::size_t(micro.cell_count()) * cache.nq_cell_ : 0;
    cache.face_stride_ = std::size_t(micro.boundary_faces().size()) * cache.nq_face_;
    cache.cells_.resize(cache.cell_stride_ * cache.rows_);
    cache.faces_.resize(cache.face_stride_ * cache.rows_);

    parallel_for(workers, cache.rows_, [&](std::int64_t r) {
        const Vec2 x = macro_points[r];
        if (with_cells) {
            for (int c = 0; c < micro.cell_count(); ++c) {
                for (int q = 0; q < cache.nq_cell_; ++q) {
                    const Vec2 yq = micro.cell_point(c, rule.cell_points[q].x, rule.cell_points[q].y);
                    const Mat2 F = d.jac(x, yq);
                    const double det = F.det();
                    if (det <= 1e-12) degenerate("degenerate map in cache build", det, x, yq);
                    // A = K K^T J = cof(F)^T cof(F) / det
                    const Mat2 C = F.cofactor();
                    MapCache::CellEntry& e =
                        cache.cells_[r * cache.cell_stride_ + std::size_t(c) * cache.nq_cell_ + q];
                    e.J = det;
                    e.A00 = (C.a00 * C.a00 + C.a10 * C.a10) / det;
                    e.A01 = (C.a00 * C.a01 + C.a10 * C.a11) / det;
                    e.A11 = (C.a01 * C.a01 + C.a11 * C.a11) / det;
                }
            }
        }
        const auto& faces = micro.boundary_faces();
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const FaceParam fp = face_parametrization(micro, faces[f]);
            for (int q = 0; q < cache.nq_face_; ++q) {
                const Vec2 yq = fp.point(rule.face_points[q]);
                const Mat2 F = d.jac(x, yq);
                const double det = F.det();
                if (det <= 1e-12) degenerate("degenerate map in cache build", det, x, yq);
                MapCache::FaceEntry& e =
                    cache.faces_[r * cache.face_stride_ + f * cache.nq_face_ + q];
                e.J = det;
                e.nu = F.cofactor().apply(fp.normal);
                e.nu_len = e.nu.norm();
            }
        }
    });
    return cache;
}

DiffeoValidation validate_diffeo(const CompiledDiffeo& d, MapBounds bounds,
                                 const std::vector<Vec2>& xs, const std::vector<Vec2>& yhats) {
    DiffeoValidation v;
    bool first = true;
    for (const Vec2& x : xs) {
        for (const Vec2& y : yhats) {
            const double det = d.jac(x, y).det();
            if (first || det < v.min_det) {
                v.worst_x = x;
                v.worst_yhat = y;
            }
            v.min_det = first ? det : std::min(v.min_det, det);
            v.max_det = first ? det : std::max(v.max_det, det);
            first = false;
        }
    }
    v.pass = !first && v.min_det >= bounds.lo && v.max_det <= bounds.hi && v.min_det > 0.0;
    std::ostringstream os;
    os << "det grad_y zeta in [" << v.min_det << ", " << v.max_det << "], required ["
       << bounds.lo << ", " << bounds.hi << "]";
    if (!v.pass)
        os << "; violated at x = (" << v.worst_x.x << ", " << v.worst_x.y << "), yhat = ("
           << v.worst_yhat.x << ", " << v.worst_yhat.y << ")";
    v.message = os.str();
    return v;
}

Assumption6Report check_assumption6(double kappa1, double kappa2, double kappa3, double kappa4,
                                    const CompiledExpr& dw, const MapCache& cache,
                                    const Grid& micro, const QuadratureRule& rule,
                                    const BoundaryRoles& roles,
                                    const std::vector<Vec2>& macro_points) {
    Assumption6Report rep;
    rep.min_dw = std::numeric_limits<double>::infinity();
    for (const Vec2& x : macro_points) rep.min_dw = std::min(rep.min_dw, dw(x.x, x.y));

    const auto& faces = micro.boundary_faces();
    rep.rows.reserve(macro_points.size());
    for (std::size_t i = 0; i < macro_points.size(); ++i) {
        double len_in = 0.0, len_out = 0.0;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const MicroRole role = roles.micro_side(faces[f].side);
            if (role == MicroRole::GammaN) continue;
            const FaceParam fp = face_parametrization(micro, faces[f]);
            const double scale = fp.tangent.norm();
            double len = 0.0;
            for (int q = 0; q < rule.n_face(); ++q)
                len += rule.face_weights[q] * cache.face(static_cast<int>(i), static_cast<int>(f), q).nu_len * scale;
            (role == MicroRole::GammaI ? len_in : len_out) += len;
        }
        Assumption6Report::Row row;
        row.gamma_in = len_in;
        row.gamma_out = len_out;
        const double lhs1 = 0.5 * std::abs(kappa1 - kappa2) * len_in;
        const double lhs2 = 0.5 * std::abs(kappa3 - kappa4) * len_out;
        row.ok1 = lhs1 < 1.0;
        row.ok2 = lhs2 < rep.min_dw;
        rep.lhs1_max = std::max(rep.lhs1_max, lhs1);
        rep.lhs2_max = std::max(rep.lhs2_max, lhs2);
        rep.ok1 = rep.ok1 && row.ok1;
        rep.ok2 = rep.ok2 && row.ok2;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace twoscale
