#include "twoscale/mms.hpp"

#include <cmath>
#include <random>

#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

struct SideAxis {
    Var var;
    double sign;
};

// Outward normal direction of each macro side of an axis-aligned rectangle.
SideAxis side_axis(Side s) {
    switch (s) {
        case Side::Left: return {Var::x0, -1.0};
        case Side::Right: return {Var::x0, 1.0};
        case Side::Bottom: return {Var::x1, -1.0};
        case Side::Top: return {Var::x1, 1.0};
    }
    return {Var::x0, 0.0};
}

}  // namespace

ProblemData derive_data(const ManufacturedCase& c) {
    ProblemData d = c.base;
    const Expr& u = c.u;
    const Expr& w = c.w;
    const Expr& v = c.v;
    const Expr Dv(d.Dv);

    d.gu1 = (u - d.u0).simplified();
    for (int s = 0; s < 4; ++s) {
        const SideAxis ax = side_axis(static_cast<Side>(s));
        d.gu2[s] = (Expr(ax.sign) * u.diff(ax.var)).simplified();
        d.gw[s] = (Expr(ax.sign) * (d.Dw * w.diff(ax.var))).simplified();
    }

    d.fu = (Expr(0.0) - (u.diff(Var::x0).diff(Var::x0) + u.diff(Var::x1).diff(Var::x1)))
               .simplified();
    d.fw = (Expr(0.0) - ((d.Dw * w.diff(Var::x0)).diff(Var::x0) +
                         (d.Dw * w.diff(Var::x1)).diff(Var::x1)))
               .simplified();
    d.fv = (Expr(0.0) - Dv * (v.diff(Var::y0).diff(Var::y0) + v.diff(Var::y1).diff(Var::y1)))
               .simplified();

    // Pull the physical-coordinate micro quantities back to the reference cell.
    const std::array<std::optional<Expr>, 4> pullback{std::nullopt, std::nullopt,
                                                      d.diffeo.zeta.c0, d.diffeo.zeta.c1};
    const Expr v_hat = v.subst(pullback).simplified();
    const Expr dv0 = v.diff(Var::y0).subst(pullback).simplified();
    const Expr dv1 = v.diff(Var::y1).subst(pullback).simplified();
    d.fu_flux = VecExpr{(Dv * dv0).simplified(), (Dv * dv1).simplified()};
    d.fw_flux = d.fu_flux;

    // Per micro side: the covector nu = cof(grad_y zeta) nhat gives the
    // physical unit normal nu/|nu| for the Robin data.
    const auto& dz = d.diffeo.dzeta;
    for (int s = 0; s < 4; ++s) {
        const Vec2 nhat = side_normal(static_cast<Side>(s));
        const Expr nu0 = (dz[1][1] * Expr(nhat.x) - dz[1][0] * Expr(nhat.y)).simplified();
        const Expr nu1 = (dz[0][0] * Expr(nhat.y) - dz[0][1] * Expr(nhat.x)).simplified();
        const Expr len = sqrt(nu0 * nu0 + nu1 * nu1);
        const Expr flux = (Dv * (dv0 * nu0 + dv1 * nu1) / len).simplified();
        switch (d.roles.micro_side(static_cast<Side>(s))) {
            case MicroRole::GammaI:
                d.gv[s] = (flux - Expr(d.kappa1) * u + Expr(d.kappa2) * v_hat).simplified();
                break;
            case MicroRole::GammaO:
                d.gv[s] = (flux - Expr(d.kappa3) * w + Expr(d.kappa4) * v_hat).simplified();
                break;
            case MicroRole::GammaN:
                d.gv[s] = flux;
                break;
        }
    }
    return d;
}

namespace {

// Composite Gauss rule along one side of the reference cell, refined well
// beyond the assembly rule so the check stays an independent oracle.
struct SideQuadrature {
    std::vector<double> t, w;
    SideQuadrature() {
        const QuadratureRule g = QuadratureRule::gauss(3);
        const int panels = 16;
        for (int p = 0; p < panels; ++p) {
            const double mid = -1.0 + (2.0 * p + 1.0) / panels;
            for (int q = 0; q < g.n_face(); ++q) {
                t.push_back(mid + g.face_points[q] / panels);
                w.push_back(g.face_weights[q] / panels);
            }
        }
    }
};

Vec2 side_point(Side s, double t) {
    switch (s) {
        case Side::Left: return {-1.0, t};
        case Side::Right: return {1.0, t};
        case Side::Bottom: return {t, -1.0};
        case Side::Top: return {t, 1.0};
    }
    return {0.0, 0.0};
}

}  // namespace

double residual_check(const ManufacturedCase& c, const ProblemData& d, int samples,
                      unsigned seed) {
    const ParamMap& pm = d.params;
    const CompiledDiffeo dmap(d.diffeo, pm);
    const std::array<std::optional<Expr>, 4> pullback{std::nullopt, std::nullopt,
                                                      d.diffeo.zeta.c0, d.diffeo.zeta.c1};

    const CompiledExpr u(c.u, pm), w(c.w, pm);
    const CompiledExpr ux(c.u.diff(Var::x0), pm), uy(c.u.diff(Var::x1), pm);
    const CompiledExpr wx(c.w.diff(Var::x0), pm), wy(c.w.diff(Var::x1), pm);
    const CompiledExpr lap_u(
        (c.u.diff(Var::x0).diff(Var::x0) + c.u.diff(Var::x1).diff(Var::x1)).simplified(), pm);
    const CompiledExpr div_dw_grad_w(((d.Dw * c.w.diff(Var::x0)).diff(Var::x0) +
                                      (d.Dw * c.w.diff(Var::x1)).diff(Var::x1))
                                         .simplified(),
                                     pm);
    const CompiledExpr dw(d.Dw, pm);
    const CompiledExpr fv(d.fv, pm);  // evaluated at physical y
    const CompiledExpr lap_v(
        (c.v.diff(Var::y0).diff(Var::y0) + c.v.diff(Var::y1).diff(Var::y1)).simplified(), pm);
    const CompiledExpr v_hat(c.v.subst(pullback).simplified(), pm);
    const CompiledExpr dv0(c.v.diff(Var::y0).subst(pullback).simplified(), pm);
    const CompiledExpr dv1(c.v.diff(Var::y1).subst(pullback).simplified(), pm);
    const CompiledExpr fu(d.fu, pm), fw(d.fw, pm);
    const CompiledExpr dirichlet((d.u0 + d.gu1).simplified(), pm);
    std::array<CompiledExpr, 4> gv, gu2, gw;
    for (int s = 0; s < 4; ++s) {
        gv[s] = CompiledExpr(d.gv[s], pm);
        gu2[s] = CompiledExpr(d.gu2[s], pm);
        gw[s] = CompiledExpr(d.gw[s], pm);
    }
    CompiledExpr flux0, flux1;
    if (d.fu_flux) {
        flux0 = CompiledExpr(d.fu_flux->c0, pm);
        flux1 = CompiledExpr(d.fu_flux->c1, pm);
    }

    const SideQuadrature sq;
    const RectDomain& om = c.macro_domain;
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux0(om.lo.x, om.hi.x), ux1(om.lo.y, om.hi.y);
    std::uniform_real_distribution<double> uref(-1.0, 1.0);

    // Gamma integrals of the macro equations at a fixed macro point, via the
    // refined rule; `correction` distinguishes u (Gamma^I) from w (Gamma^O).
    auto gamma_integral = [&](Vec2 x, MicroRole role, bool for_u) {
        double total = 0.0, flux = 0.0;
        for (int s = 0; s < 4; ++s) {
            if (d.roles.micro_side(static_cast<Side>(s)) != role) continue;
            const Vec2 nhat = side_normal(static_cast<Side>(s));
            for (std::size_t q = 0; q < sq.t.size(); ++q) {
                const Vec2 yq = side_point(static_cast<Side>(s), sq.t[q]);
                const Vec2 nu = dmap.nanson(x, yq, nhat);
                const double len = nu.norm();
                const double vh = v_hat(x.x, x.y, yq.x, yq.y);
                const double g = gv[s](x.x, x.y, yq.x, yq.y);
                const double base =
                    for_u ? d.kappa1 * u(x.x, x.y) - d.kappa2 * vh + g
                          : d.kappa3 * w(x.x, x.y) - d.kappa4 * vh + g;
                total += sq.w[q] * base * len;
                if (d.fu_flux)
                    flux += sq.w[q] * (flux0(x.x, x.y, yq.x, yq.y) * nu.x +
                                       flux1(x.x, x.y, yq.x, yq.y) * nu.y);
            }
        }
        return std::pair<double, double>{total, flux};
    };

    double max_res = 0.0;
    auto track = [&](double r) { max_res = std::max(max_res, std::abs(r)); };

    for (int k = 0; k < samples; ++k) {
        const Vec2 x{ux0(rng), ux1(rng)};
        // Macro u equation: -lap u + int_{Gamma^I}(k1 u - k2 v + g) = fu + flux part.
        {
            const auto [gi, flux] = gamma_integral(x, MicroRole::GammaI, true);
            track(-lap_u(x.x, x.y) + gi - fu(x.x, x.y) - flux);
        }
        // Macro w equation.
        {
            const auto [go, flux] = gamma_integral(x, MicroRole::GammaO, false);
            track(-div_dw_grad_w(x.x, x.y) + go - fw(x.x, x.y) - flux);
        }
        // Micro interior at a random reference point, mapped to physical coords.
        {
            const Vec2 yhat{uref(rng), uref(rng)};
            const Vec2 y = dmap.map(x, yhat);
            track(-d.Dv * lap_v(x.x, x.y, y.x, y.y) - fv(x.x, x.y, y.x, y.y));
        }
        // Micro Robin/Neumann conditions per side.
        for (int s = 0; s < 4; ++s) {
            const Side side = static_cast<Side>(s);
            const Vec2 yq = side_point(side, uref(rng));
            const Vec2 nu = dmap.nanson(x, yq, side_normal(side));
            const double len = nu.norm();
            const double lhs = d.Dv * (dv0(x.x, x.y, yq.x, yq.y) * nu.x +
                                       dv1(x.x, x.y, yq.x, yq.y) * nu.y) /
                               len;
            const double vh = v_hat(x.x, x.y, yq.x, yq.y);
            const double g = gv[s](x.x, x.y, yq.x, yq.y);
            double rhs = g;
            if (d.roles.micro_side(side) == MicroRole::GammaI)
                rhs += d.kappa1 * u(x.x, x.y) - d.kappa2 * vh;
            else if (d.roles.micro_side(side) == MicroRole::GammaO)
                rhs += d.kappa3 * w(x.x, x.y) - d.kappa4 * vh;
            track(lhs - rhs);
        }
        // Macro boundary data.
        for (int s = 0; s < 4; ++s) {
            const Side side = static_cast<Side>(s);
            Vec2 xb;
            const double t = uref(rng);
            switch (side) {
                case Side::Left: xb = {om.lo.x, om.lo.y + (t + 1.0) * 0.5 * (om.hi.y - om.lo.y)}; break;
                case Side::Right: xb = {om.hi.x, om.lo.y + (t + 1.0) * 0.5 * (om.hi.y - om.lo.y)}; break;
                case Side::Bottom: xb = {om.lo.x + (t + 1.0) * 0.5 * (om.hi.x - om.lo.x), om.lo.y}; break;
                case Side::Top: xb = {om.lo.x + (t + 1.0) * 0.5 * (om.hi.x - om.lo.x), om.hi.y}; break;
            }
            const Vec2 n = side_normal(side);
            if (d.roles.macro_side(side) == MacroBC::Dirichlet) {
                track(u(xb.x, xb.y) - dirichlet(xb.x, xb.y));
            } else {
                track(ux(xb.x, xb.y) * n.x + uy(xb.x, xb.y) * n.y - gu2[s](xb.x, xb.y));
            }
            track(dw(xb.x, xb.y) * (wx(xb.x, xb.y) * n.x + wy(xb.x, xb.y) * n.y) -
                  gw[s](xb.x, xb.y));
        }
    }
    return max_res;
}

ErrorNorms error_norms(const TwoScaleState& state, const ManufacturedCase& c, const Grid& macro,
                       const Grid& micro, int workers) {
    const QuadratureRule rule = QuadratureRule::gauss(3);
    const ParamMap& pm = c.base.params;

    const CompiledExpr u(c.u, pm), w(c.w, pm);
    const CompiledExpr ux(c.u.diff(Var::x0).simplified(), pm), uy(c.u.diff(Var::x1).simplified(), pm);
    const CompiledExpr wx(c.w.diff(Var::x0).simplified(), pm), wy(c.w.diff(Var::x1).simplified(), pm);

    const std::array<std::optional<Expr>, 4> pullback{std::nullopt, std::nullopt,
                                                      c.base.diffeo.zeta.c0,
                                                      c.base.diffeo.zeta.c1};
    const Expr v_hat_e = c.v.subst(pullback).simplified();
    const CompiledExpr v_hat(v_hat_e, pm);
    const CompiledExpr vx0(v_hat_e.diff(Var::x0).simplified(), pm);
    const CompiledExpr vx1(v_hat_e.diff(Var::x1).simplified(), pm);
    const CompiledExpr vy0(v_hat_e.diff(Var::y0).simplified(), pm);
    const CompiledExpr vy1(v_hat_e.diff(Var::y1).simplified(), pm);
    const auto& dz = c.base.diffeo.dzeta;
    const CompiledExpr jdet((dz[0][0] * dz[1][1] - dz[0][1] * dz[1][0]).simplified(), pm);

    const int nq = rule.n_cell();
    std::vector<std::array<double, 4>> shapeN(nq);
    std::vector<std::array<Vec2, 4>> shapeG(nq);
    for (int q = 0; q < nq; ++q) {
        shapeN[q] = shape_eval(rule.cell_points[q].x, rule.cell_points[q].y);
        shapeG[q] = shape_grad(rule.cell_points[q].x, rule.cell_points[q].y);
    }

    const double detM = 0.25 * macro.h0() * macro.h1();
    const double detm = 0.25 * micro.h0() * micro.h1();
    const double Mgx = 2.0 / macro.h0(), Mgy = 2.0 / macro.h1();
    const double mgx = 2.0 / micro.h0(), mgy = 2.0 / micro.h1();
    const int n_micro = micro.node_count();

    // Per-cell partial sums, reduced serially afterwards for determinism.
    struct Partial {
        double eu2 = 0, egu2 = 0, ew2 = 0, egw2 = 0, ev2 = 0, evg2 = 0;
    };
    std::vector<Partial> partials(macro.cell_count());

    parallel_for(workers, macro.cell_count(), [&](std::int64_t ci) {
        const int cM = static_cast<int>(ci);
        Partial& p = partials[cM];
        const auto nodesM = macro.cell_nodes(cM);
        std::vector<double> vc(n_micro), vgx(n_micro), vgy(n_micro);
        for (int qM = 0; qM < nq; ++qM) {
            const Vec2 x = macro.cell_point(cM, rule.cell_points[qM].x, rule.cell_points[qM].y);
            const double wM = rule.cell_weights[qM] * detM;

            // Macro errors.
            double uh = 0, wh = 0;
            Vec2 guh{0, 0}, gwh{0, 0};
            for (int a = 0; a < 4; ++a) {
                const double cu = state.u[nodesM[a]], cw = state.w[nodesM[a]];
                uh += shapeN[qM][a] * cu;
                wh += shapeN[qM][a] * cw;
                guh.x += shapeG[qM][a].x * Mgx * cu;
                guh.y += shapeG[qM][a].y * Mgy * cu;
                gwh.x += shapeG[qM][a].x * Mgx * cw;
                gwh.y += shapeG[qM][a].y * Mgy * cw;
            }
            const double du = u(x.x, x.y) - uh;
            const double dw_ = w(x.x, x.y) - wh;
            const double dux = ux(x.x, x.y) - guh.x, duy = uy(x.x, x.y) - guh.y;
            const double dwx = wx(x.x, x.y) - gwh.x, dwy = wy(x.x, x.y) - gwh.y;
            p.eu2 += wM * du * du;
            p.ew2 += wM * dw_ * dw_;
            p.egu2 += wM * (dux * dux + duy * duy);
            p.egw2 += wM * (dwx * dwx + dwy * dwy);

            // Micro field combined through the macro basis at this point.
            std::fill(vc.begin(), vc.end(), 0.0);
            std::fill(vgx.begin(), vgx.end(), 0.0);
            std::fill(vgy.begin(), vgy.end(), 0.0);
            for (int a = 0; a < 4; ++a) {
                const std::vector<double>& Vi = state.V[nodesM[a]];
                const double Na = shapeN[qM][a];
                const double Gax = shapeG[qM][a].x * Mgx, Gay = shapeG[qM][a].y * Mgy;
                for (int j = 0; j < n_micro; ++j) {
                    vc[j] += Na * Vi[j];
                    vgx[j] += Gax * Vi[j];
                    vgy[j] += Gay * Vi[j];
                }
            }

            for (int cm = 0; cm < micro.cell_count(); ++cm) {
                const auto nodesm = micro.cell_nodes(cm);
                for (int qm = 0; qm < nq; ++qm) {
                    const Vec2 yhat =
                        micro.cell_point(cm, rule.cell_points[qm].x, rule.cell_points[qm].y);
                    const double wq = wM * rule.cell_weights[qm] * detm;
                    double vh = 0, vhx = 0, vhy = 0, vhy0 = 0, vhy1 = 0;
                    for (int b = 0; b < 4; ++b) {
                        const int j = nodesm[b];
                        vh += shapeN[qm][b] * vc[j];
                        vhx += shapeN[qm][b] * vgx[j];
                        vhy += shapeN[qm][b] * vgy[j];
                        vhy0 += shapeG[qm][b].x * mgx * vc[j];
                        vhy1 += shapeG[qm][b].y * mgy * vc[j];
                    }
                    const double J = jdet(x.x, x.y, yhat.x, yhat.y);
                    const double D = v_hat(x.x, x.y, yhat.x, yhat.y) - vh;
                    const double Dx0 = vx0(x.x, x.y, yhat.x, yhat.y) - vhx;
                    const double Dx1 = vx1(x.x, x.y, yhat.x, yhat.y) - vhy;
                    const double Dy0 = vy0(x.x, x.y, yhat.x, yhat.y) - vhy0;
                    const double Dy1 = vy1(x.x, x.y, yhat.x, yhat.y) - vhy1;
                    p.ev2 += wq * D * D * J;
                    p.evg2 +=
                        wq * (D * D + Dx0 * Dx0 + Dx1 * Dx1 + Dy0 * Dy0 + Dy1 * Dy1) * J;
                }
            }
        }
    });

    Partial total;
    for (const Partial& p : partials) {
        total.eu2 += p.eu2;
        total.egu2 += p.egu2;
        total.ew2 += p.ew2;
        total.egw2 += p.egw2;
        total.ev2 += p.ev2;
        total.evg2 += p.evg2;
    }
    ErrorNorms e;
    e.e_uw = std::sqrt(total.eu2) + std::sqrt(total.ew2);
    e.e_uw_grad = std::sqrt(total.eu2 + total.egu2) + std::sqrt(total.ew2 + total.egw2);
    e.e_v = std::sqrt(total.ev2);
    e.e_v_grad = std::sqrt(total.evg2);
    return e;
}

double observed_order(double e1, double n1, double e2, double n2) {
    if (!(e1 > 0.0) || !(e2 > 0.0) || !(n1 > 0.0) || !(n2 > 0.0) || n1 == n2) return NAN;
    return std::log(e1 / e2) / std::log(std::sqrt(n2 / n1));
}

ErrorReport convergence_sweep(const ManufacturedCase& c, const std::vector<int>& ns,
                              const SolveOptions& opts) {
    const ProblemData derived = derive_data(c);
    ErrorReport report;
    for (int n : ns) {
        const Grid macro(c.macro_domain, n, n);
        const Grid micro(c.micro_domain, n, n);
        const SolveResult res = fixed_point_solve(derived, macro, micro, opts);
        if (!res.report.converged)
            throw SolverError("outer iteration did not converge at n = " + std::to_string(n) +
                              ", last residual " + std::to_string(res.report.final_residual));
        const ErrorNorms e = error_norms(res.state, c, macro, micro, opts.workers);
        ErrorReportRow row;
        row.n = n;
        row.macro_dofs = macro.node_count();
        row.micro_dofs = micro.node_count();
        row.H = (c.macro_domain.hi.x - c.macro_domain.lo.x) / n;
        row.h = (c.micro_domain.hi.x - c.micro_domain.lo.x) / n;
        row.e_uw = e.e_uw;
        row.e_uw_grad = e.e_uw_grad;
        row.e_v = e.e_v;
        row.e_v_grad = e.e_v_grad;
        if (!report.empty()) {
            const ErrorReportRow& prev = report.back();
            row.p_macro = observed_order(prev.e_uw, prev.macro_dofs, row.e_uw, row.macro_dofs);
            row.q_macro =
                observed_order(prev.e_uw_grad, prev.macro_dofs, row.e_uw_grad, row.macro_dofs);
            row.p_micro = observed_order(prev.e_v, prev.micro_dofs, row.e_v, row.micro_dofs);
            row.q_micro =
                observed_order(prev.e_v_grad, prev.micro_dofs, row.e_v_grad, row.micro_dofs);
        }
        report.push_back(row);
    }
    return report;
}

}  // namespace twoscale
