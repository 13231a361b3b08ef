#pragma once

#include <array>
#include <optional>

#include "twoscale/expr.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/mapping.hpp"

namespace twoscale {

// Coefficients, sources, boundary data and (optional) manufactured-solution
// corrections for the coupled system. Expressions in x live on the macro
// domain; fv is a function of (x, y_physical); the gv corrections are
// functions of (x, yhat) on the reference cell.
struct ProblemData {
    double kappa1 = 1.0, kappa2 = 1.0, kappa3 = 1.0, kappa4 = 1.0;
    double Dv = 1.0;
    Expr Dw{1.0};

    Expr fu{0.0};
    Expr fv{0.0};
    Expr fw{0.0};
    Expr u0{0.0};

    // Manufactured-solution corrections; all default to zero.
    Expr gu1{0.0};                // added to u0 on the Dirichlet boundary
    std::array<Expr, 4> gu2{};    // Neumann data for u, per macro side
    std::array<Expr, 4> gw{};     // Neumann data for w, per macro side
    std::array<Expr, 4> gv{};     // Robin/Neumann correction, per micro side
    // Boundary flux integrand D^v (grad_y v)∘zeta of the manufactured source:
    // integrated against the covector nu over Gamma^I (u) / Gamma^O (w).
    std::optional<VecExpr> fu_flux;
    std::optional<VecExpr> fw_flux;

    Diffeo diffeo = Diffeo::identity();
    BoundaryRoles roles;
    MapBounds bounds;
    ParamMap params;  // numeric bindings for named parameters in the expressions
};

}  // namespace twoscale
