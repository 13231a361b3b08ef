#pragma once

#include <cmath>
#include <vector>

#include "twoscale/problem.hpp"
#include "twoscale/solver.hpp"

namespace twoscale {

// A manufactured solution triple: u, w on the macro domain, v in physical
// micro coordinates (v(x, y) with y in Y_x). The base carries coefficients,
// map, roles and u0; its sources and corrections are ignored by derive_data.
struct ManufacturedCase {
    Expr u{0.0}, w{0.0};
    Expr v{0.0};
    ProblemData base;
    RectDomain macro_domain, micro_domain;
};

// Symbolically derives the complete problem data (sources, boundary data,
// Robin corrections, flux functionals) so that (u, v, w) solves the
// manufactured formulation exactly.
ProblemData derive_data(const ManufacturedCase& c);

// Plugs the manufactured triple into every equation of the manufactured
// formulation at random samples and returns the largest absolute residual.
// Boundary integrals use a refined composite rule independent of the
// assembly quadrature.
double residual_check(const ManufacturedCase& c, const ProblemData& derived,
                      int samples = 40, unsigned seed = 12345u);

struct ErrorNorms {
    double e_uw = 0.0;       // L2 errors of u and w, summed
    double e_uw_grad = 0.0;  // H1 errors of u and w, summed
    double e_v = 0.0;        // L2(Omega; L2(Y)) error with pullback measure J
    double e_v_grad = 0.0;   // H1(Omega; H1) error of the reference-domain representation
};

ErrorNorms error_norms(const TwoScaleState& state, const ManufacturedCase& c, const Grid& macro,
                       const Grid& micro, int workers);

// log(e1/e2) / log(sqrt(N2/N1)); NaN when undefined.
double observed_order(double e1, double n1, double e2, double n2);

struct ErrorReportRow {
    int n = 0;
    int macro_dofs = 0, micro_dofs = 0;
    double H = 0.0, h = 0.0;
    double e_uw = 0.0, e_uw_grad = 0.0, e_v = 0.0, e_v_grad = 0.0;
    double p_macro = NAN, q_macro = NAN;
    double p_micro = NAN, q_micro = NAN;
};
using ErrorReport = std::vector<ErrorReportRow>;

// Solves the manufactured system on n x n macro and micro grids for each n,
// in order, and fills the error table with observed orders between
// consecutive rows.
ErrorReport convergence_sweep(const ManufacturedCase& c, const std::vector<int>& ns,
                              const SolveOptions& opts);

}  // namespace twoscale
