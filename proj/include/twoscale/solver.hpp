#pragma once

#include <vector>

#include "twoscale/assembly.hpp"

namespace twoscale {

struct SolveOptions {
    double inner_tol = 1e-10;  // CG relative residual
    int inner_maxit = 20000;
    double outer_tol = 1e-8;
    int max_outer = 100;
    int workers = 1;
};

struct TwoScaleState {
    std::vector<double> u, w;
    MicroField V;  // V[i] = micro coefficients at macro node i
    std::vector<double> residual_history;
};

struct SolveReport {
    bool converged = false;
    int sweeps = 0;
    bool w_pinned = false;
    double final_residual = 0.0;
};

struct SolveResult {
    TwoScaleState state;
    SolveReport report;
};

// Alternating macro/micro sweeps: solve u, solve w, then every micro system
// with the fresh macro values; after each sweep the residual
// r_k = ||res_u|| + ||res_w|| + avg_i ||res_{v,i}|| is evaluated against the
// freshest cross-scale data. Stops when r_k < tol or the difference of
// subsequent residuals falls below tol. Throws SolverError on inner CG
// failure; outer non-convergence is reported, not thrown.
SolveResult fixed_point_solve(const AssemblyContext& ctx, const SolveOptions& opts);
SolveResult fixed_point_solve(const ProblemData& data, const Grid& macro, const Grid& micro,
                              const SolveOptions& opts);

}  // namespace twoscale
