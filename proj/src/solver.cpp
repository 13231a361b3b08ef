#include "twoscale/solver.hpp"

#include <cmath>
#include <string>

#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

// Keeps the eliminated matrix plus the column-shift vector so the rhs of the
// constrained system can be rebuilt every sweep without reassembling.
struct EliminatedOperator {
    CsrMatrix A;
    std::vector<double> shift;  // A_orig * extended constraint values
    std::vector<std::pair<int, double>> constraints;

    EliminatedOperator(const CsrMatrix& orig, std::vector<std::pair<int, double>> cons)
        : A(orig), constraints(std::move(cons)) {
        std::vector<double> g_ext(orig.size(), 0.0);
        for (const auto& [dof, g] : constraints) g_ext[dof] = g;
        orig.apply(g_ext, shift);
        std::vector<double> dummy(orig.size(), 0.0);
        A.eliminate(constraints, dummy);
    }

    std::vector<double> constrain_rhs(const std::vector<double>& b) const {
        std::vector<double> out = b;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= shift[i];
        for (const auto& [dof, g] : constraints) out[dof] = g;
        return out;
    }

    double residual_norm(const std::vector<double>& raw_rhs, const std::vector<double>& x) const {
        const std::vector<double> b = constrain_rhs(raw_rhs);
        std::vector<double> Ax;
        A.apply(x, Ax);
        double s = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double r = b[i] - Ax[i];
            s += r * r;
        }
        return std::sqrt(s);
    }
};

void solve_or_throw(const CsrMatrix& A, const std::vector<double>& b, std::vector<double>& x,
                    const SolveOptions& opts, const char* label) {
    const CgResult r = cg_solve(A, b, x, opts.inner_tol, opts.inner_maxit);
    if (r.indefinite)
        throw SolverError(std::string(label) + ": CG detected negative curvature (matrix not SPD)");
    if (!r.converged)
        throw SolverError(std::string(label) + ": CG failed to converge, relative residual " +
                          std::to_string(r.residual) + " after " + std::to_string(r.iterations) +
                          " iterations");
}

}  // namespace

SolveResult fixed_point_solve(const AssemblyContext& ctx, const SolveOptions& opts) {
    const int n_macro = ctx.macro_grid().node_count();
    const int n_micro = ctx.micro_grid().node_count();

    SolveResult result;
    TwoScaleState& state = result.state;
    state.u.assign(n_macro, 0.0);
    state.w.assign(n_macro, 0.0);
    state.V.assign(n_macro, std::vector<double>(n_micro, 0.0));
    result.report.w_pinned = ctx.w_pinned();

    EliminatedOperator op_u(ctx.macro_u_matrix(), ctx.dirichlet_u());
    EliminatedOperator op_w(ctx.macro_w_matrix(), ctx.dirichlet_w());

    double prev_residual = 0.0;
    for (int sweep = 1; sweep <= opts.max_outer; ++sweep) {
        // Macro solves against the previous micro field.
        const std::vector<double> raw_u = ctx.macro_u_rhs(state.V);
        solve_or_throw(op_u.A, op_u.constrain_rhs(raw_u), state.u, opts, "macro u-system");

        const std::vector<double> raw_w = ctx.macro_w_rhs(state.V);
        solve_or_throw(op_w.A, op_w.constrain_rhs(raw_w), state.w, opts, "macro w-system");

        // Micro solves against the fresh macro values, one system per worker.
        parallel_for(opts.workers, n_macro, [&](std::int64_t i) {
            std::vector<double> b;
            ctx.micro_rhs(static_cast<int>(i), state.u[i], state.w[i], b);
            const CgResult r =
                cg_solve(ctx.micro_matrix(static_cast<int>(i)), b, state.V[i], opts.inner_tol,
                         opts.inner_maxit);
            if (r.indefinite)
                throw SolverError("micro system " + std::to_string(i) +
                                  ": CG detected negative curvature");
            if (!r.converged)
                throw SolverError("micro system " + std::to_string(i) +
                                  ": CG failed to converge, relative residual " +
                                  std::to_string(r.residual));
        });

        // Residuals against the freshest cross-scale data.
        const double res_u = op_u.residual_norm(ctx.macro_u_rhs(state.V), state.u);
        const double res_w = op_w.residual_norm(ctx.macro_w_rhs(state.V), state.w);
        std::vector<double> res_v(n_macro, 0.0);
        parallel_for(opts.workers, n_macro, [&](std::int64_t i) {
            std::vector<double> b, Av;
            ctx.micro_rhs(static_cast<int>(i), state.u[i], state.w[i], b);
            ctx.micro_matrix(static_cast<int>(i)).apply(state.V[i], Av);
            double s = 0.0;
            for (int k = 0; k < n_micro; ++k) {
                const double r = b[k] - Av[k];
                s += r * r;
            }
            res_v[i] = std::sqrt(s);
        });
        double res_v_avg = 0.0;
        for (double r : res_v) res_v_avg += r;
        res_v_avg /= n_macro;

        const double residual = res_u + res_w + res_v_avg;
        state.residual_history.push_back(residual);
        result.report.sweeps = sweep;
        result.report.final_residual = residual;

        if (residual < opts.outer_tol ||
            (sweep >= 2 && std::abs(residual - prev_residual) < opts.outer_tol)) {
            result.report.converged = true;
            break;
        }
        prev_residual = residual;
    }
    return result;
}

SolveResult fixed_point_solve(const ProblemData& data, const Grid& macro, const Grid& micro,
                              const SolveOptions& opts) {
    AssemblyContext ctx(data, macro, micro, opts.workers);
    return fixed_point_solve(ctx, opts);
}

}  // namespace twoscale
