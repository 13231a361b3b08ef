#pragma once

#include <memory>
#include <vector>

#include "twoscale/grid.hpp"
#include "twoscale/linalg.hpp"
#include "twoscale/mapping.hpp"
#include "twoscale/problem.hpp"

namespace twoscale {

// One micro coefficient vector per macro node; row i is the micro solution
// attached to the support point of macro basis function i.
using MicroField = std::vector<std::vector<double>>;

// Precomputed discrete operators for one (data, grids) instance: mapping
// caches, compiled data tapes, micro matrices and right-hand-side parts, and
// the macro systems. Everything here is independent of the outer iterate and
// frozen after construction; assembly runs in parallel with deterministic
// scatter order, so results do not depend on the worker count.
class AssemblyContext {
public:
    AssemblyContext(const ProblemData& data, const Grid& macro, const Grid& micro, int workers);

    const Grid& macro_grid() const { return macro_; }
    const Grid& micro_grid() const { return micro_; }
    const QuadratureRule& rule() const { return rule_; }
    const ProblemData& data() const { return data_; }
    const CompiledDiffeo& diffeo() const { return diffeo_; }
    const MapCache& node_cache() const { return node_cache_; }
    const std::vector<Vec2>& macro_nodes() const { return macro_nodes_; }

    // --- spec-level operations -------------------------------------------

    // Full micro system at macro node i, coupled through the given macro
    // values; no Dirichlet constraints (the micro problem is pure Robin/Neumann).
    SparseSystem assemble_micro(int node, double u_i, double w_i) const;

    // Macro u-system: stiffness + kappa1 |Gamma^I_x| mass; rhs from sources,
    // flux corrections, and the surface-coupled micro field V. Dirichlet
    // constraints are attached but not yet eliminated.
    SparseSystem assemble_macro_u(const MicroField& V) const;

    // Macro w-system: D^w stiffness + kappa3 |Gamma^O_x| mass, pure Neumann.
    // A singular configuration (kappa3 == 0) carries a pinned dof instead.
    SparseSystem assemble_macro_w(const MicroField& V) const;

    // Integral of the nodal micro solution over the reference faces of the
    // given role, weighted by the physical length element of this node's map.
    double surface_coupling(const std::vector<double>& v_node, int node, MicroRole role) const;

    // --- solver-facing pieces (iterate-independent) -----------------------

    const CsrMatrix& micro_matrix(int node) const {
        return micro_A_[micro_A_.size() == 1 ? 0 : node];
    }
    // b = fixed + kappa1 u_i robin_in + kappa3 w_i robin_out
    void micro_rhs(int node, double u_i, double w_i, std::vector<double>& out) const;

    const CsrMatrix& macro_u_matrix() const { return A_u_; }
    const CsrMatrix& macro_w_matrix() const { return A_w_; }
    const CsrMatrix& macro_mass() const { return M0_; }
    const std::vector<std::pair<int, double>>& dirichlet_u() const { return dirichlet_u_; }
    const std::vector<std::pair<int, double>>& dirichlet_w() const { return dirichlet_w_; }
    bool w_pinned() const { return w_pinned_; }

    // Per-sweep macro right-hand sides for the current micro field.
    std::vector<double> macro_u_rhs(const MicroField& V) const;
    std::vector<double> macro_w_rhs(const MicroField& V) const;

private:
    ProblemData data_;
    const Grid& macro_;
    const Grid& micro_;
    QuadratureRule rule_;
    int workers_;

    CompiledDiffeo diffeo_;
    std::vector<Vec2> macro_nodes_, macro_qpoints_;
    MapCache node_cache_;    // cells + faces over macro nodes
    MapCache qpoint_cache_;  // faces over macro quadrature points

    CompiledExpr fv_hat_;  // fv composed with zeta: function of (x, yhat)
    CompiledExpr fu_, fw_, dw_, dirichlet_value_;
    std::array<CompiledExpr, 4> gv_, gu2_, gw_;
    bool has_gv_[4] = {false, false, false, false};
    bool has_gu2_[4] = {false, false, false, false};
    bool has_gw_[4] = {false, false, false, false};
    struct FluxTape {
        CompiledExpr c0, c1;
    };
    std::unique_ptr<FluxTape> fu_flux_, fw_flux_;

    std::vector<CsrMatrix> micro_A_;  // one entry when the Jacobian is x-independent
    struct MicroRhsParts {
        std::vector<double> fixed;
        std::vector<double> robin_in, robin_out;
    };
    std::vector<MicroRhsParts> micro_rhs_;

    CsrMatrix A_u_, A_w_, M0_;
    std::vector<double> b_u_fixed_, b_w_fixed_;
    std::vector<std::pair<int, double>> dirichlet_u_, dirichlet_w_;
    bool w_pinned_ = false;

    void build_micro_matrices();
    void build_micro_rhs_parts();
    void build_macro_systems();
    std::vector<double> coupling_vector(const MicroField& V, MicroRole role) const;
};

// 9-point-stencil sparsity pattern for a Q1 nodal field on the grid.
CsrMatrix make_q1_matrix(const Grid& grid);

}  // namespace twoscale
