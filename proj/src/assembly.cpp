#include "twoscale/assembly.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

bool is_zero(const Expr& e) {
    double c;
    return e.is_constant(&c) && c == 0.0;
}

struct ShapeTable {
    std::vector<std::array<double, 4>> N;    // per cell quadrature point
    std::vector<std::array<Vec2, 4>> dN;     // reference gradients
    std::vector<std::array<double, 2>> Nf;   // per face quadrature point

    explicit ShapeTable(const QuadratureRule& rule) {
        for (const Vec2& p : rule.cell_points) {
            N.push_back(shape_eval(p.x, p.y));
            dN.push_back(shape_grad(p.x, p.y));
        }
        for (double t : rule.face_points) Nf.push_back(face_shape(t));
    }
};

}  // namespace

CsrMatrix make_q1_matrix(const Grid& grid) {
    const int n0 = grid.n0(), n1 = grid.n1();
    std::vector<std::vector<int>> pattern(grid.node_count());
    for (int j = 0; j <= n1; ++j) {
        for (int i = 0; i <= n0; ++i) {
            auto& row = pattern[grid.node_index(i, j)];
            for (int dj = -1; dj <= 1; ++dj) {
                if (j + dj < 0 || j + dj > n1) continue;
                for (int di = -1; di <= 1; ++di) {
                    if (i + di < 0 || i + di > n0) continue;
                    row.push_back(grid.node_index(i + di, j + dj));
                }
            }
        }
    }
    return CsrMatrix(grid.node_count(), pattern);
}

AssemblyContext::AssemblyContext(const ProblemData& data, const Grid& macro, const Grid& micro,
                                 int workers)
    : data_(data),
      macro_(macro),
      micro_(micro),
      rule_(QuadratureRule::gauss(2)),
      workers_(workers),
      diffeo_(data_.diffeo, data_.params) {
    macro_nodes_.resize(macro_.node_count());
    for (int i = 0; i < macro_.node_count(); ++i) macro_nodes_[i] = macro_.node(i);
    macro_qpoints_.resize(std::size_t(macro_.cell_count()) * rule_.n_cell());
    for (int c = 0; c < macro_.cell_count(); ++c)
        for (int q = 0; q < rule_.n_cell(); ++q)
            macro_qpoints_[std::size_t(c) * rule_.n_cell() + q] =
                macro_.cell_point(c, rule_.cell_points[q].x, rule_.cell_points[q].y);

    node_cache_ = build_cache(diffeo_, macro_nodes_, micro_, rule_, workers_, true);
    qpoint_cache_ = build_cache(diffeo_, macro_qpoints_, micro_, rule_, workers_, false);

    // Compose fv with zeta so the tape takes (x, yhat).
    const std::array<std::optional<Expr>, 4> pullback{
        std::nullopt, std::nullopt, data_.diffeo.zeta.c0, data_.diffeo.zeta.c1};
    fv_hat_ = CompiledExpr(data_.fv.subst(pullback).simplified(), data_.params);
    fu_ = CompiledExpr(data_.fu, data_.params);
    fw_ = CompiledExpr(data_.fw, data_.params);
    dw_ = CompiledExpr(data_.Dw, data_.params);
    dirichlet_value_ = CompiledExpr((data_.u0 + data_.gu1).simplified(), data_.params);
    for (int s = 0; s < 4; ++s) {
        has_gv_[s] = !is_zero(data_.gv[s]);
        has_gu2_[s] = !is_zero(data_.gu2[s]);
        has_gw_[s] = !is_zero(data_.gw[s]);
        if (has_gv_[s]) gv_[s] = CompiledExpr(data_.gv[s], data_.params);
        if (has_gu2_[s]) gu2_[s] = CompiledExpr(data_.gu2[s], data_.params);
        if (has_gw_[s]) gw_[s] = CompiledExpr(data_.gw[s], data_.params);
    }
    if (data_.fu_flux)
        fu_flux_ = std::make_unique<FluxTape>(FluxTape{
            CompiledExpr(data_.fu_flux->c0, data_.params),
            CompiledExpr(data_.fu_flux->c1, data_.params)});
    if (data_.fw_flux)
        fw_flux_ = std::make_unique<FluxTape>(FluxTape{
            CompiledExpr(data_.fw_flux->c0, data_.params),
            CompiledExpr(data_.fw_flux->c1, data_.params)});

    build_micro_matrices();
    build_micro_rhs_parts();
    build_macro_systems();
}

void AssemblyContext::build_micro_matrices() {
    const int systems = diffeo_.jacobian_depends_on_x() ? macro_.node_count() : 1;
    const CsrMatrix pattern = make_q1_matrix(micro_);
    micro_A_.assign(systems, pattern);

    const ShapeTable shapes(rule_);
    const int cells = micro_.cell_count();
    const double det_elem = 0.25 * micro_.h0() * micro_.h1();
    const double gx = 2.0 / micro_.h0(), gy = 2.0 / micro_.h1();
    const auto& faces = micro_.boundary_faces();

    const int chunk = 512;
    const int chunks_per_sys = (cells + chunk - 1) / chunk;
    std::vector<std::mutex> locks(systems);

    parallel_for(workers_, std::int64_t(systems) * chunks_per_sys, [&](std::int64_t task) {
        const int sys = static_cast<int>(task / chunks_per_sys);
        const int ck = static_cast<int>(task % chunks_per_sys);
        const int c_begin = ck * chunk;
        const int c_end = std::min(cells, c_begin + chunk);

        struct Entry {
            int r, c;
            double v;
        };
        std::vector<Entry> scratch;
        scratch.reserve((c_end - c_begin) * 16 + (ck == 0 ? faces.size() * 4 : 0));

        for (int c = c_begin; c < c_end; ++c) {
            const auto nodes = micro_.cell_nodes(c);
            double local[4][4] = {};
            for (int q = 0; q < rule_.n_cell(); ++q) {
                const auto& e = node_cache_.cell(sys, c, q);
                const double wq = rule_.cell_weights[q] * det_elem * data_.Dv;
                Vec2 g[4];
                for (int a = 0; a < 4; ++a)
                    g[a] = {shapes.dN[q][a].x * gx, shapes.dN[q][a].y * gy};
                for (int a = 0; a < 4; ++a) {
                    const Vec2 Ag{e.A00 * g[a].x + e.A01 * g[a].y,
                                  e.A01 * g[a].x + e.A11 * g[a].y};
                    for (int b = 0; b < 4; ++b)
                        local[a][b] += wq * (Ag.x * g[b].x + Ag.y * g[b].y);
                }
            }
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) scratch.push_back({nodes[a], nodes[b], local[a][b]});
        }

        if (ck == 0) {
            for (std::size_t f = 0; f < faces.size(); ++f) {
                const MicroRole role = data_.roles.micro_side(faces[f].side);
                if (role == MicroRole::GammaN) continue;
                const double kappa = role == MicroRole::GammaI ? data_.kappa2 : data_.kappa4;
                if (kappa == 0.0) continue;
                const FaceParam fp = face_parametrization(micro_, faces[f]);
                const double scale = fp.tangent.norm();
                double local[2][2] = {};
                for (int q = 0; q < rule_.n_face(); ++q) {
                    const auto& e = node_cache_.face(sys, static_cast<int>(f), q);
                    const double wq = rule_.face_weights[q] * kappa * e.nu_len * scale;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            local[a][b] += wq * shapes.Nf[q][a] * shapes.Nf[q][b];
                }
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        scratch.push_back({faces[f].nodes[a], faces[f].nodes[b], local[a][b]});
            }
        }

        std::lock_guard<std::mutex> lock(locks[sys]);
        for (const Entry& e : scratch) micro_A_[sys].add(e.r, e.c, e.v);
    });
}

void AssemblyContext::build_micro_rhs_parts() {
    const int n_nodes = macro_.node_count();
    const int n_micro = micro_.node_count();
    micro_rhs_.resize(n_nodes);

    const ShapeTable shapes(rule_);
    const double det_elem = 0.25 * micro_.h0() * micro_.h1();
    const auto& faces = micro_.boundary_faces();
    const bool has_fv = !is_zero(data_.fv);

    parallel_for(workers_, n_nodes, [&](std::int64_t i) {
        const Vec2 x = macro_nodes_[i];
        MicroRhsParts& parts = micro_rhs_[i];
        parts.fixed.assign(n_micro, 0.0);
        parts.robin_in.assign(n_micro, 0.0);
        parts.robin_out.assign(n_micro, 0.0);

        if (has_fv) {
            for (int c = 0; c < micro_.cell_count(); ++c) {
                const auto nodes = micro_.cell_nodes(c);
                for (int q = 0; q < rule_.n_cell(); ++q) {
                    const Vec2 yq =
                        micro_.cell_point(c, rule_.cell_points[q].x, rule_.cell_points[q].y);
                    const auto& e = node_cache_.cell(static_cast<int>(i), c, q);
                    const double wq = rule_.cell_weights[q] * det_elem *
                                      fv_hat_(x.x, x.y, yq.x, yq.y) * e.J;
                    for (int a = 0; a < 4; ++a) parts.fixed[nodes[a]] += wq * shapes.N[q][a];
                }
            }
        }

        for (std::size_t f = 0; f < faces.size(); ++f) {
            const Side side = faces[f].side;
            const MicroRole role = data_.roles.micro_side(side);
            const int s = static_cast<int>(side);
            const FaceParam fp = face_parametrization(micro_, faces[f]);
            const double scale = fp.tangent.norm();
            for (int q = 0; q < rule_.n_face(); ++q) {
                const auto& e = node_cache_.face(static_cast<int>(i), static_cast<int>(f), q);
                const double w_meas = rule_.face_weights[q] * e.nu_len * scale;
                if (role == MicroRole::GammaI)
                    for (int a = 0; a < 2; ++a)
                        parts.robin_in[faces[f].nodes[a]] += w_meas * shapes.Nf[q][a];
                else if (role == MicroRole::GammaO)
                    for (int a = 0; a < 2; ++a)
                        parts.robin_out[faces[f].nodes[a]] += w_meas * shapes.Nf[q][a];
                if (has_gv_[s]) {
                    const Vec2 yq = fp.point(rule_.face_points[q]);
                    const double g = gv_[s](x.x, x.y, yq.x, yq.y);
                    for (int a = 0; a < 2; ++a)
                        parts.fixed[faces[f].nodes[a]] += w_meas * g * shapes.Nf[q][a];
                }
            }
        }
    });
}

void AssemblyContext::build_macro_systems() {
    const int nq = rule_.n_cell();
    const auto& faces = micro_.boundary_faces();
    const ShapeTable shapes(rule_);

    // Per macro quadrature point: physical measures of Gamma^I/Gamma^O and the
    // iterate-independent parts of both right-hand sides.
    const std::size_t n_q = macro_qpoints_.size();
    std::vector<double> gamma_in(n_q, 0.0), gamma_out(n_q, 0.0);
    std::vector<double> rhs_u_q(n_q, 0.0), rhs_w_q(n_q, 0.0);

    parallel_for(workers_, static_cast<std::int64_t>(n_q), [&](std::int64_t qg) {
        const Vec2 x = macro_qpoints_[qg];
        double g_in = 0.0, g_out = 0.0, flux_u = 0.0, flux_w = 0.0, corr_u = 0.0, corr_w = 0.0;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const Side side = faces[f].side;
            const MicroRole role = data_.roles.micro_side(side);
            const int s = static_cast<int>(side);
            const FaceParam fp = face_parametrization(micro_, faces[f]);
            const double scale = fp.tangent.norm();
            for (int q = 0; q < rule_.n_face(); ++q) {
                const auto& e = qpoint_cache_.face(static_cast<int>(qg), static_cast<int>(f), q);
                const double w = rule_.face_weights[q] * scale;
                const Vec2 yq = fp.point(rule_.face_points[q]);
                if (role == MicroRole::GammaI) {
                    g_in += w * e.nu_len;
                    if (fu_flux_)
                        flux_u += w * (fu_flux_->c0(x.x, x.y, yq.x, yq.y) * e.nu.x +
                                       fu_flux_->c1(x.x, x.y, yq.x, yq.y) * e.nu.y);
                    if (has_gv_[s]) corr_u += w * e.nu_len * gv_[s](x.x, x.y, yq.x, yq.y);
                } else if (role == MicroRole::GammaO) {
                    g_out += w * e.nu_len;
                    if (fw_flux_)
                        flux_w += w * (fw_flux_->c0(x.x, x.y, yq.x, yq.y) * e.nu.x +
                                       fw_flux_->c1(x.x, x.y, yq.x, yq.y) * e.nu.y);
                    if (has_gv_[s]) corr_w += w * e.nu_len * gv_[s](x.x, x.y, yq.x, yq.y);
                }
            }
        }
        gamma_in[qg] = g_in;
        gamma_out[qg] = g_out;
        rhs_u_q[qg] = fu_(x.x, x.y) + flux_u - corr_u;
        rhs_w_q[qg] = fw_(x.x, x.y) + flux_w - corr_w;
    });

    A_u_ = make_q1_matrix(macro_);
    A_w_ = make_q1_matrix(macro_);
    M0_ = make_q1_matrix(macro_);
    b_u_fixed_.assign(macro_.node_count(), 0.0);
    b_w_fixed_.assign(macro_.node_count(), 0.0);

    const double det_elem = 0.25 * macro_.h0() * macro_.h1();
    const double gx = 2.0 / macro_.h0(), gy = 2.0 / macro_.h1();

    for (int c = 0; c < macro_.cell_count(); ++c) {
        const auto nodes = macro_.cell_nodes(c);
        double lu[4][4] = {}, lw[4][4] = {}, lm[4][4] = {}, bu[4] = {}, bw[4] = {};
        for (int q = 0; q < nq; ++q) {
            const std::size_t qg = std::size_t(c) * nq + q;
            const Vec2 x = macro_qpoints_[qg];
            const double wq = rule_.cell_weights[q] * det_elem;
            const double mass_u = data_.kappa1 * gamma_in[qg];
            const double mass_w = data_.kappa3 * gamma_out[qg];
            const double dw = dw_(x.x, x.y);
            Vec2 g[4];
            for (int a = 0; a < 4; ++a) g[a] = {shapes.dN[q][a].x * gx, shapes.dN[q][a].y * gy};
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 4; ++b) {
                    const double stiff = g[a].dot(g[b]);
                    const double mass = shapes.N[q][a] * shapes.N[q][b];
                    lu[a][b] += wq * (stiff + mass_u * mass);
                    lw[a][b] += wq * (dw * stiff + mass_w * mass);
                    lm[a][b] += wq * mass;
                }
                bu[a] += wq * rhs_u_q[qg] * shapes.N[q][a];
                bw[a] += wq * rhs_w_q[qg] * shapes.N[q][a];
            }
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                A_u_.add(nodes[a], nodes[b], lu[a][b]);
                A_w_.add(nodes[a], nodes[b], lw[a][b]);
                M0_.add(nodes[a], nodes[b], lm[a][b]);
            }
            b_u_fixed_[nodes[a]] += bu[a];
            b_w_fixed_[nodes[a]] += bw[a];
        }
    }

    // Macro boundary terms: Neumann data for u, full-boundary data for w.
    for (const Face& face : macro_.boundary_faces()) {
        const int s = static_cast<int>(face.side);
        const bool u_neumann = data_.roles.macro_side(face.side) == MacroBC::Neumann;
        if (!(u_neumann && has_gu2_[s]) && !has_gw_[s]) continue;
        const FaceParam fp = face_parametrization(macro_, face);
        const double scale = fp.tangent.norm();
        for (int q = 0; q < rule_.n_face(); ++q) {
            const Vec2 x = fp.point(rule_.face_points[q]);
            const double w = rule_.face_weights[q] * scale;
            const auto nf = face_shape(rule_.face_points[q]);
            if (u_neumann && has_gu2_[s]) {
                const double g = gu2_[s](x.x, x.y);
                for (int a = 0; a < 2; ++a) b_u_fixed_[face.nodes[a]] += w * g * nf[a];
            }
            if (has_gw_[s]) {
                const double g = gw_[s](x.x, x.y);
                for (int a = 0; a < 2; ++a) b_w_fixed_[face.nodes[a]] += w * g * nf[a];
            }
        }
    }

    // Dirichlet constraints for u: every node on a Dirichlet side.
    std::map<int, double> constrained;
    for (const Face& face : macro_.boundary_faces()) {
        if (data_.roles.macro_side(face.side) != MacroBC::Dirichlet) continue;
        for (int node : face.nodes) {
            const Vec2 p = macro_.node(node);
            constrained[node] = dirichlet_value_(p.x, p.y);
        }
    }
    dirichlet_u_.assign(constrained.begin(), constrained.end());

    // The w-system is pure Neumann; without the kappa3 Robin mass it is
    // singular with a constant nullspace, so pin dof 0 for determinism.
    if (data_.kappa3 == 0.0) {
        dirichlet_w_ = {{0, 0.0}};
        w_pinned_ = true;
    }
}

SparseSystem AssemblyContext::assemble_micro(int node, double u_i, double w_i) const {
    SparseSystem sys;
    sys.A = micro_matrix(node);
    micro_rhs(node, u_i, w_i, sys.b);
    return sys;
}

void AssemblyContext::micro_rhs(int node, double u_i, double w_i, std::vector<double>& out) const {
    const MicroRhsParts& parts = micro_rhs_[node];
    out = parts.fixed;
    if (data_.kappa1 != 0.0 && u_i != 0.0) axpy(data_.kappa1 * u_i, parts.robin_in, out);
    if (data_.kappa3 != 0.0 && w_i != 0.0) axpy(data_.kappa3 * w_i, parts.robin_out, out);
}

double AssemblyContext::surface_coupling(const std::vector<double>& v_node, int node,
                                         MicroRole role) const {
    const auto& faces = micro_.boundary_faces();
    double total = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) {
        if (data_.roles.micro_side(faces[f].side) != role) continue;
        const FaceParam fp = face_parametrization(micro_, faces[f]);
        const double scale = fp.tangent.norm();
        for (int q = 0; q < rule_.n_face(); ++q) {
            const auto& e = node_cache_.face(node, static_cast<int>(f), q);
            const auto nf = face_shape(rule_.face_points[q]);
            const double v = v_node[faces[f].nodes[0]] * nf[0] + v_node[faces[f].nodes[1]] * nf[1];
            total += rule_.face_weights[q] * v * e.nu_len * scale;
        }
    }
    return total;
}

std::vector<double> AssemblyContext::coupling_vector(const MicroField& V, MicroRole role) const {
    std::vector<double> b(macro_.node_count(), 0.0);
    parallel_for(workers_, macro_.node_count(),
                 [&](std::int64_t i) { b[i] = surface_coupling(V[i], static_cast<int>(i), role); });
    return b;
}

std::vector<double> AssemblyContext::macro_u_rhs(const MicroField& V) const {
    std::vector<double> b = b_u_fixed_;
    if (data_.kappa2 != 0.0) {
        const std::vector<double> bI = coupling_vector(V, MicroRole::GammaI);
        std::vector<double> mb;
        M0_.apply(bI, mb);
        axpy(data_.kappa2, mb, b);
    }
    return b;
}

std::vector<double> AssemblyContext::macro_w_rhs(const MicroField& V) const {
    std::vector<double> b = b_w_fixed_;
    if (data_.kappa4 != 0.0) {
        const std::vector<double> bO = coupling_vector(V, MicroRole::GammaO);
        std::vector<double> mb;
        M0_.apply(bO, mb);
        axpy(data_.kappa4, mb, b);
    }
    return b;
}

SparseSystem AssemblyContext::assemble_macro_u(const MicroField& V) const {
    SparseSystem sys;
    sys.A = A_u_;
    sys.b = macro_u_rhs(V);
    sys.dirichlet = dirichlet_u_;
    return sys;
}

SparseSystem AssemblyContext::assemble_macro_w(const MicroField& V) const {
    SparseSystem sys;
    sys.A = A_w_;
    sys.b = macro_w_rhs(V);
    sys.dirichlet = dirichlet_w_;
    return sys;
}

}  // namespace twoscale
