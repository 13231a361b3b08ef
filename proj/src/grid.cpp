#include "twoscale/grid.hpp"

#include <algorithm>
#include <cmath>

namespace twoscale {

const char* side_name(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
    }
    return "?";
}

Vec2 side_normal(Side s) {
    switch (s) {
        case Side::Left: return {-1.0, 0.0};
        case Side::Right: return {1.0, 0.0};
        case Side::Bottom: return {0.0, -1.0};
        case Side::Top: return {0.0, 1.0};
    }
    return {0.0, 0.0};
}

Grid::Grid(RectDomain domain, int n0, int n1) : domain_(domain), n0_(n0), n1_(n1) {
    if (n0 < 1 || n1 < 1) throw std::invalid_argument("grid needs at least one cell per axis");
    if (!(domain.lo.x < domain.hi.x && domain.lo.y < domain.hi.y))
        throw std::invalid_argument("domain bounds must satisfy lo < hi componentwise");
    h0_ = (domain.hi.x - domain.lo.x) / n0;
    h1_ = (domain.hi.y - domain.lo.y) / n1;

    for (int cj = 0; cj < n1_; ++cj) {
        faces_.push_back({cj * n0_ + 0, Side::Left, {node_index(0, cj), node_index(0, cj + 1)}});
        faces_.push_back(
            {cj * n0_ + (n0_ - 1), Side::Right, {node_index(n0_, cj), node_index(n0_, cj + 1)}});
    }
    for (int ci = 0; ci < n0_; ++ci) {
        faces_.push_back({ci, Side::Bottom, {node_index(ci, 0), node_index(ci + 1, 0)}});
        faces_.push_back({(n1_ - 1) * n0_ + ci,
                          Side::Top,
                          {node_index(ci, n1_), node_index(ci + 1, n1_)}});
    }
}

Vec2 Grid::node(int idx) const {
    const int i = idx % (n0_ + 1);
    const int j = idx / (n0_ + 1);
    return {domain_.lo.x + i * h0_, domain_.lo.y + j * h1_};
}

std::array<int, 4> Grid::cell_nodes(int c) const {
    const int ci = c % n0_;
    const int cj = c / n0_;
    return {node_index(ci, cj), node_index(ci + 1, cj), node_index(ci + 1, cj + 1),
            node_index(ci, cj + 1)};
}

Vec2 Grid::cell_center(int c) const {
    const int ci = c % n0_;
    const int cj = c / n0_;
    return {domain_.lo.x + (ci + 0.5) * h0_, domain_.lo.y + (cj + 0.5) * h1_};
}

Vec2 Grid::cell_point(int c, double s, double t) const {
    const Vec2 mid = cell_center(c);
    return {mid.x + 0.5 * h0_ * s, mid.y + 0.5 * h1_ * t};
}

double Grid::fe_eval(const std::vector<double>& coeffs, Vec2 x) const {
    int ci = static_cast<int>(std::floor((x.x - domain_.lo.x) / h0_));
    int cj = static_cast<int>(std::floor((x.y - domain_.lo.y) / h1_));
    ci = std::clamp(ci, 0, n0_ - 1);
    cj = std::clamp(cj, 0, n1_ - 1);
    const int c = cj * n0_ + ci;
    const Vec2 mid = cell_center(c);
    const double s = 2.0 * (x.x - mid.x) / h0_;
    const double t = 2.0 * (x.y - mid.y) / h1_;
    const auto N = shape_eval(s, t);
    const auto nodes = cell_nodes(c);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += N[a] * coeffs[nodes[a]];
    return v;
}

Vec2 Grid::fe_grad(const std::vector<double>& coeffs, Vec2 x) const {
    int ci = static_cast<int>(std::floor((x.x - domain_.lo.x) / h0_));
    int cj = static_cast<int>(std::floor((x.y - domain_.lo.y) / h1_));
    ci = std::clamp(ci, 0, n0_ - 1);
    cj = std::clamp(cj, 0, n1_ - 1);
    const int c = cj * n0_ + ci;
    const Vec2 mid = cell_center(c);
    const double s = 2.0 * (x.x - mid.x) / h0_;
    const double t = 2.0 * (x.y - mid.y) / h1_;
    const auto dN = shape_grad(s, t);
    const auto nodes = cell_nodes(c);
    Vec2 g{0.0, 0.0};
    for (int a = 0; a < 4; ++a) {
        g.x += dN[a].x * coeffs[nodes[a]] * (2.0 / h0_);
        g.y += dN[a].y * coeffs[nodes[a]] * (2.0 / h1_);
    }
    return g;
}

Grid build_grid(RectDomain domain, int n0, int n1) { return Grid(domain, n0, n1); }

std::array<double, 4> shape_eval(double s, double t) {
    return {0.25 * (1.0 - s) * (1.0 - t), 0.25 * (1.0 + s) * (1.0 - t),
            0.25 * (1.0 + s) * (1.0 + t), 0.25 * (1.0 - s) * (1.0 + t)};
}

std::array<Vec2, 4> shape_grad(double s, double t) {
    return {Vec2{-0.25 * (1.0 - t), -0.25 * (1.0 - s)},
            Vec2{0.25 * (1.0 - t), -0.25 * (1.0 + s)},
            Vec2{0.25 * (1.0 + t), 0.25 * (1.0 + s)},
            Vec2{-0.25 * (1.0 + t), 0.25 * (1.0 - s)}};
}

FaceParam face_parametrization(const Grid& grid, const Face& face) {
    const Vec2 a = grid.node(face.nodes[0]);
    const Vec2 b = grid.node(face.nodes[1]);
    return {{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)},
            {0.5 * (b.x - a.x), 0.5 * (b.y - a.y)},
            side_normal(face.side)};
}

QuadratureRule QuadratureRule::gauss(int n) {
    std::vector<double> p, w;
    switch (n) {
        case 1:
            p = {0.0};
            w = {2.0};
            break;
        case 2: {
            const double g = 1.0 / std::sqrt(3.0);
            p = {-g, g};
            w = {1.0, 1.0};
            break;
        }
        case 3: {
            const double g = std::sqrt(3.0 / 5.0);
            p = {-g, 0.0, g};
            w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            break;
        }
        case 4: {
            const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
            const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
            p = {-b, -a, a, b};
            w = {wb, wa, wa, wb};
            break;
        }
        case 5: {
            const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
            const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
            p = {-b, -a, 0.0, a, b};
            w = {wb, wa, 128.0 / 225.0, wa, wb};
            break;
        }
        default:
            throw std::invalid_argument("gauss rule supports 1..5 points per axis");
    }
    QuadratureRule rule;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            rule.cell_points.push_back({p[i], p[j]});
            rule.cell_weights.push_back(w[i] * w[j]);
        }
    rule.face_points = p;
    rule.face_weights = w;
    return rule;
}

bool BoundaryRoles::has_micro_role(MicroRole r) const {
    return micro[0] == r || micro[1] == r || micro[2] == r || micro[3] == r;
}

bool BoundaryRoles::has_macro_dirichlet() const {
    for (auto bc : macro)
        if (bc == MacroBC::Dirichlet) return true;
    return false;
}

std::vector<double> interpolate_macro(const Grid& grid, const Expr& e, const ParamMap& params) {
    std::vector<double> out(grid.node_count());
    EvalEnv env;
    env.params = &params;
    for (int i = 0; i < grid.node_count(); ++i) {
        const Vec2 p = grid.node(i);
        env.vars = {p.x, p.y, 0.0, 0.0};
        out[i] = e.eval(env);
    }
    return out;
}

std::vector<double> interpolate_micro(const Grid& grid, const Expr& e, const ParamMap& params,
                                      Vec2 x) {
    std::vector<double> out(grid.node_count());
    EvalEnv env;
    env.params = &params;
    for (int i = 0; i < grid.node_count(); ++i) {
        const Vec2 p = grid.node(i);
        env.vars = {x.x, x.y, p.x, p.y};
        out[i] = e.eval(env);
    }
    return out;
}

}  // namespace twoscale
