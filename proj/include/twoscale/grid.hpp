#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "twoscale/expr.hpp"
#include "twoscale/linalg.hpp"

namespace twoscale {

struct RectDomain {
    Vec2 lo{-1.0, -1.0};
    Vec2 hi{1.0, 1.0};
};

enum class Side : int { Left = 0, Right = 1, Bottom = 2, Top = 3 };
const char* side_name(Side s);

// Outward unit normal of an axis-aligned rectangle side.
Vec2 side_normal(Side s);

struct Face {
    int cell;
    Side side;
    std::array<int, 2> nodes;  // ordered along the parametrization, t=-1 -> t=+1
};

// Structured quadrilateral mesh with lexicographic node numbering
// (node (i,j) -> j*(n0+1)+i); dof index == node index.
class Grid {
public:
    Grid(RectDomain domain, int n0, int n1);

    int n0() const { return n0_; }
    int n1() const { return n1_; }
    double h0() const { return h0_; }
    double h1() const { return h1_; }
    const RectDomain& domain() const { return domain_; }

    int node_count() const { return (n0_ + 1) * (n1_ + 1); }
    int cell_count() const { return n0_ * n1_; }

    int node_index(int i, int j) const { return j * (n0_ + 1) + i; }
    Vec2 node(int idx) const;
    // Counter-clockwise corner nodes of cell c.
    std::array<int, 4> cell_nodes(int c) const;
    Vec2 cell_center(int c) const;
    // Maps element coordinates (s,t) in [-1,1]^2 into cell c.
    Vec2 cell_point(int c, double s, double t) const;

    const std::vector<Face>& boundary_faces() const { return faces_; }

    // Evaluates the nodal field at an arbitrary point of the domain.
    double fe_eval(const std::vector<double>& coeffs, Vec2 x) const;
    Vec2 fe_grad(const std::vector<double>& coeffs, Vec2 x) const;

private:
    RectDomain domain_;
    int n0_, n1_;
    double h0_, h1_;
    std::vector<Face> faces_;
};

Grid build_grid(RectDomain domain, int n0, int n1);

// Bilinear shape functions on the element square [-1,1]^2, corners ordered
// (-1,-1), (1,-1), (1,1), (-1,1) to match Grid::cell_nodes.
std::array<double, 4> shape_eval(double s, double t);
std::array<Vec2, 4> shape_grad(double s, double t);

// t in [-1,1] -> point(t) = mid + t*tangent; |tangent| is half the face length.
struct FaceParam {
    Vec2 mid;
    Vec2 tangent;
    Vec2 normal;  // outward unit normal of the rectangle side
    Vec2 point(double t) const { return mid + t * tangent; }
};
FaceParam face_parametrization(const Grid& grid, const Face& face);

// Trace of the two face-node basis functions at face coordinate t.
inline std::array<double, 2> face_shape(double t) {
    return {0.5 * (1.0 - t), 0.5 * (1.0 + t)};
}

struct QuadratureRule {
    std::vector<Vec2> cell_points;      // on [-1,1]^2
    std::vector<double> cell_weights;   // sum to 4
    std::vector<double> face_points;    // on [-1,1]
    std::vector<double> face_weights;   // sum to 2

    int n_cell() const { return static_cast<int>(cell_points.size()); }
    int n_face() const { return static_cast<int>(face_points.size()); }

    static QuadratureRule gauss(int points_per_axis);  // 1..5
};

enum class MacroBC { Dirichlet, Neumann };
enum class MicroRole { GammaI, GammaO, GammaN };

struct BoundaryRoles {
    std::array<MacroBC, 4> macro{MacroBC::Dirichlet, MacroBC::Neumann, MacroBC::Neumann,
                                 MacroBC::Neumann};
    std::array<MicroRole, 4> micro{MicroRole::GammaI, MicroRole::GammaO, MicroRole::GammaN,
                                   MicroRole::GammaN};

    MacroBC macro_side(Side s) const { return macro[static_cast<int>(s)]; }
    MicroRole micro_side(Side s) const { return micro[static_cast<int>(s)]; }

    bool has_micro_role(MicroRole r) const;
    bool has_macro_dirichlet() const;
};

// Nodal interpolation. Macro fields depend on (x0,x1); micro fields on
// (y0,y1) with the macro point fixed in the environment.
std::vector<double> interpolate_macro(const Grid& grid, const Expr& e, const ParamMap& params);
std::vector<double> interpolate_micro(const Grid& grid, const Expr& e, const ParamMap& params,
                                      Vec2 x);

}  // namespace twoscale
