#ifndef STEKLAB_GEOMETRY_HPP
#define STEKLAB_GEOMETRY_HPP

#include "steklab/common.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace steklab {

// Closed, regular parametrized boundary of a planar domain; t lives on [0,1).
// The parametrization must run counterclockwise so that the outward normal
// is the tangent rotated by -90 degrees.
struct BoundaryCurve {
    std::function<Vec2(double)> gamma;   // position
    std::function<Vec2(double)> dgamma;  // derivative w.r.t. t
    Vec2 star_center{0.0, 0.0};          // interior point used by the mesher

    Vec2 point(double t) const { return gamma(wrap_unit(t)); }
    Vec2 tangent(double t) const { return dgamma(wrap_unit(t)); }
    double speed(double t) const { return tangent(t).norm(); }
    Vec2 normal(double t) const {
        Vec2 d = tangent(t);
        double s = d.norm();
        return Vec2(d.y() / s, -d.x() / s);
    }

    // Checks closedness, regularity |gamma'|>0 and simplicity on a dense
    // parameter sample. Throws Error on violation.
    void validate(int samples = 2048) const;
};

BoundaryCurve circle_curve(Vec2 center, double radius);
BoundaryCurve ellipse_curve(Vec2 center, double rx, double ry);
// r(theta) = radius * (1 + eps*cos(k*theta)) around center; |eps| small keeps it star-shaped.
BoundaryCurve star_curve(Vec2 center, double radius, double eps, int k);
// Periodic cubic spline through the given points (in counterclockwise order).
BoundaryCurve spline_curve(const std::vector<Vec2>& points);

// Anisotropy weight a(x) with analytic gradient and declared bounds.
struct WeightField {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> grad;
    double a0 = 0.0;  // declared lower bound
    double a1 = 0.0;  // declared upper bound
};

WeightField unit_weight();
WeightField axial_weight();  // a(x) = x1, the torus cross-section weight

// Samples a over the closed region enclosed by the curve (star rays from
// star_center) and returns {min, max}. Throws if min <= 0.
std::pair<double, double> weight_bounds_on(const WeightField& a,
                                           const BoundaryCurve& curve,
                                           int samples = 256);

struct GradingPoint {
    Vec2 point;
    double local_h;
};

// Conforming triangulation of the region enclosed by a star-shaped curve.
// Boundary nodes come first (ids 0..n_boundary-1) in loop order and carry
// their curve parameters.
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;  // CCW
    int n_boundary = 0;
    std::vector<double> boundary_param;  // size n_boundary
    double h_max_edge = 0.0;             // longest edge in the mesh
    double h_requested = 0.0;            // h_max passed to build_mesh

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    double triangle_area(int t) const;
    double boundary_edge_length(int i) const {
        return (nodes[(i + 1) % n_boundary] - nodes[i]).norm();
    }

    struct Location {
        int triangle;
        std::array<double, 3> bary;
    };
    std::optional<Location> locate(const Vec2& p) const;
    int nearest_boundary_node(const Vec2& p) const;
    const std::vector<std::vector<int>>& node_neighbors() const;

    // point-in-polygon test against the boundary loop
    bool contains(const Vec2& p, double tol = 1e-12) const;

    void build_search_structures();  // called by build_mesh

  private:
    // uniform-bin triangle locator
    struct Bins {
        Vec2 lo, hi;
        int nx = 0, ny = 0;
        std::vector<std::vector<int>> cells;
    };
    Bins bins_;
    std::vector<std::vector<int>> neighbors_;
};

Mesh build_mesh(const BoundaryCurve& curve, double h_max,
                const std::vector<GradingPoint>& grading = {});

// Throws Error if a mesh invariant fails (positive areas, closed boundary
// loop consistent with the curve, boundary nodes on the curve).
void validate_mesh(const Mesh& mesh, const BoundaryCurve& curve);

enum class CritKind { Minimum, Maximum, Saddle };

struct CriticalPoint {
    Vec2 xi;
    double t;
    CritKind kind;
    int degree_sign;  // +1 at minima, -1 at maxima; 0 means not C1-stable
};

struct CriticalPointReport {
    std::vector<CriticalPoint> stable;            // nonzero degree only
    std::vector<std::pair<double, double>> plateaus;  // parameter intervals with vanishing derivative
    bool degenerate = false;                      // derivative below tolerance everywhere
};

// Finds the critical points of a restricted to the curve by locating sign
// changes of d/dt a(gamma(t)) on a fine grid, refined by bisection.
CriticalPointReport boundary_critical_points(const WeightField& a,
                                             const BoundaryCurve& curve,
                                             double tol = 1e-10,
                                             int grid = 2048);

} // namespace steklab

#endif
