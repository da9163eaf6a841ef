#ifndef STEKLAB_AXISYM_HPP
#define STEKLAB_AXISYM_HPP

#include "steklab/fem.hpp"

#include <functional>

namespace steklab {

// Torus-like 3D body whose cross-section in the (x1,x2) half-plane is the
// given curve; requires min x1 > 0 on the closed cross-section.
struct TorusDomain {
    BoundaryCurve cross_section;
    double min_x1 = 0;
    double max_x1 = 0;
    double min_x2 = 0;
    double max_x2 = 0;
};

TorusDomain torus_domain(const BoundaryCurve& cross_section);

// Weight a(x) = x1 with bounds taken from the cross-section.
WeightField torus_weight(const TorusDomain& dom);

struct GeodesicCircle {
    double radius = 0;  // x1 of the concentration point
    double height = 0;  // x2 of the concentration point
    int sign = 0;
};

struct LiftOptions {
    double grid_step = 0.1;
    double mask_radius = 0.6;  // FD residual ignored within this distance of a geodesic
    bool parallel = true;
};

struct LiftSample {
    Vec3 y;
    double value;
};

struct Lift3D {
    std::vector<LiftSample> samples;   // inside points only, fixed lattice order
    double fd_residual_max = 0;        // masked 7-point Laplacian residual
    int fd_points = 0;                 // stencil points entering the max
    std::vector<GeodesicCircle> geodesics;
    double grid_step = 0;
};

// Samples U(y) = u(sqrt(y1^2+y2^2), y3) on a uniform Cartesian lattice over
// the torus shell and reports the masked 7-point Laplacian residual. The
// sampler is any cross-section evaluator; lift_field adapts a Field.
Lift3D lift_to_3d(const TorusDomain& dom, const std::function<double(Vec2)>& sampler,
                  const std::vector<GeodesicCircle>& concentration, const LiftOptions& opt);

Lift3D lift_field(const TorusDomain& dom, const Field& u,
                  const std::vector<GeodesicCircle>& concentration, const LiftOptions& opt);

// serial reference for the parallel lattice sweep
Lift3D lift_to_3d_serial(const TorusDomain& dom, const std::function<double(Vec2)>& sampler,
                         const std::vector<GeodesicCircle>& concentration, LiftOptions opt);

} // namespace steklab

#endif
