#include "steklab/axisym.hpp"

#include <cmath>
#include <limits>

namespace steklab {

TorusDomain torus_domain(const BoundaryCurve& cross_section) {
    TorusDomain dom;
    dom.cross_section = cross_section;
    dom.min_x1 = std::numeric_limits<double>::max();
    dom.max_x1 = std::numeric_limits<double>::lowest();
    dom.min_x2 = std::numeric_limits<double>::max();
    dom.max_x2 = std::numeric_limits<double>::lowest();
    const int D = 4096;
    for (int i = 0; i < D; ++i) {
        Vec2 p = cross_section.point(double(i) / D);
        dom.min_x1 = std::min(dom.min_x1, p.x());
        dom.max_x1 = std::max(dom.max_x1, p.x());
        dom.min_x2 = std::min(dom.min_x2, p.y());
        dom.max_x2 = std::max(dom.max_x2, p.y());
    }
    if (dom.min_x1 <= 1e-12)
        throw Error("cross-section touches the symmetry axis (min x1 = " + std::to_string(dom.min_x1) + ")");
    return dom;
}

WeightField torus_weight(const TorusDomain& dom) {
    WeightField w = axial_weight();
    // a = x1 is linear, so its extrema over the closed region sit on the boundary
    w.a0 = dom.min_x1;
    w.a1 = dom.max_x1;
    return w;
}

namespace {

struct Lattice {
    Vec3 lo;
    int nx, ny, nz;
    double g;
    Vec3 point(int i, int j, int k) const { return lo + g * Vec3(i, j, k); }
    long index(int i, int j, int k) const { return (long(k) * ny + j) * nx + i; }
};

Lift3D run_lift(const TorusDomain& dom, const std::function<double(Vec2)>& sampler,
                const std::vector<GeodesicCircle>& concentration, const LiftOptions& opt,
                bool parallel) {
    const double g = opt.grid_step;
    if (g <= 0) throw Error("grid step must be positive");
    const double R = dom.max_x1 + 0.5 * g;
    Lattice lat;
    lat.g = g;
    lat.lo = Vec3(-R, -R, dom.min_x2 - 0.5 * g);
    lat.nx = lat.ny = int(std::ceil(2 * R / g)) + 1;
    lat.nz = int(std::ceil((dom.max_x2 - dom.min_x2 + g) / g)) + 1;

    const long total = long(lat.nx) * lat.ny * lat.nz;
    std::vector<double> value(total, 0.0);
    std::vector<unsigned char> inside(total, 0);

    // lattice sweep: value(y) = u(sqrt(y1^2+y2^2), y3); parallel over z-slabs
    auto sweep_slab = [&](int k) {
        for (int j = 0; j < lat.ny; ++j) {
            for (int i = 0; i < lat.nx; ++i) {
                Vec3 y = lat.point(i, j, k);
                double r = std::hypot(y.x(), y.y());
                if (r < dom.min_x1 || r > dom.max_x1) continue;
                Vec2 q(r, y.z());
                double v;
                try {
                    v = sampler(q);
                } catch (const Error&) {
                    continue;  // outside the cross-section
                }
                long id = lat.index(i, j, k);
                value[id] = v;
                inside[id] = 1;
            }
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int k = 0; k < lat.nz; ++k) sweep_slab(k);
    } else {
        for (int k = 0; k < lat.nz; ++k) sweep_slab(k);
    }

    Lift3D out;
    out.grid_step = g;
    out.geodesics = concentration;
    for (int k = 0; k < lat.nz; ++k)
        for (int j = 0; j < lat.ny; ++j)
            for (int i = 0; i < lat.nx; ++i)
                if (inside[lat.index(i, j, k)])
                    out.samples.push_back({lat.point(i, j, k), value[lat.index(i, j, k)]});

    // masked 7-point Laplacian residual
    double worst = 0;
    int used = 0;
    for (int k = 1; k + 1 < lat.nz; ++k) {
        for (int j = 1; j + 1 < lat.ny; ++j) {
            for (int i = 1; i + 1 < lat.nx; ++i) {
                long c = lat.index(i, j, k);
                if (!inside[c]) continue;
                long nb[6] = {lat.index(i - 1, j, k), lat.index(i + 1, j, k),
                              lat.index(i, j - 1, k), lat.index(i, j + 1, k),
                              lat.index(i, j, k - 1), lat.index(i, j, k + 1)};
                bool all = true;
                for (long id : nb) all = all && inside[id];
                if (!all) continue;
                Vec3 y = lat.point(i, j, k);
                double r = std::hypot(y.x(), y.y());
                bool masked = false;
                for (const auto& gc : concentration) {
                    double d = std::hypot(r - gc.radius, y.z() - gc.height);
                    if (d < opt.mask_radius) masked = true;
                }
                if (masked) continue;
                double lap = -6.0 * value[c];
                for (long id : nb) lap += value[id];
                lap /= g * g;
                worst = std::max(worst, std::abs(lap));
                ++used;
            }
        }
    }
    out.fd_residual_max = worst;
    out.fd_points = used;
    return out;
}

} // namespace

Lift3D lift_to_3d(const TorusDomain& dom, const std::function<double(Vec2)>& sampler,
                  const std::vector<GeodesicCircle>& concentration, const LiftOptions& opt) {
    return run_lift(dom, sampler, concentration, opt, opt.parallel);
}

Lift3D lift_to_3d_serial(const TorusDomain& dom, const std::function<double(Vec2)>& sampler,
                         const std::vector<GeodesicCircle>& concentration, LiftOptions opt) {
    return run_lift(dom, sampler, concentration, opt, false);
}

Lift3D lift_field(const TorusDomain& dom, const Field& u,
                  const std::vector<GeodesicCircle>& concentration, const LiftOptions& opt) {
    auto sampler = [&u](Vec2 q) { return u.eval(q); };
    return lift_to_3d(dom, sampler, concentration, opt);
}

} // namespace steklab
