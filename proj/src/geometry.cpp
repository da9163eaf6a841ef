#include "steklab/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace steklab {

// ---------------------------------------------------------------------------
// curves

void BoundaryCurve::validate(int samples) const {
    const double gap = (point(0.0) - point(1.0 - 1e-15)).norm();
    double scale = 0.0;
    for (int i = 0; i < 16; ++i) scale = std::max(scale, point(i / 16.0).norm());
    scale = std::max(scale, 1.0);
    if (gap > 1e-9 * scale) throw Error("curve not closed: |gamma(0)-gamma(1-)| = " + std::to_string(gap));

    double max_speed = 0.0, min_speed = std::numeric_limits<double>::max();
    std::vector<Vec2> pts(samples);
    for (int i = 0; i < samples; ++i) {
        double t = double(i) / samples;
        pts[i] = point(t);
        double s = speed(t);
        max_speed = std::max(max_speed, s);
        min_speed = std::min(min_speed, s);
    }
    if (min_speed < 1e-10 * max_speed)
        throw Error("degenerate curve: |gamma'| vanishes (min speed " + std::to_string(min_speed) + ")");

    // simplicity: no intersection among non-adjacent chords of the sample
    auto seg_intersect = [](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
        auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
        double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
        double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
        return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
    };
    const int n = samples;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent around the wrap
            if (seg_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
                throw Error("curve self-intersects near t = " + std::to_string(double(i) / n));
        }
    }
}

BoundaryCurve circle_curve(Vec2 center, double radius) {
    if (radius <= 0) throw Error("circle radius must be positive");
    BoundaryCurve c;
    c.gamma = [=](double t) {
        double th = 2 * kPi * t;
        return Vec2(center.x() + radius * std::cos(th), center.y() + radius * std::sin(th));
    };
    c.dgamma = [=](double t) {
        double th = 2 * kPi * t;
        return Vec2(-2 * kPi * radius * std::sin(th), 2 * kPi * radius * std::cos(th));
    };
    c.star_center = center;
    return c;
}

BoundaryCurve ellipse_curve(Vec2 center, double rx, double ry) {
    if (rx <= 0 || ry <= 0) throw Error("ellipse semi-axes must be positive");
    BoundaryCurve c;
    c.gamma = [=](double t) {
        double th = 2 * kPi * t;
        return Vec2(center.x() + rx * std::cos(th), center.y() + ry * std::sin(th));
    };
    c.dgamma = [=](double t) {
        double th = 2 * kPi * t;
        return Vec2(-2 * kPi * rx * std::sin(th), 2 * kPi * ry * std::cos(th));
    };
    c.star_center = center;
    return c;
}

BoundaryCurve star_curve(Vec2 center, double radius, double eps, int k) {
    if (radius <= 0) throw Error("star radius must be positive");
    if (std::abs(eps) >= 1.0) throw Error("star eps must satisfy |eps| < 1");
    BoundaryCurve c;
    c.gamma = [=](double t) {
        double th = 2 * kPi * t;
        double r = radius * (1.0 + eps * std::cos(k * th));
        return Vec2(center.x() + r * std::cos(th), center.y() + r * std::sin(th));
    };
    c.dgamma = [=](double t) {
        double th = 2 * kPi * t;
        double r = radius * (1.0 + eps * std::cos(k * th));
        double dr = -radius * eps * k * std::sin(k * th);
        Vec2 e(std::cos(th), std::sin(th)), ep(-std::sin(th), std::cos(th));
        return Vec2(2 * kPi * (dr * e + r * ep));
    };
    c.star_center = center;
    return c;
}

namespace {

// periodic cubic spline: solves for second derivatives with cyclic system
struct PeriodicSpline {
    std::vector<double> x;               // knot params 0, 1/m, ...
    std::vector<Vec2> p;                 // knot points
    std::vector<Vec2> m2;                // second derivatives at knots
    double h = 0;

    explicit PeriodicSpline(const std::vector<Vec2>& pts) : p(pts) {
        const int m = static_cast<int>(pts.size());
        h = 1.0 / m;
        x.resize(m);
        for (int i = 0; i < m; ++i) x[i] = i * h;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
        for (int i = 0; i < m; ++i) {
            A(i, (i + m - 1) % m) = h;
            A(i, i) = 4 * h;
            A(i, (i + 1) % m) = h;
            Vec2 r = 6.0 / h * (p[(i + 1) % m] - 2 * p[i] + p[(i + m - 1) % m]);
            rhs(i, 0) = r.x();
            rhs(i, 1) = r.y();
        }
        Eigen::MatrixXd sol = A.partialPivLu().solve(rhs);
        m2.resize(m);
        for (int i = 0; i < m; ++i) m2[i] = Vec2(sol(i, 0), sol(i, 1));
    }

    Vec2 eval(double t) const {
        t = wrap_unit(t);
        const int m = static_cast<int>(p.size());
        int i = std::min(int(t / h), m - 1);
        double a = (x[i] + h - t) / h, b = (t - x[i]) / h;
        const Vec2& pi = p[i];
        const Vec2& pj = p[(i + 1) % m];
        const Vec2& mi = m2[i];
        const Vec2& mj = m2[(i + 1) % m];
        return a * pi + b * pj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * (h * h / 6.0);
    }

    Vec2 deriv(double t) const {
        t = wrap_unit(t);
        const int m = static_cast<int>(p.size());
        int i = std::min(int(t / h), m - 1);
        double a = (x[i] + h - t) / h, b = (t - x[i]) / h;
        const Vec2& pi = p[i];
        const Vec2& pj = p[(i + 1) % m];
        const Vec2& mi = m2[i];
        const Vec2& mj = m2[(i + 1) % m];
        return (pj - pi) / h + ((3 * b * b - 1) * mj - (3 * a * a - 1) * mi) * (h / 6.0);
    }
};

} // namespace

BoundaryCurve spline_curve(const std::vector<Vec2>& points) {
    if (points.size() < 4) throw Error("spline needs at least 4 points");
    std::vector<Vec2> pts = points;
    // enforce counterclockwise orientation
    double area2 = 0;
    const int m = static_cast<int>(pts.size());
    for (int i = 0; i < m; ++i) {
        const Vec2& a = pts[i];
        const Vec2& b = pts[(i + 1) % m];
        area2 += a.x() * b.y() - b.x() * a.y();
    }
    if (area2 < 0) std::reverse(pts.begin(), pts.end());
    auto sp = std::make_shared<PeriodicSpline>(pts);
    Vec2 centroid = Vec2::Zero();
    for (const auto& q : pts) centroid += q;
    centroid /= double(m);
    BoundaryCurve c;
    c.gamma = [sp](double t) { return sp->eval(t); };
    c.dgamma = [sp](double t) { return sp->deriv(t); };
    c.star_center = centroid;
    return c;
}

// ---------------------------------------------------------------------------
// weights

WeightField unit_weight() {
    WeightField w;
    w.value = [](Vec2) { return 1.0; };
    w.grad = [](Vec2) { return Vec2(0.0, 0.0); };
    w.a0 = w.a1 = 1.0;
    return w;
}

WeightField axial_weight() {
    WeightField w;
    w.value = [](Vec2 p) { return p.x(); };
    w.grad = [](Vec2) { return Vec2(1.0, 0.0); };
    return w;
}

std::pair<double, double> weight_bounds_on(const WeightField& a, const BoundaryCurve& curve,
                                           int samples) {
    double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
    const Vec2 c = curve.star_center;
    const int rings = 24;
    for (int i = 0; i < samples; ++i) {
        Vec2 q = curve.point(double(i) / samples);
        for (int k = 0; k <= rings; ++k) {
            Vec2 p = c + (double(k) / rings) * (q - c);
            double v = a.value(p);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (lo <= 0) throw Error("weight is not positive on the closed domain (min = " + std::to_string(lo) + ")");
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// mesh

double Mesh::triangle_area(int t) const {
    const auto& tr = triangles[t];
    const Vec2& a = nodes[tr[0]];
    const Vec2& b = nodes[tr[1]];
    const Vec2& c = nodes[tr[2]];
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

void Mesh::build_search_structures() {
    // node adjacency
    neighbors_.assign(nodes.size(), {});
    for (const auto& tr : triangles) {
        for (int e = 0; e < 3; ++e) {
            int u = tr[e], v = tr[(e + 1) % 3];
            neighbors_[u].push_back(v);
            neighbors_[v].push_back(u);
        }
    }
    for (auto& nb : neighbors_) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    // triangle bins
    Vec2 lo = nodes[0], hi = nodes[0];
    for (const auto& p : nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Vec2 pad = 1e-9 * (hi - lo) + Vec2(1e-12, 1e-12);
    bins_.lo = lo - pad;
    bins_.hi = hi + pad;
    int side = std::max(4, int(std::sqrt(double(triangles.size()))));
    bins_.nx = bins_.ny = side;
    bins_.cells.assign(size_t(side) * side, {});
    Vec2 ext = bins_.hi - bins_.lo;
    for (int t = 0; t < n_triangles(); ++t) {
        Vec2 tlo = nodes[triangles[t][0]], thi = tlo;
        for (int k = 1; k < 3; ++k) {
            tlo = tlo.cwiseMin(nodes[triangles[t][k]]);
            thi = thi.cwiseMax(nodes[triangles[t][k]]);
        }
        int i0 = std::clamp(int((tlo.x() - bins_.lo.x()) / ext.x() * side), 0, side - 1);
        int i1 = std::clamp(int((thi.x() - bins_.lo.x()) / ext.x() * side), 0, side - 1);
        int j0 = std::clamp(int((tlo.y() - bins_.lo.y()) / ext.y() * side), 0, side - 1);
        int j1 = std::clamp(int((thi.y() - bins_.lo.y()) / ext.y() * side), 0, side - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) bins_.cells[size_t(j) * side + i].push_back(t);
    }
}

std::optional<Mesh::Location> Mesh::locate(const Vec2& p) const {
    if (bins_.nx == 0) return std::nullopt;
    Vec2 ext = bins_.hi - bins_.lo;
    if (p.x() < bins_.lo.x() || p.x() > bins_.hi.x() || p.y() < bins_.lo.y() || p.y() > bins_.hi.y())
        return std::nullopt;
    int i = std::clamp(int((p.x() - bins_.lo.x()) / ext.x() * bins_.nx), 0, bins_.nx - 1);
    int j = std::clamp(int((p.y() - bins_.lo.y()) / ext.y() * bins_.ny), 0, bins_.ny - 1);
    const double tol = -1e-11;
    for (int t : bins_.cells[size_t(j) * bins_.nx + i]) {
        const auto& tr = triangles[t];
        const Vec2& a = nodes[tr[0]];
        const Vec2& b = nodes[tr[1]];
        const Vec2& c = nodes[tr[2]];
        double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
        if (det == 0) continue;
        double l1 = ((b.x() - p.x()) * (c.y() - p.y()) - (c.x() - p.x()) * (b.y() - p.y())) / det;
        double l2 = ((c.x() - p.x()) * (a.y() - p.y()) - (a.x() - p.x()) * (c.y() - p.y())) / det;
        double l3 = 1.0 - l1 - l2;
        if (l1 >= tol && l2 >= tol && l3 >= tol) return Location{t, {l1, l2, l3}};
    }
    return std::nullopt;
}

int Mesh::nearest_boundary_node(const Vec2& p) const {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (int i = 0; i < n_boundary; ++i) {
        double d = (nodes[i] - p).squaredNorm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

const std::vector<std::vector<int>>& Mesh::node_neighbors() const { return neighbors_; }

bool Mesh::contains(const Vec2& p, double tol) const {
    // winding of the boundary loop
    double angle = 0;
    for (int i = 0; i < n_boundary; ++i) {
        Vec2 u = nodes[i] - p;
        Vec2 v = nodes[(i + 1) % n_boundary] - p;
        double du = u.norm(), dv = v.norm();
        if (du < tol || dv < tol) return true;  // on a vertex
        angle += std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
    }
    return std::abs(angle) > kPi;
}

namespace {

struct DenseCurve {
    std::vector<double> t;       // size D+1, t[D] = 1
    std::vector<Vec2> pos;       // size D+1
    std::vector<double> arc;     // cumulative chord length, size D+1
    double total = 0;

    DenseCurve(const BoundaryCurve& c, int D) {
        t.resize(D + 1);
        pos.resize(D + 1);
        arc.resize(D + 1);
        for (int i = 0; i <= D; ++i) {
            t[i] = double(i) / D;
            pos[i] = c.point(t[i] == 1.0 ? 0.0 : t[i]);
        }
        arc[0] = 0;
        for (int i = 1; i <= D; ++i) arc[i] = arc[i - 1] + (pos[i] - pos[i - 1]).norm();
        total = arc[D];
    }

    double param_nearest(const Vec2& p) const {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (size_t i = 0; i + 1 < t.size(); ++i) {
            double d = (pos[i] - p).squaredNorm();
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        return t[best];
    }
};

} // namespace

Mesh build_mesh(const BoundaryCurve& curve, double h_max, const std::vector<GradingPoint>& grading) {
    if (h_max <= 0) throw Error("h_max must be positive");
    curve.validate(1024);

    const int D = 16384;
    DenseCurve dc(curve, D);

    // reject grading points outside the closed domain and check sizes
    {
        std::vector<Vec2> poly(dc.pos.begin(), dc.pos.end() - 1);
        double scale = 0;
        for (const auto& q : poly) scale = std::max(scale, (q - curve.star_center).norm());
        auto seg_dist = [](const Vec2& p, const Vec2& a, const Vec2& b) {
            Vec2 ab = b - a;
            double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            return (a + s * ab - p).norm();
        };
        for (const auto& g : grading) {
            if (g.local_h <= 0 || g.local_h > h_max)
                throw Error("grading local_h must lie in (0, h_max]");
            double dist = std::numeric_limits<double>::max();
            for (size_t i = 0; i < poly.size(); ++i)
                dist = std::min(dist, seg_dist(g.point, poly[i], poly[(i + 1) % poly.size()]));
            if (dist <= 1e-6 * scale) continue;  // on the curve
            double angle = 0;
            for (size_t i = 0; i < poly.size(); ++i) {
                Vec2 u = poly[i] - g.point;
                Vec2 v = poly[(i + 1) % poly.size()] - g.point;
                angle += std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
            }
            if (std::abs(angle) < kPi) throw Error("grading point outside the closed domain");
        }
    }

    // boundary size field along the dense sample
    const double growth = 0.15;
    std::vector<double> sigma(D + 1, h_max);
    for (int i = 0; i <= D; ++i) {
        for (const auto& g : grading) {
            double d = (dc.pos[i] - g.point).norm();
            double s = (d <= 3.0 * g.local_h) ? g.local_h : g.local_h + growth * (d - 3.0 * g.local_h);
            sigma[i] = std::min(sigma[i], s);
        }
    }

    // equidistribute nodes by integral of ds/sigma, anchored at the first
    // grading point's parameter when present
    std::vector<double> W(D + 1, 0.0);
    for (int i = 1; i <= D; ++i) {
        double ds = dc.arc[i] - dc.arc[i - 1];
        W[i] = W[i - 1] + ds * 2.0 / (sigma[i] + sigma[i - 1]);
    }
    const double Wtot = W[D];
    // even count keeps mirror-symmetric configurations symmetric on the mesh
    const int Nb = std::max(12, 2 * int(std::ceil(0.5 * Wtot)));

    double t_anchor = 0.0;
    if (!grading.empty()) t_anchor = dc.param_nearest(grading[0].point);
    auto W_of_t = [&](double t) {
        t = wrap_unit(t);
        double x = t * D;
        int i = std::min(int(x), D - 1);
        double fr = x - i;
        return W[i] + fr * (W[i + 1] - W[i]);
    };
    const double W_anchor = W_of_t(t_anchor);
    auto t_of_W = [&](double w) {
        w = w - Wtot * std::floor(w / Wtot);
        auto it = std::upper_bound(W.begin(), W.end(), w);
        int i = std::max(1, int(it - W.begin()));
        i = std::min(i, D);
        double fr = (w - W[i - 1]) / std::max(W[i] - W[i - 1], 1e-300);
        return (i - 1 + fr) / D;
    };

    std::vector<double> tb(Nb);
    for (int i = 0; i < Nb; ++i) tb[i] = t_of_W(W_anchor + double(i) * Wtot / Nb);
    // sort into increasing parameter order so the loop follows the curve
    std::sort(tb.begin(), tb.end());

    Mesh mesh;
    mesh.n_boundary = Nb;
    mesh.boundary_param = tb;
    mesh.h_requested = h_max;

    const Vec2 c = curve.star_center;
    std::vector<Vec2> bpos(Nb);
    std::vector<double> radius(Nb), lsize(Nb);
    for (int i = 0; i < Nb; ++i) {
        bpos[i] = curve.point(tb[i]);
        radius[i] = (bpos[i] - c).norm();
        if (radius[i] < 1e-12) throw Error("star center touches the boundary");
        double x = tb[i] * D;
        int k = std::min(int(x), D - 1);
        lsize[i] = std::min(sigma[k], sigma[k + 1]);
    }

    // per-spoke radial ladders: first gap matches the local boundary size,
    // gaps grow geometrically toward the interior. The growth must stay slow
    // enough that at depth d the radial size is a small fraction of d, or
    // interpolation of boundary-concentrated fields hits an O(1) floor.
    const double ratio = 1.15;
    std::vector<std::vector<double>> profile(Nb);  // cumulative depth, 0 -> 1
    int M = 2;
    for (int i = 0; i < Nb; ++i) {
        double g0 = std::min(0.5, lsize[i] / radius[i]);
        double gmax = std::min(0.35, h_max / radius[i]);
        double g = g0, cum = 0;
        std::vector<double> depth{0.0};
        while (cum < 1.0) {
            cum += std::min(g, gmax);
            depth.push_back(cum);
            g *= ratio;
        }
        for (auto& d : depth) d /= cum;
        profile[i] = std::move(depth);
        M = std::max(M, int(profile[i].size()) - 1);
    }

    // resample every spoke's depth profile to the common ring count; this
    // keeps ring fractions varying smoothly between spokes whose natural
    // ladder lengths differ (only ever refining, never coarsening)
    std::vector<std::vector<double>> frac(M, std::vector<double>(Nb));  // frac[k][i], ring k=0 is boundary
    for (int i = 0; i < Nb; ++i) {
        const auto& dep = profile[i];
        const int Ki = int(dep.size()) - 1;
        for (int k = 0; k < M; ++k) {
            double s = double(k) * Ki / M;
            int j = std::min(int(s), Ki - 1);
            double fr = s - j;
            frac[k][i] = 1.0 - (dep[j] + fr * (dep[j + 1] - dep[j]));
        }
    }
    for (int pass = 0; pass < 2; ++pass) {
        for (int k = 1; k < M; ++k) {
            std::vector<double>& f = frac[k];
            std::vector<double> s(Nb);
            for (int i = 0; i < Nb; ++i)
                s[i] = 0.25 * f[(i + Nb - 1) % Nb] + 0.5 * f[i] + 0.25 * f[(i + 1) % Nb];
            f.swap(s);
        }
    }

    // nodes: boundary ring first, then interior rings, center last
    mesh.nodes.reserve(size_t(M) * Nb + 1);
    for (int i = 0; i < Nb; ++i) mesh.nodes.push_back(bpos[i]);
    for (int k = 1; k < M; ++k)
        for (int i = 0; i < Nb; ++i) mesh.nodes.push_back(c + frac[k][i] * (bpos[i] - c));
    mesh.nodes.push_back(c);
    const int center = mesh.n_nodes() - 1;

    auto ring_id = [&](int k, int i) { return k * Nb + ((i % Nb + Nb) % Nb); };
    for (int k = 0; k + 1 < M; ++k) {
        for (int i = 0; i < Nb; ++i) {
            int A = ring_id(k, i), B = ring_id(k, i + 1);
            int Cn = ring_id(k + 1, i + 1), Dn = ring_id(k + 1, i);
            mesh.triangles.push_back({A, B, Dn});
            mesh.triangles.push_back({B, Cn, Dn});
        }
    }
    for (int i = 0; i < Nb; ++i) mesh.triangles.push_back({ring_id(M - 1, i), ring_id(M - 1, i + 1), center});

    // characteristic size = longest edge
    double hmax = 0;
    for (const auto& tr : mesh.triangles)
        for (int e = 0; e < 3; ++e)
            hmax = std::max(hmax, (mesh.nodes[tr[e]] - mesh.nodes[tr[(e + 1) % 3]]).norm());
    mesh.h_max_edge = hmax;

    mesh.build_search_structures();
    validate_mesh(mesh, curve);
    return mesh;
}

void validate_mesh(const Mesh& mesh, const BoundaryCurve& curve) {
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (mesh.triangle_area(t) <= 0)
            throw Error("mesh invariant: nonpositive triangle area at t=" + std::to_string(t));
    }
    if (mesh.n_boundary < 3) throw Error("mesh invariant: boundary loop too short");
    for (int i = 0; i < mesh.n_boundary; ++i) {
        double d = (mesh.nodes[i] - curve.point(mesh.boundary_param[i])).norm();
        if (d > 1e-10)
            throw Error("mesh invariant: boundary node off the curve by " + std::to_string(d));
        int j = (i + 1) % mesh.n_boundary;
        double dt = wrap_unit(mesh.boundary_param[j] - mesh.boundary_param[i] + 1e-15);
        if (i + 1 < mesh.n_boundary && dt <= 0)
            throw Error("mesh invariant: boundary loop not monotone in the curve parameter");
    }
}

// ---------------------------------------------------------------------------
// critical points of a|_{boundary}

CriticalPointReport boundary_critical_points(const WeightField& a, const BoundaryCurve& curve,
                                             double tol, int grid) {
    CriticalPointReport rep;
    auto deriv = [&](double t) { return a.grad(curve.point(t)).dot(curve.tangent(t)); };

    std::vector<double> d(grid);
    double dmax = 0, speed_max = 0;
    for (int i = 0; i < grid; ++i) {
        double t = double(i) / grid;
        d[i] = deriv(t);
        dmax = std::max(dmax, std::abs(d[i]));
        speed_max = std::max(speed_max, curve.speed(t));
    }
    if (dmax < 1e-14) {
        rep.degenerate = true;
        rep.plateaus.push_back({0.0, 1.0});
        return rep;
    }

    const double plateau_tol = 1e-9 * dmax;
    std::vector<bool> flat(grid);
    for (int i = 0; i < grid; ++i) flat[i] = std::abs(d[i]) < plateau_tol;

    // plateaus: runs of >= 3 consecutive near-zero samples
    {
        int i = 0;
        while (i < grid) {
            if (!flat[i]) {
                ++i;
                continue;
            }
            int j = i;
            while (j < grid && flat[j]) ++j;
            if (j - i >= 3) rep.plateaus.push_back({double(i) / grid, double(j) / grid});
            i = j;
        }
    }
    auto in_plateau = [&](double t) {
        for (const auto& [lo, hi] : rep.plateaus)
            if (t >= lo - 1e-12 && t <= hi + 1e-12) return true;
        return false;
    };

    // consecutive non-flat samples; isolated near-zero samples (exact zeros on
    // the grid) are bridged, plateaus are not
    std::vector<int> live;
    for (int i = 0; i < grid; ++i)
        if (!flat[i]) live.push_back(i);
    for (size_t k = 0; k < live.size(); ++k) {
        int i = live[k];
        int j = live[(k + 1) % live.size()];
        int span = (j - i + grid) % grid;
        if (span == 0 || span >= 3) continue;  // plateau or wrap-around degeneracy
        if ((d[i] > 0) == (d[j] > 0)) continue;
        double lo = double(i) / grid, hi = double(i + span) / grid;
        double dlo = d[i];
        // bisect until the point position is resolved to tol
        for (int it = 0; it < 200 && (hi - lo) * speed_max > 0.25 * tol; ++it) {
            double mid = 0.5 * (lo + hi);
            double dm = deriv(mid);
            if ((dm > 0) == (dlo > 0)) {
                lo = mid;
                dlo = dm;
            } else {
                hi = mid;
            }
        }
        double ts = wrap_unit(0.5 * (lo + hi));
        if (in_plateau(ts)) continue;
        CriticalPoint cp;
        cp.t = ts;
        cp.xi = curve.point(ts);
        if (dlo < 0) {  // decreasing -> increasing: minimum
            cp.kind = CritKind::Minimum;
            cp.degree_sign = +1;
        } else {
            cp.kind = CritKind::Maximum;
            cp.degree_sign = -1;
        }
        rep.stable.push_back(cp);
    }
    std::sort(rep.stable.begin(), rep.stable.end(),
              [](const CriticalPoint& p, const CriticalPoint& q) { return p.t < q.t; });
    return rep;
}

} // namespace steklab
