#include "steklab/geometry.hpp"
#include "steklab/numerics.hpp"

#include <doctest.h>

#include <cmath>

using namespace steklab;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("curve invariants for the built-in families") {
    for (auto& curve : {circle_curve(Vec2(0, 0), 1.0), ellipse_curve(Vec2(1, 2), 2.0, 1.0),
                        star_curve(Vec2(0, 0), 1.0, 0.15, 5)}) {
        CHECK_NOTHROW(curve.validate());
        // outward normal: moving a bit along it must leave the enclosed region
        Vec2 p = curve.point(0.37);
        Vec2 n = curve.normal(0.37);
        CHECK(n.norm() == doctest::Approx(1.0));
        CHECK((p + 1e-3 * n - curve.star_center).norm() > (p - curve.star_center).norm());
    }
}

TEST_CASE("spline import reproduces a circle closely") {
    std::vector<Vec2> pts;
    const int m = 48;
    for (int i = 0; i < m; ++i) {
        double th = 2 * kPi * i / m;
        pts.push_back(Vec2(std::cos(th), std::sin(th)));
    }
    BoundaryCurve sp = spline_curve(pts);
    CHECK_NOTHROW(sp.validate());
    for (double t : {0.11, 0.43, 0.77})
        CHECK(sp.point(t).norm() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("unit disk mesh: invariants and grading postcondition") {
    BoundaryCurve disk = circle_curve(Vec2(0, 0), 1.0);
    Mesh coarse = build_mesh(disk, 0.1);
    for (int t = 0; t < coarse.n_triangles(); ++t) CHECK(coarse.triangle_area(t) > 0);
    for (int i = 0; i < coarse.n_boundary; ++i) {
        double d = (coarse.nodes[i] - disk.point(coarse.boundary_param[i])).norm();
        CHECK(d <= 1e-10);
    }
    // boundary edges obey h_max
    for (int i = 0; i < coarse.n_boundary; ++i) CHECK(coarse.boundary_edge_length(i) <= 0.1 * 1.001);

    Mesh graded = build_mesh(disk, 0.1, {{Vec2(1, 0), 0.01}});
    for (int i = 0; i < graded.n_boundary; ++i) {
        Vec2 mid = 0.5 * (graded.nodes[i] + graded.nodes[(i + 1) % graded.n_boundary]);
        if ((mid - Vec2(1, 0)).norm() <= 3 * 0.01)
            CHECK(graded.boundary_edge_length(i) <= 0.01 * 1.05);
    }
}

TEST_CASE("halving h_max roughly quadruples the node count") {
    BoundaryCurve disk = circle_curve(Vec2(0, 0), 1.0);
    Mesh m1 = build_mesh(disk, 0.1);
    Mesh m2 = build_mesh(disk, 0.05);
    double ratio = double(m2.n_nodes()) / double(m1.n_nodes());
    CHECK(ratio > 4.0 * 0.7);
    CHECK(ratio < 4.0 * 1.3);
}

TEST_CASE("grading point outside the domain is rejected") {
    BoundaryCurve disk = circle_curve(Vec2(0, 0), 1.0);
    CHECK_THROWS_AS(build_mesh(disk, 0.1, {{Vec2(2.5, 0), 0.01}}), Error);
}

TEST_CASE("critical points: linear weight on an off-center circle") {
    BoundaryCurve circ = circle_curve(Vec2(2, 0), 1.0);
    WeightField a = axial_weight();
    CriticalPointReport rep = boundary_critical_points(a, circ);
    REQUIRE(rep.stable.size() == 2);
    CHECK_FALSE(rep.degenerate);
    // max of x1 at (3,0), min at (1,0)
    const CriticalPoint* mx = nullptr;
    const CriticalPoint* mn = nullptr;
    for (const auto& cp : rep.stable) {
        if (cp.kind == CritKind::Maximum) mx = &cp;
        if (cp.kind == CritKind::Minimum) mn = &cp;
    }
    REQUIRE(mx);
    REQUIRE(mn);
    CHECK((mx->xi - Vec2(3, 0)).norm() < 1e-8);
    CHECK((mn->xi - Vec2(1, 0)).norm() < 1e-8);
    CHECK(mx->degree_sign == -1);
    CHECK(mn->degree_sign == +1);
}

TEST_CASE("critical points: constant weight is degenerate") {
    BoundaryCurve circ = circle_curve(Vec2(2, 0), 1.0);
    CriticalPointReport rep = boundary_critical_points(unit_weight(), circ);
    CHECK(rep.stable.empty());
    CHECK(rep.degenerate);
}

TEST_CASE("critical points: a = x1 + x2 on the off-center circle") {
    BoundaryCurve circ = circle_curve(Vec2(2, 0), 1.0);
    WeightField a;
    a.value = [](Vec2 p) { return p.x() + p.y(); };
    a.grad = [](Vec2) { return Vec2(1, 1); };
    CriticalPointReport rep = boundary_critical_points(a, circ);
    REQUIRE(rep.stable.size() == 2);
    // extrema along the direction (1,1): angles pi/4 and 5pi/4
    std::vector<double> want{kPi / 4 / (2 * kPi), (5 * kPi / 4) / (2 * kPi)};
    std::sort(want.begin(), want.end());
    CHECK(rep.stable[0].t == doctest::Approx(want[0]).epsilon(1e-8));
    CHECK(rep.stable[1].t == doctest::Approx(want[1]).epsilon(1e-8));
}

TEST_CASE("derivative smallness and parity at the returned points") {
    BoundaryCurve star = star_curve(Vec2(0, 0), 1.0, 0.1, 3);
    WeightField a = axial_weight();
    double tol = 1e-10;
    CriticalPointReport rep = boundary_critical_points(a, star, tol);
    CHECK(rep.stable.size() % 2 == 0);
    double dmax = 0;
    for (int i = 0; i < 512; ++i) {
        double t = i / 512.0;
        dmax = std::max(dmax, std::abs(a.grad(star.point(t)).dot(star.tangent(t))));
    }
    for (const auto& cp : rep.stable) {
        double d = std::abs(a.grad(star.point(cp.t)).dot(star.tangent(cp.t)));
        CHECK(d <= 10 * tol * dmax);
    }
}

TEST_CASE("reparametrization shift leaves the critical set unchanged") {
    BoundaryCurve circ = circle_curve(Vec2(2, 0), 1.0);
    const double shift = 0.31;
    BoundaryCurve shifted;
    shifted.gamma = [circ, shift](double t) { return circ.point(t + shift); };
    shifted.dgamma = [circ, shift](double t) { return circ.tangent(t + shift); };
    shifted.star_center = circ.star_center;
    WeightField a = axial_weight();
    CriticalPointReport r1 = boundary_critical_points(a, circ);
    CriticalPointReport r2 = boundary_critical_points(a, shifted);
    REQUIRE(r1.stable.size() == r2.stable.size());
    for (const auto& cp : r1.stable) {
        double best = 1e300;
        for (const auto& cq : r2.stable) best = std::min(best, (cp.xi - cq.xi).norm());
        CHECK(best < 1e-8);
    }
}

TEST_CASE("weight bounds on the off-center circle") {
    BoundaryCurve circ = circle_curve(Vec2(2, 0), 1.0);
    auto [a0, a1] = weight_bounds_on(axial_weight(), circ);
    CHECK(a0 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(a1 == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("a genuine derivative plateau is flagged and excluded") {
    // weight constant on the left half of the unit circle, cubic on the right
    WeightField a;
    a.value = [](Vec2 p) { return 2.0 + (p.x() > 0 ? p.x() * p.x() * p.x() : 0.0); };
    a.grad = [](Vec2 p) { return Vec2(p.x() > 0 ? 3 * p.x() * p.x() : 0.0, 0.0); };
    BoundaryCurve circ = circle_curve(Vec2(0, 0), 1.0);
    CriticalPointReport rep = boundary_critical_points(a, circ);
    CHECK_FALSE(rep.degenerate);
    REQUIRE_FALSE(rep.plateaus.empty());
    // the flat arc covers the left half circle
    double plateau_len = 0;
    for (const auto& [lo, hi] : rep.plateaus) plateau_len += hi - lo;
    CHECK(plateau_len > 0.3);
    // the only sign change of the derivative is the maximum at (1,0)
    REQUIRE(rep.stable.size() == 1);
    CHECK(rep.stable[0].kind == CritKind::Maximum);
    CHECK((rep.stable[0].xi - Vec2(1, 0)).norm() < 1e-8);
}

TEST_SUITE_END();
