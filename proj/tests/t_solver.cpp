#include "steklab/asymptotics.hpp"
#include "steklab/solver.hpp"
#include "steklab/spectrum.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace steklab;

TEST_SUITE_BEGIN("solver");

namespace {

struct DiskProblem {
    BoundaryCurve curve = circle_curve(Vec2(0, 0), 1.0);
    WeightField a = unit_weight();
    Mesh mesh;
    SpMat K;
    BoundaryMass B;
    DiskProblem(double h, std::vector<GradingPoint> grading = {})
        : mesh(build_mesh(circle_curve(Vec2(0, 0), 1.0), h, grading)) {
        K = assemble_stiffness(mesh, a);
        B = assemble_boundary_mass(mesh, a);
    }
    SteklovProblem problem() { return {&mesh, &K, &B}; }
};

std::vector<double> geometric_schedule(double from, double to, double factor) {
    std::vector<double> s;
    for (double l = from; l > to * (1 + 1e-9); l *= factor) s.push_back(l);
    s.push_back(to);
    return s;
}

} // namespace

TEST_CASE("zero guess solves in one step for any lambda") {
    DiskProblem d(0.1);
    for (double lam : {0.01, 0.5, 2.0}) {
        NewtonResult r = newton_solve(d.problem(), lam, Field::zero(d.mesh));
        CHECK(r.converged);
        CHECK(r.iterations <= 1);
        CHECK(r.u.values.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("odd nonlinearity: iterates from -u0 are the exact negation") {
    DiskProblem d(0.1);
    Field u0 = Field::zero(d.mesh);
    for (int i = 0; i < d.mesh.n_nodes(); ++i)
        u0.values[i] = 0.8 * d.mesh.nodes[i].x() + 0.3 * d.mesh.nodes[i].y();
    Field m0(d.mesh, -u0.values);
    NewtonResult rp = newton_solve(d.problem(), 0.7, u0);
    NewtonResult rm = newton_solve(d.problem(), 0.7, m0);
    REQUIRE(rp.converged);
    REQUIRE(rm.converged);
    CHECK(rp.iterations == rm.iterations);
    for (int i = 0; i < d.mesh.n_nodes(); ++i) CHECK(rm.u.values[i] == -rp.u.values[i]);
}

TEST_CASE("antipodal ansatz at lambda 0.05 converges fast with a quadratic tail") {
    DiskProblem d(0.1, {{Vec2(1, 0), 1.2e-3}, {Vec2(-1, 0), 1.2e-3}});
    NeumannSolver ns(d.mesh, d.K, d.B);
    AnsatzConfig cfg{0.0, 0.5, 2.0, 2.0, 0.05};
    Ansatz an = build_ansatz(cfg, d.mesh, d.curve, d.a, d.B, ns);
    NewtonResult r = newton_solve(d.problem(), 0.05, an.U);
    REQUIRE(r.converged);
    // the globalized line search spends a few extra damped steps crossing the
    // flat conformal valley of the disk before the quadratic phase kicks in
    CHECK(r.iterations <= 20);
    CHECK((r.iterations <= 2 || r.tail_ratio <= 0.1));
}

TEST_CASE("newton stays near an exact blow-up solution") {
    oracle::DiskBlowup exact(1e-2);
    double lam = exact.lambda();
    DiskProblem d(0.1, {{Vec2(1, 0), lam / 8}, {Vec2(-1, 0), lam / 8}});
    Field u0 = Field::zero(d.mesh);
    for (int i = 0; i < d.mesh.n_nodes(); ++i) u0.values[i] = exact(d.mesh.nodes[i]);
    NewtonResult r = newton_solve(d.problem(), lam, u0);
    REQUIRE(r.converged);
    // the discrete solution sits within discretization distance of the oracle
    CHECK((r.u.values - u0.values).cwiseAbs().maxCoeff() < 1.0);
    // residual criterion is the relative one from the contract
    Vec F = nonlinear_residual(d.problem(), lam, r.u.values);
    double scale = (d.K * r.u.values).norm() + lam * nonlinear_boundary_load(d.problem(), r.u.values).norm();
    CHECK(F.norm() <= 1e-11 * scale);
}

TEST_CASE("jacobian matches finite differences of the residual") {
    DiskProblem d(0.15);
    SteklovProblem p = d.problem();
    Rng rng(33);
    Vec u(d.mesh.n_nodes()), v(d.mesh.n_nodes());
    for (int i = 0; i < d.mesh.n_nodes(); ++i) {
        u[i] = rng.uniform(-1, 1);
        v[i] = rng.uniform(-1, 1);
    }
    const double lam = 0.3;
    // J v by hand: K v - lam * diag(B cosh u) v on the boundary
    Vec Jv = d.K * v;
    for (int i = 0; i < d.mesh.n_boundary; ++i)
        Jv[i] -= lam * d.B.weighted[i] * std::cosh(u[i]) * v[i];
    for (double eps : {1e-5, 1e-6}) {
        Vec fd = (nonlinear_residual(p, lam, u + eps * v) - nonlinear_residual(p, lam, u - eps * v)) /
                 (2 * eps);
        CHECK((fd - Jv).norm() <= 1e-3 * Jv.norm());
    }
}

TEST_CASE("trivial branch stays at zero over any schedule") {
    DiskProblem d(0.15);
    Branch br = continuation(d.problem(), Field::zero(d.mesh), "zero",
                             geometric_schedule(0.5, 0.01, 0.7));
    CHECK_FALSE(br.terminated_early);
    for (const auto& bp : br.points) CHECK(bp.u.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nontrivial branch emanates just below the first disk eigenvalue") {
    DiskProblem d(0.05);
    SteklovSpectrum sp = steklov_spectrum(d.mesh, d.K, d.B, 2);
    double lam1 = sp.eigenvalues[1];  // = 1 up to O(h)
    CHECK(lam1 == doctest::Approx(1.0).epsilon(0.02));
    Field seed = sp.eigenfields[1];
    seed.values *= 0.5;
    Branch br = continuation(d.problem(), seed, "eigen:1",
                             geometric_schedule(0.98 * lam1, 0.80 * lam1, 0.99));
    REQUIRE_FALSE(br.terminated_early);
    // amplitude grows continuously from zero as lambda decreases below lam1
    std::vector<double> amps;
    for (const auto& bp : br.points)
        if (bp.scheduled) amps.push_back(equivalent_norm(d.problem(), bp.u.values));
    REQUIRE(amps.size() >= 3);
    CHECK(amps.front() > 1e-3);            // nontrivial already at the first step
    CHECK(amps.front() < 0.8 * amps.back());  // growing away from the bifurcation
    for (size_t i = 1; i < amps.size(); ++i) CHECK(amps[i] > amps[i - 1]);
}

TEST_CASE("continuation reruns are identical") {
    DiskProblem d(0.1, {{Vec2(1, 0), 2e-3}, {Vec2(-1, 0), 2e-3}});
    NeumannSolver ns(d.mesh, d.K, d.B);
    AnsatzConfig cfg{0.0, 0.5, 2.0, 2.0, 0.05};
    Ansatz an = build_ansatz(cfg, d.mesh, d.curve, d.a, d.B, ns);
    auto schedule = geometric_schedule(0.05, 0.01, 0.7);
    Branch b1 = continuation(d.problem(), an.U, "ansatz", schedule);
    Branch b2 = continuation(d.problem(), an.U, "ansatz", schedule);
    REQUIRE(b1.points.size() == b2.points.size());
    for (size_t i = 0; i < b1.points.size(); ++i)
        CHECK((b1.points[i].u.values - b2.points[i].u.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("converged solutions satisfy the weighted compatibility") {
    DiskProblem d(0.1, {{Vec2(1, 0), 1.2e-3}, {Vec2(-1, 0), 1.2e-3}});
    NeumannSolver ns(d.mesh, d.K, d.B);
    AnsatzConfig cfg{0.0, 0.5, 2.0, 2.0, 0.05};
    Ansatz an = build_ansatz(cfg, d.mesh, d.curve, d.a, d.B, ns);
    Branch br = continuation(d.problem(), an.U, "ansatz", geometric_schedule(0.05, 0.01, 0.85));
    REQUIRE_FALSE(br.terminated_early);
    for (const auto& bp : br.points) {
        double total = 0;
        for (int i = 0; i < d.mesh.n_boundary; ++i)
            total += d.B.weighted[i] * std::sinh(bp.u.values[i]);
        double scale = (d.K * bp.u.values).norm() + 1e-300;
        CHECK(std::abs(total) * bp.lambda <= 1e-8 * scale);
    }
}

TEST_CASE("sup norm grows like 2 log(1/lambda) along the blow-up branch") {
    double lam_end = 1e-2;
    DiskProblem d(0.1, {{Vec2(1, 0), lam_end / 2}, {Vec2(-1, 0), lam_end / 2}});
    NeumannSolver ns(d.mesh, d.K, d.B);
    AnsatzConfig cfg{0.0, 0.5, 2.0, 2.0, 0.1};
    Ansatz an = build_ansatz(cfg, d.mesh, d.curve, d.a, d.B, ns);
    Branch br =
        continuation(d.problem(), an.U, "ansatz", geometric_schedule(0.1, lam_end, 0.7943));
    REQUIRE_FALSE(br.terminated_early);
    for (const auto& bp : br.points) {
        if (bp.lambda > 1.01e-2) continue;
        double ratio = bp.u.values.cwiseAbs().maxCoeff() / (2 * std::log(1.0 / bp.lambda));
        CHECK(ratio >= 0.5);
        CHECK(ratio <= 1.5);
    }
}

TEST_CASE("deflation rejects a known solution and finds a distinct one") {
    DiskProblem d(0.07);
    SteklovSpectrum sp = steklov_spectrum(d.mesh, d.K, d.B, 2);
    double lam = 0.9 * sp.eigenvalues[1];
    Field seed = sp.eigenfields[1];
    seed.values *= 1.0;
    NewtonResult first = newton_solve(d.problem(), lam, seed);
    REQUIRE(first.converged);
    REQUIRE(equivalent_norm(d.problem(), first.u.values) > 1e-3);
    std::vector<Field> known{first.u};
    NewtonOptions deep;
    deep.max_iterations = 200;  // deflated landscapes take long excursions
    NewtonResult second = newton_solve(d.problem(), lam, seed, deep, &known);
    REQUIRE(second.converged);
    double dist = equivalent_norm(d.problem(), second.u.values - first.u.values);
    CHECK(dist > 1e-3);
}

TEST_CASE("increasing schedules are rejected") {
    DiskProblem d(0.2);
    CHECK_THROWS_AS(continuation(d.problem(), Field::zero(d.mesh), "zero", {0.1, 0.2}), Error);
}

TEST_SUITE_END();
