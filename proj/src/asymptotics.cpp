#include "steklab/asymptotics.hpp"

#include <cmath>

namespace steklab {

double bubble_boundary_residual(const Bubble& b, const std::vector<double>& x1_samples) {
    double worst = 0;
    for (double x : x1_samples) {
        double lhs = b.normal_derivative_on_axis(x);
        double rhs = std::exp(b(x, 0.0));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

KernelResidual kernel_residual(const KernelPair& k, int n, double extent, double step) {
    KernelResidual out;
    // boundary identity on x2 = 0
    for (int i = 0; i <= n; ++i) {
        double x1 = -extent + 2 * extent * double(i) / n;
        double denom = x1 * x1 + k.mu * k.mu;
        double coeff = 2 * k.mu / denom;
        // analytic -d/dx2 of z0 and z1 at x2 = 0
        double dz0 = 2 * k.mu * (x1 * x1 - k.mu * k.mu) / (denom * denom);
        double dz1 = -4 * x1 * k.mu / (denom * denom);
        out.boundary_max_z0 = std::max(out.boundary_max_z0, std::abs(dz0 - coeff * k.z0(x1, 0)));
        out.boundary_max_z1 = std::max(out.boundary_max_z1, std::abs(dz1 - coeff * k.z1(x1, 0)));
    }
    // interior 5-point Laplacian
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            double x1 = -extent + 2 * extent * double(i) / n;
            double x2 = extent * double(j) / n;
            auto lap = [&](auto f) {
                return (f(x1 + step, x2) + f(x1 - step, x2) + f(x1, x2 + step) + f(x1, x2 - step) -
                        4 * f(x1, x2)) /
                       (step * step);
            };
            out.laplacian_max_z0 = std::max(
                out.laplacian_max_z0, std::abs(lap([&](double a, double b) { return k.z0(a, b); })));
            out.laplacian_max_z1 = std::max(
                out.laplacian_max_z1, std::abs(lap([&](double a, double b) { return k.z1(a, b); })));
        }
    }
    return out;
}

namespace {

// u_j(x) = log(2 mu) - log|x - c|^2 with center c = xi + lambda mu nu
struct BubbleLog {
    Vec2 c;
    double mu;
    double operator()(const Vec2& x) const {
        return std::log(2 * mu) - std::log((x - c).squaredNorm());
    }
    Vec2 grad(const Vec2& x) const { return -2 * (x - c) / (x - c).squaredNorm(); }
};

Field nodal_field(const Mesh& mesh, const BubbleLog& u) {
    Field f = Field::zero(mesh);
    const int n = mesh.n_nodes();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) f.values[i] = u(mesh.nodes[i]);
    return f;
}

} // namespace

Correction correction_field(const Mesh& mesh, const BoundaryCurve& curve, const WeightField& a,
                            const BoundaryMass& B, const NeumannSolver& solver, double t_xi,
                            double mu, double lambda, bool weighted_normalization) {
    if (mu <= 0 || lambda <= 0) throw Error("bubble parameters must be positive");
    const Vec2 xi = curve.point(t_xi);
    const Vec2 nu = curve.normal(t_xi);
    BubbleLog ub{xi + lambda * mu * nu, mu};
    if (mesh.contains(ub.c))
        throw Error("bubble center must lie outside the closed domain (lambda*mu too large or normal inverted)");
    // resolvability: at least 8 boundary edges across the bubble width
    {
        int covered = 0;
        for (int i = 0; i < mesh.n_boundary; ++i)
            if ((mesh.nodes[i] - xi).norm() <= lambda * mu) ++covered;
        if (covered < 8)
            throw Error("under-resolved bubble: only " + std::to_string(covered) +
                        " boundary nodes across width " + std::to_string(lambda * mu));
    }

    const int n = mesh.n_nodes();
    const int nb = mesh.n_boundary;

    // interior load f_i = int grad(a).grad(u) phi_i by edge-midpoint quadrature
    Vec load = Vec::Zero(n);
    {
        const int nt = mesh.n_triangles();
        std::vector<std::array<double, 3>> local(nt);
#pragma omp parallel for schedule(static)
        for (int t = 0; t < nt; ++t) {
            const auto& tr = mesh.triangles[t];
            const Vec2& p0 = mesh.nodes[tr[0]];
            const Vec2& p1 = mesh.nodes[tr[1]];
            const Vec2& p2 = mesh.nodes[tr[2]];
            double w = mesh.triangle_area(t) / 3.0;
            Vec2 m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
            double f01 = a.grad(m01).dot(ub.grad(m01));
            double f12 = a.grad(m12).dot(ub.grad(m12));
            double f20 = a.grad(m20).dot(ub.grad(m20));
            // hat functions take value 1/2 at the midpoints of their two edges
            local[t] = {w * 0.5 * (f01 + f20), w * 0.5 * (f01 + f12), w * 0.5 * (f12 + f20)};
        }
        for (int t = 0; t < nt; ++t)
            for (int k = 0; k < 3; ++k) load[mesh.triangles[t][k]] += local[t][k];
    }

    // boundary flux data -d_nu u + lambda e^u, then subtract the discrete
    // weighted average of the whole load so compatibility is exact
    for (int i = 0; i < nb; ++i) {
        const Vec2& x = mesh.nodes[i];
        Vec2 nrm = curve.normal(mesh.boundary_param[i]);
        double g = -ub.grad(x).dot(nrm) + lambda * std::exp(ub(x));
        load[i] += B.weighted[i] * g;
    }
    double cbar = load.sum() / B.weighted.sum();
    load.head(nb) -= cbar * B.weighted;

    Correction corr;
    corr.center = ub.c;
    corr.cbar = cbar;
    corr.H = solver.solve_load(load);

    // normalization int_b H = -int_b u (unweighted boundary integral unless
    // the weighted variant is requested)
    const Vec& w = weighted_normalization ? B.weighted : B.unweighted;
    double target = 0, current = 0;
    for (int i = 0; i < nb; ++i) {
        target -= w[i] * ub(mesh.nodes[i]);
        current += w[i] * corr.H.values[i];
    }
    corr.normalization_shift = (target - current) / w.sum();
    corr.H.values.array() += corr.normalization_shift;
    return corr;
}

Ansatz build_ansatz(const AnsatzConfig& cfg, const Mesh& mesh, const BoundaryCurve& curve,
                    const WeightField& a, const BoundaryMass& B, const NeumannSolver& solver,
                    bool weighted_normalization) {
    Ansatz an;
    an.cfg = cfg;
    an.xi1 = curve.point(cfg.t1);
    an.xi2 = curve.point(cfg.t2);
    an.nu1 = curve.normal(cfg.t1);
    an.nu2 = curve.normal(cfg.t2);
    an.corr1 = correction_field(mesh, curve, a, B, solver, cfg.t1, cfg.mu1, cfg.lambda,
                                weighted_normalization);
    an.corr2 = correction_field(mesh, curve, a, B, solver, cfg.t2, cfg.mu2, cfg.lambda,
                                weighted_normalization);
    BubbleLog u1{an.corr1.center, cfg.mu1};
    BubbleLog u2{an.corr2.center, cfg.mu2};
    an.u1 = nodal_field(mesh, u1);
    an.u2 = nodal_field(mesh, u2);
    an.U = Field::zero(mesh);
    const int n = mesh.n_nodes();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        an.U.values[i] = (an.u1.values[i] + an.corr1.H.values[i]) -
                         (an.u2.values[i] + an.corr2.H.values[i]);
    return an;
}

double WeightedNorms::star(const std::vector<double>& values, const std::vector<Vec2>& pts) const {
    double sup = 0;
    for (size_t i = 0; i < values.size(); ++i)
        sup = std::max(sup, std::abs(values[i]) / star_weight(pts[i]));
    return sup;
}

double WeightedNorms::dstar(const std::vector<double>& values, const std::vector<Vec2>& pts) const {
    double sup = 0;
    for (size_t i = 0; i < values.size(); ++i)
        sup = std::max(sup, std::abs(values[i]) / dstar_weight(pts[i]));
    return sup;
}

WeightedNorms make_scaled_norms(const Ansatz& ansatz, double sigma) {
    WeightedNorms norms;
    norms.sigma = sigma;
    norms.xi1p = ansatz.xi1 / ansatz.cfg.lambda;
    norms.xi2p = ansatz.xi2 / ansatz.cfg.lambda;
    return norms;
}

AnsatzResidual ansatz_residual(const Ansatz& an, const Mesh& mesh, const BoundaryMass& B,
                               const WeightedNorms& norms) {
    (void)B;
    const double lam = an.cfg.lambda;
    const int nb = mesh.n_boundary;
    AnsatzResidual out;
    out.R = Vec::Zero(nb);
    out.W = Vec::Zero(nb);
    const double core_radius = std::sqrt(lam);  // physical radius of the scaled lambda^{-1/2} core
    double r_star = 0, theta_core = 0, theta_global = 0;

    // The normal derivative of U on the boundary is known in closed form from
    // the flux data the corrections were built with: the bubble terms cancel,
    //   d_nu U = lambda e^{u1} - cbar1 - lambda e^{u2} + cbar2.
    for (int i = 0; i < nb; ++i) {
        const Vec2& x = mesh.nodes[i];
        double Ui = an.U.values[i];
        if (std::abs(Ui) > 700)
            throw Error("cosh/sinh overflow guard tripped at boundary node " + std::to_string(i));
        double e1 = std::exp(an.u1.values[i]);
        double e2 = std::exp(an.u2.values[i]);
        double dVdnu = lam * (lam * e1 - an.corr1.cbar - lam * e2 + an.corr2.cbar);
        double R = -(dVdnu - 2 * lam * lam * std::sinh(Ui));
        out.R[i] = R;

        double W = 2 * lam * lam * std::cosh(Ui);
        out.W[i] = W;
        double denom = 2 * an.cfg.mu1 * lam * lam / (x - an.corr1.center).squaredNorm() +
                       2 * an.cfg.mu2 * lam * lam / (x - an.corr2.center).squaredNorm();
        double theta = std::abs(W / denom - 1.0);
        theta_global = std::max(theta_global, theta);
        double dist = std::min((x - an.xi1).norm(), (x - an.xi2).norm());
        if (dist <= core_radius) theta_core = std::max(theta_core, theta);

        Vec2 y = x / lam;
        r_star = std::max(r_star, std::abs(R) / norms.star_weight(y));
    }
    out.r_star = r_star;
    out.theta_sup = theta_core;
    out.theta_sup_global = theta_global;
    return out;
}

} // namespace steklab
