#ifndef STEKLAB_ASYMPTOTICS_HPP
#define STEKLAB_ASYMPTOTICS_HPP

#include "steklab/fem.hpp"
#include "steklab/greens.hpp"

namespace steklab {

// Half-plane solution w(x) = log(2 mu / ((x1-t)^2 + (x2+mu)^2)) of the
// exponential flux problem on {x2 > 0}; outward normal is -e2.
struct Bubble {
    double t = 0;
    double mu = 1;
    double operator()(double x1, double x2) const {
        double dx = x1 - t, dy = x2 + mu;
        return std::log(2 * mu / (dx * dx + dy * dy));
    }
    // analytic -d/dx2 at x2 = 0 (the outward normal derivative)
    double normal_derivative_on_axis(double x1) const {
        double dx = x1 - t;
        return 2 * mu / (dx * dx + mu * mu);
    }
};

// max over samples of | -d_{x2} w(x1,0) - exp(w(x1,0)) |
double bubble_boundary_residual(const Bubble& b, const std::vector<double>& x1_samples);

// Bounded kernel of the linearized half-plane problem.
struct KernelPair {
    double mu = 1;
    double z0(double x1, double x2) const {
        double dy = x2 + mu;
        return 1 - 2 * mu * dy / (x1 * x1 + dy * dy);
    }
    double z1(double x1, double x2) const {
        double dy = x2 + mu;
        return -2 * x1 / (x1 * x1 + dy * dy);
    }
};

struct KernelResidual {
    double boundary_max_z0 = 0;
    double boundary_max_z1 = 0;
    double laplacian_max_z0 = 0;  // 5-point finite difference, O(step^2)
    double laplacian_max_z1 = 0;
};

// Boundary identity |-d_{x2} z_i - (2 mu/(x1^2+mu^2)) z_i| on x2=0 samples and
// interior 5-point Laplacian residual on an n x n grid over
// [-extent, extent] x (0, extent].
KernelResidual kernel_residual(const KernelPair& k, int n, double extent, double step);

struct AnsatzConfig {
    double t1 = 0, t2 = 0;     // curve parameters of the two boundary points
    double mu1 = 1, mu2 = 1;
    double lambda = 0.1;
};

// H_j correction: solves -div(a grad H) = grad(a).grad(u_j) weakly with the
// flux data -d_nu u_j + lambda e^{u_j} minus its discrete weighted average
// (compatibility exact by construction), then shifts to the normalization
// int_b H = -int_b u_j (unweighted by default).
struct Correction {
    Field H;
    double cbar = 0;                 // subtracted flux constant (~ lambda int a e^u / int a)
    double normalization_shift = 0;
    Vec2 center;                     // bubble center xi + lambda mu nu (outside the domain)
};

Correction correction_field(const Mesh& mesh, const BoundaryCurve& curve, const WeightField& a,
                            const BoundaryMass& B, const NeumannSolver& solver, double t_xi,
                            double mu, double lambda, bool weighted_normalization = false);

struct Ansatz {
    AnsatzConfig cfg;
    Field U;            // [u1 + H1] - [u2 + H2]
    Field u1, u2;       // closed-form bubble logs on the mesh
    Correction corr1, corr2;
    Vec2 xi1, xi2, nu1, nu2;
};

Ansatz build_ansatz(const AnsatzConfig& cfg, const Mesh& mesh, const BoundaryCurve& curve,
                    const WeightField& a, const BoundaryMass& B, const NeumannSolver& solver,
                    bool weighted_normalization = false);

// Weighted sup norms of the scaled problem; centers are xi_j / lambda.
struct WeightedNorms {
    double sigma = 0.1;
    Vec2 xi1p, xi2p;

    double star_weight(const Vec2& y) const {
        return std::pow(1 + (y - xi1p).norm(), -1 - sigma) +
               std::pow(1 + (y - xi2p).norm(), -1 - sigma);
    }
    double dstar_weight(const Vec2& y) const {
        return std::pow(1 + (y - xi1p).norm(), -2 - sigma) +
               std::pow(1 + (y - xi2p).norm(), -2 - sigma);
    }
    double star(const std::vector<double>& values, const std::vector<Vec2>& pts) const;
    double dstar(const std::vector<double>& values, const std::vector<Vec2>& pts) const;
};

struct AnsatzResidual {
    Vec R;            // boundary residual in scaled variables, per boundary node
    double r_star = 0;
    Vec W;            // 2 lambda^2 cosh V on the boundary
    // theta = W / (sum_j 2 mu_j / |y - xi'_j - mu_j nu'_j|^2) - 1. Its bound
    // carries a lambda*|y - xi'| growth term, so the decay shows on cores
    // |y - xi'_j| <= lambda^{-1/2}; the global sup stays O(1) by design.
    double theta_sup = 0;         // over the cores
    double theta_sup_global = 0;  // over the whole boundary
};

AnsatzResidual ansatz_residual(const Ansatz& ansatz, const Mesh& mesh, const BoundaryMass& B,
                               const WeightedNorms& norms);

WeightedNorms make_scaled_norms(const Ansatz& ansatz, double sigma);

} // namespace steklab

#endif
