#ifndef STEKLAB_SOLVER_HPP
#define STEKLAB_SOLVER_HPP

#include "steklab/fem.hpp"

#include <string>
#include <vector>

namespace steklab {

// Discrete problem K u = lambda * N(u), N_i(u) = B^a_ii sinh(u_i) on the
// boundary. The Jacobian is K - lambda * diag(B^a cosh u).
struct SteklovProblem {
    const Mesh* mesh = nullptr;
    const SpMat* K = nullptr;
    const BoundaryMass* B = nullptr;
};

struct NewtonOptions {
    double tol = 1e-11;        // relative residual tolerance
    int max_iterations = 40;
    double backtrack = 0.5;    // step shrink factor
    double min_step = 1.0 / 1024.0;
    double guard = 700.0;      // |u| overflow guard for exp
};

struct NewtonResult {
    Field u;
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;
    double tail_ratio = 0;  // last residual over the previous one
    std::string message;
};

Vec nonlinear_boundary_load(const SteklovProblem& p, const Vec& u);  // N(u), full length
Vec nonlinear_residual(const SteklovProblem& p, double lambda, const Vec& u);

// Damped Newton with residual backtracking. When deflate is nonempty the
// residual is multiplied by prod_k (1 + theta^2/|u - w_k|_a^2) and the
// rank-one Jacobian correction is applied via the Sherman-Morrison formula.
NewtonResult newton_solve(const SteklovProblem& p, double lambda, const Field& u0,
                          const NewtonOptions& opts = {},
                          const std::vector<Field>* deflate = nullptr);

struct BranchPoint {
    double lambda = 0;
    Field u;
    int iterations = 0;
    bool scheduled = true;  // false for bisection fill-in points
};

struct Branch {
    std::vector<BranchPoint> points;  // lambda strictly decreasing
    std::string seed_description;
    bool terminated_early = false;
    std::string message;
};

// Natural continuation over a strictly decreasing lambda schedule. Failed
// steps are bisected (geometric midpoints) up to 6 levels; an unresolved
// failure terminates the branch with a report. Solutions closer than
// deflation_threshold (in the equivalent norm) to any deflate entry are
// rejected and re-solved with deflation.
Branch continuation(const SteklovProblem& p, const Field& u0, const std::string& seed_description,
                    const std::vector<double>& schedule, const NewtonOptions& opts = {},
                    const std::vector<Field>* deflate = nullptr,
                    double deflation_threshold = 1e-3);

// Equivalent norm |v|_a^2 = v^T K v + (int_b a v)^2.
double equivalent_norm(const SteklovProblem& p, const Vec& v);

} // namespace steklab

#endif
