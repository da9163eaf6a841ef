#ifndef STEKLAB_FEM_HPP
#define STEKLAB_FEM_HPP

#include "steklab/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>

namespace steklab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Nodal piecewise-linear function on a mesh.
struct Field {
    const Mesh* mesh = nullptr;
    Vec values;

    Field() = default;
    Field(const Mesh& m, Vec v) : mesh(&m), values(std::move(v)) {}
    static Field zero(const Mesh& m) { return Field(m, Vec::Zero(m.n_nodes())); }

    double eval(const Vec2& p) const;           // throws outside the mesh
    Vec boundary_trace() const { return values.head(mesh->n_boundary); }
};

// Stiffness K_ij = int_Omega a grad(phi_i).grad(phi_j), 3-point midpoint
// quadrature for a. The OpenMP version computes per-element blocks in
// parallel and scatters them in fixed element order, so it is bitwise
// identical to the serial reference.
SpMat assemble_stiffness(const Mesh& mesh, const WeightField& a);
SpMat assemble_stiffness_serial(const Mesh& mesh, const WeightField& a);

// Boundary mass by the trapezoid rule: diagonal (lumped) on boundary nodes.
struct BoundaryMass {
    Vec weighted;    // entries of B^a, indexed by boundary node id
    Vec unweighted;  // entries of B^1
    double total_weighted() const { return weighted.sum(); }      // ~ int_b a
    double total_unweighted() const { return unweighted.sum(); }  // ~ |boundary|
};

BoundaryMass assemble_boundary_mass(const Mesh& mesh, const WeightField& a);

// Weighted-mean functional vector m with m_i = B^a_ii on the boundary
// (so m.u = int_b a u).
Vec weighted_mean_vector(const Mesh& mesh, const BoundaryMass& B);

// Factorization of the Lagrange-augmented system
//   [ K   m ] [w    ]   [load]
//   [ m^T 0 ] [alpha] = [ 0  ]
// enforcing the weighted zero-mean constraint; reusable across loads.
class NeumannSolver {
  public:
    NeumannSolver(const Mesh& mesh, const SpMat& K, const BoundaryMass& B);

    // Solves K w = load with int_b a w = 0. |sum(load)| is the compatibility
    // defect, absorbed by the multiplier; callers that require an exact
    // discrete balance must arrange it in the load.
    Field solve_load(const Vec& load) const;

    // Solves the flux problem d_nu w = f: load = B^a f for a boundary vector
    // f (size n_boundary). Rejects incompatible f unless project is set,
    // in which case the weighted mean of f is subtracted first.
    Field solve_flux(const Vec& f_boundary, bool project = false) const;

    double last_multiplier() const { return multiplier_; }
    double last_residual() const { return residual_; }
    static constexpr double kCompatTol = 1e-8;

  private:
    const Mesh* mesh_;
    const SpMat* K_;
    const BoundaryMass* B_;
    Vec m_;
    SpMat A_;
    Eigen::SparseLU<SpMat> lu_;
    mutable double multiplier_ = 0.0;
    mutable double residual_ = 0.0;
};

Field solve_neumann(const Mesh& mesh, const SpMat& K, const BoundaryMass& B, const Vec& f_boundary,
                    bool project = false);

// Discrete Dirichlet energy u^T K u (exact for nodal fields).
double stiffness_energy(const SpMat& K, const Vec& u);

} // namespace steklab

#endif
