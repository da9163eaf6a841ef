#ifndef STEKLAB_SPECTRUM_HPP
#define STEKLAB_SPECTRUM_HPP

#include "steklab/fem.hpp"

namespace steklab {

// Eigenpairs of K v = lambda B^a v, orthonormal in the inner product
// <u,w> = u^T K w + (int_b a u)(int_b a w).
struct SteklovSpectrum {
    std::vector<double> eigenvalues;  // ascending, eigenvalues[0] ~ 0
    std::vector<Field> eigenfields;
    std::vector<double> residuals;           // |Kv - lambda B v| / |Kv|
    Eigen::MatrixXd gram;                    // in the equivalent-norm product
    std::vector<std::vector<int>> clusters;  // indices grouped by relative gap < 1e-6
};

// Interior unknowns are condensed onto the boundary (Schur complement),
// then a dense symmetric generalized eigensolver runs on the boundary block.
// Requires k < n_boundary.
SteklovSpectrum steklov_spectrum(const Mesh& mesh, const SpMat& K, const BoundaryMass& B, int k);

// u minus its weighted boundary mean; the removed mean is reported.
Field project_mean_free(const Field& u, const BoundaryMass& B, double* mean_out = nullptr);

} // namespace steklab

#endif
