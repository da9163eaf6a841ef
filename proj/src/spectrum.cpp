#include "steklab/spectrum.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace steklab {

SteklovSpectrum steklov_spectrum(const Mesh& mesh, const SpMat& K, const BoundaryMass& B, int k) {
    const int n = mesh.n_nodes();
    const int nb = mesh.n_boundary;
    const int ni = n - nb;
    if (k >= nb) throw Error("requested eigenvalue count k must satisfy k < n_boundary");

    // split K into boundary/interior blocks (boundary nodes come first)
    std::vector<Eigen::Triplet<double>> tII, tIB;
    Eigen::MatrixXd Kbb = Eigen::MatrixXd::Zero(nb, nb);
    for (int c = 0; c < K.outerSize(); ++c) {
        for (SpMat::InnerIterator it(K, c); it; ++it) {
            int r = static_cast<int>(it.row());
            if (r < nb && c < nb)
                Kbb(r, c) += it.value();
            else if (r >= nb && c >= nb)
                tII.emplace_back(r - nb, c - nb, it.value());
            else if (r >= nb && c < nb)
                tIB.emplace_back(r - nb, c, it.value());
        }
    }
    SpMat KII(ni, ni), KIB(ni, nb);
    KII.setFromTriplets(tII.begin(), tII.end());
    KIB.setFromTriplets(tIB.begin(), tIB.end());

    Eigen::SimplicialLDLT<SpMat> ldlt(KII);
    if (ldlt.info() != Eigen::Success) throw Error("interior block factorization failed");
    Eigen::MatrixXd X(ni, nb);
    for (int c = 0; c < nb; ++c) X.col(c) = ldlt.solve(Vec(KIB.col(c)));

    Eigen::MatrixXd S = Kbb - Eigen::MatrixXd(KIB.transpose()) * X;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::MatrixXd M = B.weighted.asDiagonal();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M);
    if (es.info() != Eigen::Success) throw Error("boundary eigensolver failed to converge");

    SteklovSpectrum sp;
    Vec m = weighted_mean_vector(mesh, B);
    for (int idx = 0; idx <= k; ++idx) {
        double lam = es.eigenvalues()[idx];
        Vec vb = es.eigenvectors().col(idx);
        Vec v = Vec::Zero(n);
        v.head(nb) = vb;
        v.tail(ni) = -X * vb;
        // normalize in the equivalent norm
        double q = v.dot(K * v) + std::pow(m.dot(v), 2);
        v /= std::sqrt(q);
        // orthonormalize against earlier fields (handles clustered pairs)
        for (const Field& prev : sp.eigenfields) {
            const Vec& p = prev.values;
            double proj = v.dot(K * p) + (m.dot(v)) * (m.dot(p));
            v -= proj * p;
        }
        q = v.dot(K * v) + std::pow(m.dot(v), 2);
        v /= std::sqrt(q);

        Vec Kv = K * v;
        Vec Bv = Vec::Zero(n);
        Bv.head(nb) = B.weighted.cwiseProduct(v.head(nb));
        double res = (Kv - lam * Bv).norm() / (Kv.norm() + 1e-300);
        if (idx > 0 && res > 1e-8)
            throw Error("eigenpair " + std::to_string(idx) + " residual " + std::to_string(res) +
                        " exceeds 1e-8");
        sp.eigenvalues.push_back(lam);
        sp.eigenfields.emplace_back(mesh, std::move(v));
        sp.residuals.push_back(res);
    }

    // Gram matrix in the equivalent-norm product
    const int ne = static_cast<int>(sp.eigenfields.size());
    sp.gram.resize(ne, ne);
    for (int i = 0; i < ne; ++i) {
        Vec Ki = K * sp.eigenfields[i].values;
        double mi = m.dot(sp.eigenfields[i].values);
        for (int j = 0; j < ne; ++j)
            sp.gram(i, j) = sp.eigenfields[j].values.dot(Ki) + mi * m.dot(sp.eigenfields[j].values);
    }

    // multiplicity clusters: relative gap below 1e-6
    std::vector<int> cur{0};
    for (int i = 1; i < ne; ++i) {
        double gap = std::abs(sp.eigenvalues[i] - sp.eigenvalues[i - 1]);
        double scale = std::max(std::abs(sp.eigenvalues[i]), 1e-12);
        if (gap < 1e-6 * scale)
            cur.push_back(i);
        else {
            sp.clusters.push_back(cur);
            cur = {i};
        }
    }
    sp.clusters.push_back(cur);
    return sp;
}

Field project_mean_free(const Field& u, const BoundaryMass& B, double* mean_out) {
    const int nb = u.mesh->n_boundary;
    double mean = B.weighted.dot(u.values.head(nb)) / B.weighted.sum();
    if (mean_out) *mean_out = mean;
    Field out(*u.mesh, u.values.array() - mean);
    return out;
}

} // namespace steklab
