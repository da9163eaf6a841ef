#include "steklab/fem.hpp"

#include <cmath>
#include <vector>

namespace steklab {

double Field::eval(const Vec2& p) const {
    auto loc = mesh->locate(p);
    if (!loc) throw Error("field evaluation outside the mesh");
    const auto& tr = mesh->triangles[loc->triangle];
    // exact nodal hit returns the coefficient itself
    for (int k = 0; k < 3; ++k)
        if (loc->bary[k] >= 1.0 - 1e-12) return values[tr[k]];
    double v = 0;
    for (int k = 0; k < 3; ++k) v += loc->bary[k] * values[tr[k]];
    return v;
}

namespace {

struct ElementBlock {
    std::array<int, 3> n;
    double k[3][3];
};

ElementBlock element_stiffness(const Mesh& mesh, const WeightField& a, int t) {
    const auto& tr = mesh.triangles[t];
    const Vec2& p0 = mesh.nodes[tr[0]];
    const Vec2& p1 = mesh.nodes[tr[1]];
    const Vec2& p2 = mesh.nodes[tr[2]];
    double area = mesh.triangle_area(t);
    // gradients of the barycentric hats
    Vec2 g[3];
    g[0] = Vec2(p1.y() - p2.y(), p2.x() - p1.x()) / (2 * area);
    g[1] = Vec2(p2.y() - p0.y(), p0.x() - p2.x()) / (2 * area);
    g[2] = Vec2(p0.y() - p1.y(), p1.x() - p0.x()) / (2 * area);
    // edge-midpoint quadrature for the weight
    Vec2 m01 = 0.5 * (p0 + p1), m12 = 0.5 * (p1 + p2), m20 = 0.5 * (p2 + p0);
    double a01 = a.value(m01), a12 = a.value(m12), a20 = a.value(m20);
    if (a01 <= 0 || a12 <= 0 || a20 <= 0)
        throw Error("nonpositive weight sampled at a quadrature point of element " + std::to_string(t));
    double abar = (a01 + a12 + a20) / 3.0;
    ElementBlock blk;
    blk.n = tr;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) blk.k[i][j] = abar * area * g[i].dot(g[j]);
    return blk;
}

SpMat scatter_blocks(const Mesh& mesh, const std::vector<ElementBlock>& blocks) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(blocks.size() * 9);
    for (const auto& blk : blocks)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(blk.n[i], blk.n[j], blk.k[i][j]);
    SpMat K(mesh.n_nodes(), mesh.n_nodes());
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    return K;
}

} // namespace

SpMat assemble_stiffness_serial(const Mesh& mesh, const WeightField& a) {
    std::vector<ElementBlock> blocks(mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) blocks[t] = element_stiffness(mesh, a, t);
    return scatter_blocks(mesh, blocks);
}

SpMat assemble_stiffness(const Mesh& mesh, const WeightField& a) {
    const int nt = mesh.n_triangles();
    std::vector<ElementBlock> blocks(nt);
    bool failed = false;
    std::string what;
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
        try {
            blocks[t] = element_stiffness(mesh, a, t);
        } catch (const std::exception& e) {
#pragma omp critical
            {
                failed = true;
                what = e.what();
            }
        }
    }
    if (failed) throw Error(what);
    return scatter_blocks(mesh, blocks);
}

BoundaryMass assemble_boundary_mass(const Mesh& mesh, const WeightField& a) {
    const int nb = mesh.n_boundary;
    BoundaryMass B;
    B.weighted = Vec::Zero(nb);
    B.unweighted = Vec::Zero(nb);
    for (int i = 0; i < nb; ++i) {
        int j = (i + 1) % nb;
        double len = (mesh.nodes[j] - mesh.nodes[i]).norm();
        B.unweighted[i] += 0.5 * len;
        B.unweighted[j] += 0.5 * len;
        B.weighted[i] += 0.5 * len * a.value(mesh.nodes[i]);
        B.weighted[j] += 0.5 * len * a.value(mesh.nodes[j]);
    }
    return B;
}

Vec weighted_mean_vector(const Mesh& mesh, const BoundaryMass& B) {
    Vec m = Vec::Zero(mesh.n_nodes());
    m.head(mesh.n_boundary) = B.weighted;
    return m;
}

NeumannSolver::NeumannSolver(const Mesh& mesh, const SpMat& K, const BoundaryMass& B)
    : mesh_(&mesh), K_(&K), B_(&B) {
    const int n = mesh.n_nodes();
    m_ = weighted_mean_vector(mesh, B);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(K.nonZeros() + 2 * mesh.n_boundary);
    for (int k = 0; k < K.outerSize(); ++k)
        for (SpMat::InnerIterator it(K, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < mesh.n_boundary; ++i) {
        trip.emplace_back(i, n, m_[i]);
        trip.emplace_back(n, i, m_[i]);
    }
    A_ = SpMat(n + 1, n + 1);
    A_.setFromTriplets(trip.begin(), trip.end());
    A_.makeCompressed();
    lu_.compute(A_);
    if (lu_.info() != Eigen::Success) throw Error("augmented Neumann system factorization failed");
}

Field NeumannSolver::solve_load(const Vec& load) const {
    const int n = mesh_->n_nodes();
    Vec rhs = Vec::Zero(n + 1);
    rhs.head(n) = load;
    Vec x = lu_.solve(rhs);
    // one step of iterative refinement
    Vec r = rhs - A_ * x;
    x += lu_.solve(r);
    multiplier_ = x[n];
    Vec w = x.head(n);
    double scale = ((*K_) * w).norm() + load.norm() + 1e-300;
    residual_ = ((*K_) * w + multiplier_ * m_ - load).norm() / scale;
    if (residual_ > 1e-10) throw Error("Neumann solve residual " + std::to_string(residual_) + " exceeds 1e-10");
    return Field(*mesh_, std::move(w));
}

Field NeumannSolver::solve_flux(const Vec& f_boundary, bool project) const {
    if (f_boundary.size() != mesh_->n_boundary) throw Error("boundary flux vector has wrong size");
    Vec f = f_boundary;
    double num = B_->weighted.dot(f);
    double den = B_->weighted.dot(f.cwiseAbs()) + 1e-300;
    if (std::abs(num) > kCompatTol * den) {
        if (!project)
            throw Error("incompatible Neumann data: |int a f| / int a|f| = " + std::to_string(std::abs(num) / den));
        f.array() -= num / B_->weighted.sum();
    }
    Vec load = Vec::Zero(mesh_->n_nodes());
    load.head(mesh_->n_boundary) = B_->weighted.cwiseProduct(f);
    return solve_load(load);
}

Field solve_neumann(const Mesh& mesh, const SpMat& K, const BoundaryMass& B, const Vec& f_boundary,
                    bool project) {
    NeumannSolver s(mesh, K, B);
    return s.solve_flux(f_boundary, project);
}

double stiffness_energy(const SpMat& K, const Vec& u) { return u.dot(K * u); }

} // namespace steklab
