#include "steklab/greens.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace steklab {

Field green_function(const Mesh& mesh, const WeightField& a, const BoundaryMass& B,
                     const NeumannSolver& solver, int source_node, bool weighted_normalization) {
    if (source_node < 0 || source_node >= mesh.n_boundary)
        throw Error("Green source must be a boundary node");
    const double ay = a.value(mesh.nodes[source_node]);
    const double total = B.weighted.sum();
    // point flux 2 pi a(y) balanced exactly by the weighted distribution
    Vec load = Vec::Zero(mesh.n_nodes());
    load.head(mesh.n_boundary) = -(2 * kPi * ay / total) * B.weighted;
    load[source_node] += 2 * kPi * ay;
    Field G = solver.solve_load(load);
    const Vec& w = weighted_normalization ? B.weighted : B.unweighted;
    double shift = w.dot(G.values.head(mesh.n_boundary)) / w.sum();
    G.values.array() -= shift;
    return G;
}

Field regular_part(const Mesh& mesh, const Field& G, int source_node) {
    const Vec2 y = mesh.nodes[source_node];
    const int n = mesh.n_nodes();
    Field H(mesh, Vec::Zero(n));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (i == source_node) continue;
        double r2 = (mesh.nodes[i] - y).squaredNorm();
        H.values[i] = G.values[i] + std::log(r2);
    }
    // fill the source value by linear extrapolation over two neighbor rings
    const auto& nbrs = mesh.node_neighbors();
    std::vector<int> ring1, ring2;
    for (int v : nbrs[source_node]) ring1.push_back(v);
    for (int u : ring1)
        for (int v : nbrs[u])
            if (v != source_node && std::find(ring1.begin(), ring1.end(), v) == ring1.end() &&
                std::find(ring2.begin(), ring2.end(), v) == ring2.end())
                ring2.push_back(v);
    double s1 = 0, sd = 0, sdd = 0, sv = 0, sdv = 0;
    auto accumulate = [&](int node) {
        double d = (mesh.nodes[node] - y).norm();
        double v = H.values[node];
        s1 += 1;
        sd += d;
        sdd += d * d;
        sv += v;
        sdv += d * v;
    };
    for (int u : ring1) accumulate(u);
    for (int u : ring2) accumulate(u);
    double det = s1 * sdd - sd * sd;
    H.values[source_node] = (det != 0) ? (sv * sdd - sd * sdv) / det : H.values[ring1.front()];
    return H;
}

double robin_diagonal_estimate(const Mesh& mesh, const Field& H, int source_node, double r_lo,
                               double r_hi) {
    const int nb = mesh.n_boundary;
    // signed arc offset along the loop, tapered quadratic LS fit of H(s);
    // smooth window weights keep the fit insensitive to nodes crossing the
    // window edges under coordinate perturbations
    const double taper = 0.25 * (r_hi - r_lo);
    double S0 = 0, S1 = 0, S2 = 0, S3 = 0, S4 = 0, T0 = 0, T1 = 0, T2 = 0;
    double wsum = 0;
    int used = 0;
    for (int dir : {+1, -1}) {
        double s = 0;
        int i = source_node;
        for (int step = 0; step < nb / 2; ++step) {
            int j = (i + dir + nb) % nb;
            s += dir * (mesh.nodes[j] - mesh.nodes[i]).norm();
            i = j;
            double r = std::abs(s);
            if (r > r_hi) break;
            double w = std::clamp((r - r_lo) / taper, 0.0, 1.0) *
                       std::clamp((r_hi - r) / taper, 0.0, 1.0);
            if (w == 0) continue;
            double v = H.values[i];
            double s2 = s * s;
            S0 += w;
            S1 += w * s;
            S2 += w * s2;
            S3 += w * s * s2;
            S4 += w * s2 * s2;
            T0 += w * v;
            T1 += w * s * v;
            T2 += w * s2 * v;
            wsum += w;
            ++used;
        }
    }
    if (used < 6 || wsum < 1e-12) return H.values[source_node];
    Eigen::Matrix3d A;
    A << S0, S1, S2, S1, S2, S3, S2, S3, S4;
    Eigen::Vector3d b(T0, T1, T2);
    Eigen::Vector3d coef = A.fullPivLu().solve(b);
    return coef[0];
}

int GreenTable::find_source(const Vec2& p) const {
    int best = 0;
    double bd = std::numeric_limits<double>::max();
    for (const auto& s : sources) {
        double d = (s.point - p).squaredNorm();
        if (d < bd) {
            bd = d;
            best = s.index;
        }
    }
    return best;
}

namespace {

struct LevelData {
    std::shared_ptr<Mesh> mesh;
    std::vector<int> nodes;           // snapped source nodes
    std::vector<Field> G, H;
    std::vector<double> diag;         // ring-extrapolated H(xi,xi) per source
};

LevelData solve_level(const BoundaryCurve& curve, const WeightField& a,
                      const std::vector<Vec2>& source_pts, double h,
                      const GreenTableOptions& opt) {
    // ladder meshes stay uniform: a source funnel is scale-invariant around
    // the singularity and would freeze the Robin window error across levels
    LevelData lv;
    lv.mesh = std::make_shared<Mesh>(build_mesh(curve, h));
    SpMat K = assemble_stiffness(*lv.mesh, a);
    BoundaryMass B = assemble_boundary_mass(*lv.mesh, a);
    NeumannSolver solver(*lv.mesh, K, B);
    const double r_lo = opt.window_lo * opt.h_ladder[0];
    const double r_hi = opt.window_hi * opt.h_ladder[0];
    for (const auto& p : source_pts) {
        int node = lv.mesh->nearest_boundary_node(p);
        lv.nodes.push_back(node);
        Field G = green_function(*lv.mesh, a, B, solver, node, opt.weighted_normalization);
        Field H = regular_part(*lv.mesh, G, node);
        lv.diag.push_back(robin_diagonal_estimate(*lv.mesh, H, node, r_lo, r_hi));
        lv.G.push_back(std::move(G));
        lv.H.push_back(std::move(H));
    }
    return lv;
}

} // namespace

GreenTable build_green_table(const BoundaryCurve& curve, const WeightField& a,
                             const std::vector<double>& source_params,
                             const GreenTableOptions& opt) {
    if (source_params.empty()) throw Error("green table needs at least one source");
    if (!(opt.h_ladder[0] > opt.h_ladder[1] && opt.h_ladder[1] > opt.h_ladder[2]))
        throw Error("mesh ladder must be strictly decreasing");
    std::vector<Vec2> pts;
    for (double t : source_params) pts.push_back(curve.point(t));

    std::array<LevelData, 3> levels;
    for (int l = 0; l < 3; ++l) levels[l] = solve_level(curve, a, pts, opt.h_ladder[l], opt);

    GreenTable table;
    table.mesh = levels[2].mesh;
    table.mesh_ladder = opt.h_ladder;
    table.weighted_normalization = opt.weighted_normalization;
    table.G = std::move(levels[2].G);
    table.H = std::move(levels[2].H);
    for (size_t s = 0; s < pts.size(); ++s) {
        GreenSource src;
        src.index = static_cast<int>(s);
        src.node = levels[2].nodes[s];
        src.point = table.mesh->nodes[src.node];
        src.t = table.mesh->boundary_param[src.node];
        table.sources.push_back(src);

        Richardson r =
            richardson_extrapolate(levels[0].diag[s], levels[1].diag[s], levels[2].diag[s]);
        RobinDiagonal rd;
        rd.t = src.t;
        rd.value = r.value;
        rd.error = r.error;
        rd.rate = r.rate;
        rd.extrapolated = r.extrapolated;
        rd.ladder_values = {levels[0].diag[s], levels[1].diag[s], levels[2].diag[s]};
        table.robin.push_back(rd);
    }
    return table;
}

RobinDiagonal robin_diagonal(const BoundaryCurve& curve, const WeightField& a, const Vec2& xi,
                             const GreenTableOptions& opt) {
    // project xi onto the curve so every ladder level grades at the same spot
    double t0 = 0;
    {
        double best = std::numeric_limits<double>::max();
        const int D = 4096;
        for (int i = 0; i < D; ++i) {
            double d = (curve.point(double(i) / D) - xi).squaredNorm();
            if (d < best) {
                best = d;
                t0 = double(i) / D;
            }
        }
    }
    GreenTable t = build_green_table(curve, a, {t0}, opt);
    return t.robin[0];
}

std::pair<double, double> mu_parameters(const GreenTable& table, const Vec2& xi1, const Vec2& xi2) {
    if ((xi1 - xi2).norm() < 1e-12) throw Error("mu parameters need two distinct points");
    int s1 = table.find_source(xi1);
    int s2 = table.find_source(xi2);
    if (s1 == s2) throw Error("both points snap to the same Green source");
    double H11 = table.robin[s1].value;
    double H22 = table.robin[s2].value;
    double G12 = table.G[s2].values[table.sources[s1].node];  // G(xi1, xi2)
    double G21 = table.G[s1].values[table.sources[s2].node];  // G(xi2, xi1)
    double mu1 = 0.5 * std::exp(H11 - G12);
    double mu2 = 0.5 * std::exp(H22 - G21);
    return {mu1, mu2};
}

Vec represent_neumann(const GreenTable& table, const WeightField& a, const BoundaryMass& B,
                      const Vec& f_boundary) {
    const Mesh& mesh = *table.mesh;
    if (f_boundary.size() != mesh.n_boundary)
        throw Error("boundary data size does not match the table mesh");
    Vec load = B.weighted.cwiseProduct(f_boundary);
    Vec out(table.sources.size());
    for (size_t s = 0; s < table.sources.size(); ++s) {
        const Field& G = table.G[s];
        double acc = G.values.head(mesh.n_boundary).dot(load);
        double ay = a.value(table.sources[s].point);
        out[static_cast<int>(s)] = acc / (2 * kPi * ay);
    }
    return out;
}

} // namespace steklab
