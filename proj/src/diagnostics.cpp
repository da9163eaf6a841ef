#include "steklab/diagnostics.hpp"

#include "steklab/numerics.hpp"

#include <cmath>

namespace steklab {

double energy(const Field& u, double lambda, const SpMat& K, const BoundaryMass& B, double guard) {
    const int nb = u.mesh->n_boundary;
    double dirichlet = 0.5 * u.values.dot(K * u.values);
    double boundary = 0;
    for (int i = 0; i < nb; ++i) {
        double ui = u.values[i];
        if (std::abs(ui) > guard) throw Error("energy overflow guard tripped");
        boundary += B.weighted[i] * (std::cosh(ui) - 1.0);
    }
    return dirichlet - lambda * boundary;
}

MeanSplit mean_split(const Field& u, const BoundaryMass& B) {
    const int nb = u.mesh->n_boundary;
    MeanSplit ms;
    ms.s = B.weighted.dot(u.values.head(nb)) / B.weighted.sum();
    ms.u0 = Field(*u.mesh, u.values.array() - ms.s);
    double plus = 0, minus = 0;
    for (int i = 0; i < nb; ++i) {
        plus += B.weighted[i] * std::exp(ms.u0.values[i]);
        minus += B.weighted[i] * std::exp(-ms.u0.values[i]);
    }
    ms.defect = std::abs(ms.s - 0.5 * std::log(minus / plus));
    return ms;
}

FluxMeasure flux_measure(const Field& u, double lambda, const WeightField& a,
                         const BoundaryMass& B, bool converged) {
    const Mesh& mesh = *u.mesh;
    const int nb = mesh.n_boundary;
    FluxMeasure fm;
    fm.flagged_unconverged = !converged;
    fm.density = Vec::Zero(nb);
    for (int i = 0; i < nb; ++i) fm.density[i] = lambda * std::sinh(u.values[i]);
    std::vector<double> absd(nb);
    for (int i = 0; i < nb; ++i) {
        double d = fm.density[i];
        double w = B.unweighted[i];
        double aw = B.weighted[i];
        fm.total_abs_unweighted += w * std::abs(d);
        fm.total_abs_weighted += aw * std::abs(d);
        fm.signed_unweighted += w * d;
        fm.signed_weighted += aw * d;
        absd[i] = std::abs(d);
    }
    (void)a;

    // arclength-weighted median keeps the threshold mesh-independent under
    // graded refinement (node-count medians drift with the grading)
    double med = 0;
    {
        std::vector<std::pair<double, double>> vw(nb);
        for (int i = 0; i < nb; ++i) vw[i] = {absd[i], B.unweighted[i]};
        std::sort(vw.begin(), vw.end());
        double half = 0.5 * B.unweighted.sum(), acc = 0;
        for (const auto& [v, w] : vw) {
            acc += w;
            if (acc >= half) {
                med = v;
                break;
            }
        }
    }
    double floor = std::max(5.0 * med, 1e-300);
    std::vector<int> candidates;
    for (int i = 0; i < nb; ++i) {
        int l = (i + nb - 1) % nb, r = (i + 1) % nb;
        if (absd[i] > floor && absd[i] >= absd[l] && absd[i] > absd[r]) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](int i, int j) { return absd[i] > absd[j]; });

    std::vector<bool> claimed(nb, false);
    for (int c : candidates) {
        if (claimed[c]) continue;
        double cut = 0.1 * absd[c];
        int sign = fm.density[c] > 0 ? 1 : -1;
        // lobe: same-sign sweep; core: the 10%-of-peak window inside it
        int first = c, last = c, core_first = c, core_last = c;
        for (int step = 1; step < nb; ++step) {
            int i = (c + nb - step) % nb;
            if (claimed[i] || fm.density[i] * sign <= 0) break;
            first = i;
            if (absd[i] >= cut && core_first == (i + 1) % nb) core_first = i;
        }
        for (int step = 1; step < nb; ++step) {
            int i = (c + step) % nb;
            if (claimed[i] || fm.density[i] * sign <= 0) break;
            last = i;
            if (absd[i] >= cut && core_last == (i + nb - 1) % nb) core_last = i;
        }
        FluxPeak pk;
        pk.node = c;
        pk.location = mesh.nodes[c];
        pk.t = mesh.boundary_param[c];
        pk.sign = sign;
        pk.height = absd[c];
        pk.arc_first = first;
        pk.arc_last = last;
        for (int i = first;; i = (i + 1) % nb) {
            claimed[i] = true;
            pk.mass_unweighted += B.unweighted[i] * fm.density[i];
            pk.mass_weighted += B.weighted[i] * fm.density[i];
            if (i == last) break;
        }
        for (int i = core_first;; i = (i + 1) % nb) {
            pk.mass_core_unweighted += B.unweighted[i] * fm.density[i];
            if (i == core_last) break;
        }
        fm.peaks.push_back(pk);
    }
    std::sort(fm.peaks.begin(), fm.peaks.end(),
              [](const FluxPeak& p, const FluxPeak& q) { return p.height > q.height; });
    return fm;
}

namespace {

// one-parameter least-squares fit of sign*u to log(2 mu / |x - (xi + lambda mu nu)|^2)
double fit_bubble_scale(const Mesh& mesh, const Vec& u, int peak_node, int sign, double lambda,
                        const Vec2& nu) {
    const Vec2 xi = mesh.nodes[peak_node];
    std::vector<int> window;
    for (int i = 0; i < mesh.n_boundary; ++i)
        if ((mesh.nodes[i] - xi).norm() <= 10.0 * lambda) window.push_back(i);
    if (window.size() < 4) return 0;
    auto sse = [&](double logmu) {
        double mu = std::exp(logmu);
        Vec2 center = xi + lambda * mu * nu;
        double acc = 0;
        for (int i : window) {
            double model = std::log(2 * mu) - std::log((mesh.nodes[i] - center).squaredNorm());
            double d = sign * u[i] - model;
            acc += d * d;
        }
        return acc;
    };
    double best = golden_minimize(sse, std::log(1e-3), std::log(1e3), 120);
    return std::exp(best);
}

} // namespace

ConcentrationReport concentration_report(const Branch& branch, const WeightField& a,
                                         const BoundaryCurve& curve, const GreenTable* table,
                                         const SpMat& K, const BoundaryMass& B, double lambda_max) {
    ConcentrationReport rep;
    CriticalPointReport crit = boundary_critical_points(a, curve);

    // predicted scales, matched to predicted sites by proximity
    std::vector<std::pair<Vec2, double>> predicted_mu;
    if (table && crit.stable.size() >= 2) {
        // positive peak concentrates at the maximum, negative at the minimum
        const CriticalPoint* cmax = nullptr;
        const CriticalPoint* cmin = nullptr;
        for (const auto& cp : crit.stable) {
            if (cp.kind == CritKind::Maximum && !cmax) cmax = &cp;
            if (cp.kind == CritKind::Minimum && !cmin) cmin = &cp;
        }
        if (cmax && cmin) {
            auto [m1, m2] = mu_parameters(*table, cmax->xi, cmin->xi);
            predicted_mu.push_back({cmax->xi, m1});
            predicted_mu.push_back({cmin->xi, m2});
        }
    }

    for (const auto& bp : branch.points) {
        if (!bp.scheduled || bp.lambda > lambda_max) continue;
        ConcentrationRow row;
        row.lambda = bp.lambda;
        row.energy = energy(bp.u, bp.lambda, K, B);
        row.energy_over_log = row.energy / std::log(1.0 / bp.lambda);
        FluxMeasure fm = flux_measure(bp.u, bp.lambda, a, B);
        row.total_abs_flux = fm.total_abs_unweighted;
        row.fit_ok = fm.peaks.size() >= 2;
        const size_t npk = std::min<size_t>(fm.peaks.size(), 2);
        for (size_t k = 0; k < npk; ++k) {
            const FluxPeak& pk = fm.peaks[k];
            PeakFit pf;
            pf.location = pk.location;
            pf.t = pk.t;
            pf.sign = pk.sign;
            pf.mass_unweighted = pk.mass_unweighted;
            pf.mass_weighted = pk.mass_weighted;
            pf.dist_to_predicted = std::numeric_limits<double>::max();
            for (const auto& cp : crit.stable)
                pf.dist_to_predicted = std::min(pf.dist_to_predicted, (cp.xi - pk.location).norm());
            if (row.fit_ok) {
                Vec2 nu = curve.normal(pk.t);
                pf.mu_fit = fit_bubble_scale(*bp.u.mesh, bp.u.values, pk.node, pk.sign, bp.lambda, nu);
            }
            // nearest predicted site wins
            if (!predicted_mu.empty()) {
                double best = std::numeric_limits<double>::max();
                for (const auto& [xi, mu] : predicted_mu) {
                    double d = (xi - pk.location).norm();
                    if (d < best) {
                        best = d;
                        pf.mu_predicted = mu;
                    }
                }
            }
            if (pf.mu_predicted > 0 && pf.mu_fit > 0)
                pf.mu_gap = std::abs(pf.mu_fit - pf.mu_predicted) / pf.mu_predicted;
            row.peaks.push_back(pf);
        }
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace steklab
