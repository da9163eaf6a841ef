#include "steklab/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace steklab {

Vec nonlinear_boundary_load(const SteklovProblem& p, const Vec& u) {
    Vec N = Vec::Zero(p.mesh->n_nodes());
    for (int i = 0; i < p.mesh->n_boundary; ++i) N[i] = p.B->weighted[i] * std::sinh(u[i]);
    return N;
}

Vec nonlinear_residual(const SteklovProblem& p, double lambda, const Vec& u) {
    return (*p.K) * u - lambda * nonlinear_boundary_load(p, u);
}

double equivalent_norm(const SteklovProblem& p, const Vec& v) {
    double mean = p.B->weighted.dot(v.head(p.mesh->n_boundary));
    return std::sqrt(v.dot((*p.K) * v) + mean * mean);
}

namespace {

struct Deflation {
    const SteklovProblem* p;
    const std::vector<Field>* known;
    double theta = 1e-1;  // deflation radius

    double factor(const Vec& u, Vec* grad = nullptr) const {
        double M = 1.0;
        if (grad) grad->setZero();
        std::vector<double> terms;
        std::vector<Vec> dists;
        for (const Field& w : *known) {
            Vec d = u - w.values;
            double mean = p->B->weighted.dot(d.head(p->mesh->n_boundary));
            double n2 = d.dot((*p->K) * d) + mean * mean + 1e-30;
            double term = 1.0 + theta * theta / n2;
            M *= term;
            terms.push_back(term);
            if (grad) dists.push_back(std::move(d));
        }
        if (grad) {
            for (size_t k = 0; k < terms.size(); ++k) {
                const Vec& d = dists[k];
                double mean = p->B->weighted.dot(d.head(p->mesh->n_boundary));
                double n2 = d.dot((*p->K) * d) + mean * mean + 1e-30;
                Vec dn2 = 2.0 * ((*p->K) * d);
                for (int i = 0; i < p->mesh->n_boundary; ++i) dn2[i] += 2.0 * mean * p->B->weighted[i];
                double coef = -(theta * theta) / (n2 * n2) * (M / terms[k]);
                *grad += coef * dn2;
            }
        }
        return M;
    }
};

} // namespace

NewtonResult newton_solve(const SteklovProblem& p, double lambda, const Field& u0,
                          const NewtonOptions& opts, const std::vector<Field>* deflate) {
    const int n = p.mesh->n_nodes();
    const int nb = p.mesh->n_boundary;
    NewtonResult res;
    res.u = Field(*p.mesh, u0.values);
    Vec& u = res.u.values;
    if (!u.allFinite()) {
        res.message = "initial guess is not finite";
        return res;
    }

    Deflation defl{&p, deflate};
    const bool deflating = deflate && !deflate->empty();

    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;

    auto scale_of = [&](const Vec& v) {
        return (((*p.K) * v).norm() + lambda * nonlinear_boundary_load(p, v).norm() + 1e-300);
    };
    auto deflated_norm = [&](const Vec& v) {
        double f = deflating ? defl.factor(v) : 1.0;
        return f * nonlinear_residual(p, lambda, v).norm();
    };

    Vec F = nonlinear_residual(p, lambda, u);
    double fn = F.norm();
    res.residual_history.push_back(fn);
    // absolute floor keeps the criterion meaningful at the trivial solution
    const double floor = 1e-15 * (scale_of(u) + fn + 1.0);
    auto done = [&](double f, const Vec& v) { return f <= opts.tol * scale_of(v) + floor; };

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (done(fn, u)) {
            res.converged = true;
            res.iterations = it;
            break;
        }
        // Jacobian K - lambda diag(B cosh u)
        SpMat J = *p.K;
        {
            std::vector<Eigen::Triplet<double>> trip;
            trip.reserve(nb);
            for (int i = 0; i < nb; ++i) {
                double c = std::cosh(std::min(std::abs(u[i]), opts.guard));
                trip.emplace_back(i, i, -lambda * p.B->weighted[i] * c);
            }
            SpMat D(n, n);
            D.setFromTriplets(trip.begin(), trip.end());
            J = J + D;
        }
        J.makeCompressed();
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) {
            res.message = "singular Jacobian (fold or bifurcation nearby)";
            res.iterations = it;
            return res;
        }

        Vec delta;
        if (!deflating) {
            delta = lu.solve(-F);
        } else {
            // solve (M J + F g^T) delta = -M F via Sherman-Morrison
            Vec g;
            g.resize(n);
            double M = defl.factor(u, &g);
            Vec Jinv_F = lu.solve(F);
            Vec b = -M * F;
            Vec Ainv_b = lu.solve(b) / M;
            Vec Ainv_F = Jinv_F / M;
            double denom = 1.0 + g.dot(Ainv_F);
            delta = Ainv_b - Ainv_F * (g.dot(Ainv_b) / denom);
        }

        // backtracking: accept on residual decrease (Armijo) or on the
        // affine-invariant monotonicity test |J^-1 F(trial)| <= (1-s/2)|delta|,
        // which keeps progress through the stiff exp regime where the plain
        // residual norm stagnates
        double base = deflating ? deflated_norm(u) : fn;
        double dn = delta.norm();
        double step = 1.0;
        bool accepted = false;
        while (step >= opts.min_step) {
            Vec trial = u + step * delta;
            if (trial.head(nb).cwiseAbs().maxCoeff() > opts.guard) {
                step *= opts.backtrack;
                continue;
            }
            Vec Ft = nonlinear_residual(p, lambda, trial);
            double tn = deflating ? defl.factor(trial) * Ft.norm() : Ft.norm();
            bool armijo = tn <= (1.0 - 1e-4 * step) * base;
            bool natural = false;
            if (!armijo) natural = lu.solve(Ft).norm() <= (1.0 - 0.5 * step) * dn;
            if (armijo || natural) {
                u = trial;
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted) {
            res.message = "line search stalled (step below 2^-10)";
            res.iterations = it + 1;
            return res;
        }
        F = nonlinear_residual(p, lambda, u);
        fn = F.norm();
        res.residual_history.push_back(fn);
    }
    if (!res.converged && done(fn, u)) res.converged = true;
    if (!res.converged && res.message.empty()) res.message = "maximum iterations reached";
    if (res.converged && res.iterations == 0)
        res.iterations = static_cast<int>(res.residual_history.size()) - 1;
    const auto& h = res.residual_history;
    if (h.size() >= 2 && h[h.size() - 2] > 0) res.tail_ratio = h.back() / h[h.size() - 2];
    return res;
}

Branch continuation(const SteklovProblem& p, const Field& u0, const std::string& seed_description,
                    const std::vector<double>& schedule, const NewtonOptions& opts,
                    const std::vector<Field>* deflate, double deflation_threshold) {
    if (schedule.empty()) throw Error("continuation needs a nonempty schedule");
    for (size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i + 1])) throw Error("lambda schedule must be strictly decreasing");

    Branch br;
    br.seed_description = seed_description;

    auto attempt = [&](double lambda, const Field& guess) -> NewtonResult {
        NewtonResult r = newton_solve(p, lambda, guess, opts);
        if (r.converged && deflate && !deflate->empty()) {
            double closest = std::numeric_limits<double>::max();
            for (const Field& w : *deflate)
                closest = std::min(closest, equivalent_norm(p, r.u.values - w.values));
            if (closest < deflation_threshold) {
                NewtonResult rd = newton_solve(p, lambda, guess, opts, deflate);
                if (rd.converged) return rd;
                r.converged = false;
                r.message = "converged onto a deflated solution; deflated re-solve failed: " + rd.message;
            }
        }
        return r;
    };

    NewtonResult first = attempt(schedule[0], u0);
    if (!first.converged) {
        br.terminated_early = true;
        br.message = "seed failed to converge at lambda = " + std::to_string(schedule[0]) + ": " +
                     first.message;
        return br;
    }
    br.points.push_back({schedule[0], first.u, first.iterations, true});

    for (size_t s = 1; s < schedule.size(); ++s) {
        double prev_lambda = br.points.back().lambda;
        double target = schedule[s];
        // bisection stack of pending targets; geometric midpoints
        std::vector<double> pending{target};
        int depth = 0;
        bool ok = true;
        while (!pending.empty()) {
            double lam = pending.back();
            NewtonResult r = attempt(lam, br.points.back().u);
            if (r.converged) {
                pending.pop_back();
                br.points.push_back({lam, r.u, r.iterations, lam == target});
                prev_lambda = lam;
            } else {
                if (++depth > 6) {
                    br.terminated_early = true;
                    br.message = "continuation stalled between lambda = " + std::to_string(prev_lambda) +
                                 " and " + std::to_string(lam) + ": " + r.message;
                    ok = false;
                    break;
                }
                pending.push_back(std::sqrt(prev_lambda * lam));
            }
        }
        if (!ok) break;
    }
    return br;
}

} // namespace steklab
