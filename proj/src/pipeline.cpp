#include "steklab/pipeline.hpp"

#include "steklab/asymptotics.hpp"
#include "steklab/diagnostics.hpp"
#include "steklab/expr.hpp"
#include "steklab/io.hpp"
#include "steklab/spectrum.hpp"

#include <json.hpp>

#include <algorithm>
#include <iostream>

namespace steklab {

using json = nlohmann::ordered_json;

namespace {

struct PipelineState {
    ExperimentConfig cfg;
    fs::path out;
    BoundaryCurve curve;
    WeightField weight;
    CriticalPointReport crit;

    std::shared_ptr<Mesh> base_mesh;
    std::shared_ptr<Mesh> solve_mesh;
    SpMat K;
    BoundaryMass B;

    GreenTable table;
    bool have_table = false;
    double mu1 = 1, mu2 = 1;
    AnsatzConfig acfg;

    Branch branch;
    bool solve_attempted = false;
    ConcentrationReport conc;
    std::vector<std::string> artifacts;
    std::vector<std::pair<std::string, bool>> assert_results;
};

void note(PipelineState& st, const fs::path& p) {
    st.artifacts.push_back(fs::relative(p, st.out).string());
}

void step_mesh(PipelineState& st) {
    st.base_mesh = std::make_shared<Mesh>(build_mesh(st.curve, st.cfg.h_max, st.cfg.extra_grading));
    write_mesh(*st.base_mesh, st.out / "mesh.txt");
    note(st, st.out / "mesh.txt");
}

void step_spectrum(PipelineState& st) {
    if (!st.base_mesh) step_mesh(st);
    SpMat K = assemble_stiffness(*st.base_mesh, st.weight);
    BoundaryMass B = assemble_boundary_mass(*st.base_mesh, st.weight);
    SteklovSpectrum sp = steklov_spectrum(*st.base_mesh, K, B, st.cfg.spectrum_count);
    write_spectrum_csv(sp.eigenvalues, sp.residuals, st.out / "spectrum.csv");
    note(st, st.out / "spectrum.csv");
    if (st.cfg.spectrum_fields) {
        char name[64];
        for (size_t n = 0; n < sp.eigenfields.size(); ++n) {
            std::snprintf(name, sizeof name, "eigenfield_%02zu.csv", n);
            write_field_csv(sp.eigenfields[n], st.out / name);
            note(st, st.out / name);
        }
    }
}

std::vector<double> green_source_params(const PipelineState& st) {
    std::vector<double> params;
    for (const auto& cp : st.crit.stable) params.push_back(cp.t);
    if (params.size() < 2) params = {0.0, 0.5};
    return params;
}

void step_green(PipelineState& st) {
    // ansatz points: explicit from the config, else the first maximum and the
    // first minimum of the weight, else the antipodal fallback
    if (st.cfg.ansatz_t1 >= 0 && st.cfg.ansatz_t2 >= 0) {
        st.acfg.t1 = st.cfg.ansatz_t1;
        st.acfg.t2 = st.cfg.ansatz_t2;
    } else {
        const CriticalPoint* cmax = nullptr;
        const CriticalPoint* cmin = nullptr;
        for (const auto& cp : st.crit.stable) {
            if (cp.kind == CritKind::Maximum && !cmax) cmax = &cp;
            if (cp.kind == CritKind::Minimum && !cmin) cmin = &cp;
        }
        st.acfg.t1 = cmax ? cmax->t : 0.0;
        st.acfg.t2 = cmin ? cmin->t : 0.5;
    }

    GreenTableOptions opt;
    opt.h_ladder = st.cfg.green_ladder;
    std::vector<double> sources = green_source_params(st);
    sources.push_back(st.acfg.t1);
    sources.push_back(st.acfg.t2);
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                  sources.end());
    st.table = build_green_table(st.curve, st.weight, sources, opt);
    st.have_table = true;
    write_green_table(st.table, st.out / "green");
    note(st, st.out / "green/index.json");

    auto [m1, m2] =
        mu_parameters(st.table, st.curve.point(st.acfg.t1), st.curve.point(st.acfg.t2));
    st.mu1 = st.acfg.mu1 = m1;
    st.mu2 = st.acfg.mu2 = m2;
}

void make_solve_mesh(PipelineState& st) {
    std::vector<GradingPoint> grading = st.cfg.extra_grading;
    if (st.cfg.seed_type == "ansatz") {
        double l1 = st.cfg.lambda_end * st.acfg.mu1 / st.cfg.grade_factor;
        double l2 = st.cfg.lambda_end * st.acfg.mu2 / st.cfg.grade_factor;
        grading.push_back({st.curve.point(st.acfg.t1), std::min(l1, st.cfg.h_max)});
        grading.push_back({st.curve.point(st.acfg.t2), std::min(l2, st.cfg.h_max)});
    }
    st.solve_mesh = std::make_shared<Mesh>(build_mesh(st.curve, st.cfg.h_max, grading));
    st.K = assemble_stiffness(*st.solve_mesh, st.weight);
    st.B = assemble_boundary_mass(*st.solve_mesh, st.weight);
    write_mesh(*st.solve_mesh, st.out / "mesh_solve.txt");
    note(st, st.out / "mesh_solve.txt");
}

void step_ansatz(PipelineState& st) {
    if (!st.have_table) step_green(st);
    if (!st.solve_mesh) make_solve_mesh(st);
    NeumannSolver solver(*st.solve_mesh, st.K, st.B);

    // residual decay over a three-point lambda ladder; the jobs are
    // independent and share only the factorized system
    std::vector<double> ladder{st.cfg.lambda_start,
                               std::sqrt(st.cfg.lambda_start * st.cfg.lambda_end),
                               st.cfg.lambda_end};
    std::vector<double> rstars(3), thetas(3);
    for (int k = 0; k < 3; ++k) {
        AnsatzConfig cfg = st.acfg;
        cfg.lambda = ladder[k];
        Ansatz an = build_ansatz(cfg, *st.solve_mesh, st.curve, st.weight, st.B, solver);
        AnsatzResidual ar =
            ansatz_residual(an, *st.solve_mesh, st.B, make_scaled_norms(an, st.cfg.sigma));
        rstars[k] = ar.r_star;
        thetas[k] = ar.theta_sup;
        if (k == 0) {
            write_field_csv(an.U, st.out / "ansatz_u.csv");
            note(st, st.out / "ansatz_u.csv");
        }
    }
    double alpha_fit = fit_loglog_slope(ladder, rstars);

    st.acfg.lambda = st.cfg.lambda_start;
    json j;
    j["lambda"] = ladder;
    j["mu1"] = st.acfg.mu1;
    j["mu2"] = st.acfg.mu2;
    j["r_star_norm"] = rstars;
    j["theta_sup"] = thetas;
    j["alpha_fit"] = alpha_fit;
    j["sigma"] = st.cfg.sigma;
    atomic_write(st.out / "ansatz_residual.json", j.dump(2) + "\n");
    note(st, st.out / "ansatz_residual.json");
}

void step_solve(PipelineState& st) {
    if (st.solve_attempted) return;
    st.solve_attempted = true;
    if (!st.solve_mesh) {
        if (st.cfg.seed_type == "ansatz" && !st.have_table) step_green(st);
        make_solve_mesh(st);
    }
    SteklovProblem prob{st.solve_mesh.get(), &st.K, &st.B};
    Field u0 = Field::zero(*st.solve_mesh);
    std::string desc = st.cfg.seed_type;
    if (st.cfg.seed_type == "ansatz") {
        if (!st.have_table) step_green(st);
        st.acfg.lambda = st.cfg.lambda_start;
        NeumannSolver solver(*st.solve_mesh, st.K, st.B);
        Ansatz an = build_ansatz(st.acfg, *st.solve_mesh, st.curve, st.weight, st.B, solver);
        u0 = an.U;
        desc = "ansatz:t1=" + fmt15(st.acfg.t1) + ":t2=" + fmt15(st.acfg.t2);
    } else if (st.cfg.seed_type == "eigen") {
        SteklovSpectrum sp =
            steklov_spectrum(*st.solve_mesh, st.K, st.B, std::max(st.cfg.eigen_index, 1));
        u0 = sp.eigenfields[st.cfg.eigen_index];
        u0.values *= st.cfg.eigen_amplitude;
        desc = "eigen:" + std::to_string(st.cfg.eigen_index) + ":" + fmt15(st.cfg.eigen_amplitude);
    } else if (st.cfg.seed_type != "zero") {
        throw Error("unknown seed type '" + st.cfg.seed_type + "'");
    }
    std::vector<Field> deflate;
    for (const auto& file : st.cfg.deflate_files) {
        Vec v = read_field_csv(file);
        if (v.size() != st.solve_mesh->n_nodes())
            throw Error("deflate field " + file + " does not match the solve mesh");
        deflate.emplace_back(*st.solve_mesh, std::move(v));
    }
    st.branch = continuation(prob, u0, desc, st.cfg.lambda_schedule(), {},
                             deflate.empty() ? nullptr : &deflate);
    write_branch(st.branch, st.out / "branch");
    note(st, st.out / "branch/index.json");
    if (st.branch.terminated_early) std::cerr << "branch terminated early: " << st.branch.message << "\n";
}

void step_diagnose(PipelineState& st) {
    if (!st.solve_attempted) step_solve(st);
    st.conc = concentration_report(st.branch, st.weight, st.curve,
                                   st.have_table ? &st.table : nullptr, st.K, st.B);
    write_concentration_csv(st.conc, st.out / "diagnostics.csv");
    note(st, st.out / "diagnostics.csv");

    json j = json::array();
    for (const auto& bp : st.branch.points) {
        if (!bp.scheduled) continue;
        MeanSplit ms = mean_split(bp.u, st.B);
        FluxMeasure fm = flux_measure(bp.u, bp.lambda, st.weight, st.B);
        json row;
        row["lambda"] = bp.lambda;
        row["energy"] = energy(bp.u, bp.lambda, st.K, st.B);
        row["mean"] = ms.s;
        row["mean_split_defect"] = ms.defect;
        row["flux_total_abs"] = fm.total_abs_unweighted;
        row["flux_signed_weighted"] = fm.signed_weighted;
        row["peaks"] = json::array();
        for (const auto& pk : fm.peaks)
            row["peaks"].push_back({{"x", pk.location.x()},
                                    {"y", pk.location.y()},
                                    {"sign", pk.sign},
                                    {"mass_unweighted", pk.mass_unweighted},
                                    {"mass_weighted", pk.mass_weighted}});
        j.push_back(row);
    }
    atomic_write(st.out / "diagnostics.json", j.dump(2) + "\n");
    note(st, st.out / "diagnostics.json");
}

void step_axisym(PipelineState& st) {
    if (!st.solve_attempted) step_solve(st);
    TorusDomain dom = torus_domain(st.curve);
    // geodesics at the predicted concentration sites (the stable critical
    // points of the weight on the boundary)
    std::vector<GeodesicCircle> predicted;
    for (const auto& cp : st.crit.stable)
        predicted.push_back({cp.xi.x(), cp.xi.y(), cp.kind == CritKind::Maximum ? 1 : -1});
    if (st.branch.points.empty()) {
        write_geodesics_json(predicted, st.out / "geodesics.json");
        note(st, st.out / "geodesics.json");
        std::cerr << "axisym: no converged solution to lift\n";
        return;
    }
    const BranchPoint& last = st.branch.points.back();
    FluxMeasure fm = flux_measure(last.u, last.lambda, st.weight, st.B);
    std::vector<GeodesicCircle> circles = predicted;
    for (size_t k = 0; k < std::min<size_t>(fm.peaks.size(), 2); ++k)
        circles.push_back({fm.peaks[k].location.x(), fm.peaks[k].location.y(), fm.peaks[k].sign});
    LiftOptions opt;
    opt.grid_step = st.cfg.grid_step;
    opt.mask_radius = st.cfg.mask_radius;
    Lift3D lift = lift_field(dom, last.u, circles, opt);
    write_lift_csv(lift, st.out / "lift3d.csv");
    note(st, st.out / "lift3d.csv");
    write_geodesics_json(predicted, st.out / "geodesics.json");
    note(st, st.out / "geodesics.json");
    json j;
    j["grid_step"] = lift.grid_step;
    j["mask_radius"] = opt.mask_radius;
    j["fd_residual_max"] = lift.fd_residual_max;
    j["fd_points"] = lift.fd_points;
    atomic_write(st.out / "lift_residual.json", j.dump(2) + "\n");
    note(st, st.out / "lift_residual.json");
}

void step_report(PipelineState& st) {
    if (st.conc.rows.empty() && !st.branch.points.empty()) step_diagnose(st);
    if (!st.conc.rows.empty()) {
        ChartSeries energy_series;
        for (const auto& row : st.conc.rows) {
            energy_series.x.push_back(std::log10(1.0 / row.lambda));
            energy_series.y.push_back(row.energy);
        }
        write_svg_chart({energy_series}, "energy along the branch", "log10(1/lambda)", "E",
                        st.out / "energy.svg");
        note(st, st.out / "energy.svg");
    }
    if (!st.branch.points.empty()) {
        const BranchPoint& last = st.branch.points.back();
        FluxMeasure fm = flux_measure(last.u, last.lambda, st.weight, st.B);
        ChartSeries dens;
        double arc = 0;
        const Mesh& mesh = *last.u.mesh;
        for (int i = 0; i < mesh.n_boundary; ++i) {
            dens.x.push_back(arc);
            dens.y.push_back(fm.density[i]);
            arc += mesh.boundary_edge_length(i);
        }
        dens.color = "#b23a1f";
        write_svg_chart({dens}, "boundary flux density", "arclength", "lambda*sinh(u)",
                        st.out / "flux_density.svg");
        note(st, st.out / "flux_density.svg");
    }
}

void evaluate_asserts(PipelineState& st) {
    const auto& cfg = st.cfg;
    if (!cfg.has_asserts) return;
    auto record = [&](const std::string& name, bool ok) {
        st.assert_results.push_back({name, ok});
    };
    if (st.conc.rows.empty()) step_diagnose(st);
    const ConcentrationRow* final_row = st.conc.rows.empty() ? nullptr : &st.conc.rows.back();

    if (cfg.assert_peaks >= 0)
        record("peaks == " + std::to_string(cfg.assert_peaks),
               final_row && int(final_row->peaks.size()) == cfg.assert_peaks);
    if (cfg.assert_peak_dist >= 0) {
        bool ok = final_row && !final_row->peaks.empty();
        if (ok)
            for (const auto& pk : final_row->peaks) ok = ok && pk.dist_to_predicted <= cfg.assert_peak_dist;
        record("peak distance <= " + fmt15(cfg.assert_peak_dist), ok);
    }
    if (cfg.assert_flux_mass_rel >= 0) {
        bool ok = final_row && final_row->peaks.size() >= 2;
        if (ok)
            for (const auto& pk : final_row->peaks)
                ok = ok && std::abs(std::abs(pk.mass_unweighted) - 2 * kPi) <=
                               cfg.assert_flux_mass_rel * 2 * kPi;
        record("flux masses within " + fmt15(cfg.assert_flux_mass_rel) + " of 2pi", ok);
    }
    if (cfg.assert_energy_ratio_min >= 0 && cfg.assert_energy_ratio_max > 0) {
        bool ok = !st.conc.rows.empty();
        for (const auto& row : st.conc.rows)
            ok = ok && row.energy_over_log >= cfg.assert_energy_ratio_min &&
                 row.energy_over_log <= cfg.assert_energy_ratio_max;
        record("energy/log(1/lambda) in [" + fmt15(cfg.assert_energy_ratio_min) + "," +
                   fmt15(cfg.assert_energy_ratio_max) + "]",
               ok);
    }
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    PipelineState st;
    st.cfg = cfg;
    st.out = out_dir;
    fs::create_directories(out_dir);

    st.curve = cfg.make_curve();
    st.weight = weight_from_expression(cfg.weight_expr);
    auto [a0, a1] = weight_bounds_on(st.weight, st.curve);
    st.weight.a0 = a0;
    st.weight.a1 = a1;
    st.crit = boundary_critical_points(st.weight, st.curve);

    for (const std::string& step : cfg.steps) {
        if (step == "mesh") step_mesh(st);
        else if (step == "spectrum") step_spectrum(st);
        else if (step == "green") step_green(st);
        else if (step == "ansatz") step_ansatz(st);
        else if (step == "solve") step_solve(st);
        else if (step == "diagnose") step_diagnose(st);
        else if (step == "axisym") step_axisym(st);
        else if (step == "report") step_report(st);
    }
    evaluate_asserts(st);

    json manifest;
    manifest["tool"] = "steklab";
    manifest["version"] = "1.0.0";
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.raw_text)));
    manifest["config_hash"] = std::string(hash);
    manifest["weight_bounds"] = {st.weight.a0, st.weight.a1};
    manifest["tolerances"] = {{"newton_tol", 1e-11},
                              {"neumann_residual", 1e-10},
                              {"eigen_residual", 1e-8},
                              {"compat_tol", NeumannSolver::kCompatTol}};
    manifest["steps"] = cfg.steps;
    manifest["artifacts"] = st.artifacts;
    // nonzero exit iff an assert fails; a failed branch without asserts is
    // reported on stderr but does not flip the status
    manifest["asserts"] = json::array();
    manifest["branch_terminated_early"] = st.branch.terminated_early;
    bool all_ok = true;
    for (const auto& [name, ok] : st.assert_results) {
        manifest["asserts"].push_back({{"name", name}, {"pass", ok}});
        all_ok = all_ok && ok;
    }
    atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& [name, ok] : st.assert_results)
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
    return all_ok ? 0 : 1;
}

} // namespace steklab
