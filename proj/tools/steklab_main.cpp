#include "steklab/asymptotics.hpp"
#include "steklab/diagnostics.hpp"
#include "steklab/expr.hpp"
#include "steklab/io.hpp"
#include "steklab/pipeline.hpp"
#include "steklab/spectrum.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

using namespace steklab;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    int threads = 0;
};

ExperimentConfig load(const Common& c) {
    if (c.config.empty()) throw Error("--config is required");
    ExperimentConfig cfg = load_config(c.config);
    if (!c.out.empty()) cfg.out_dir = c.out;
    return cfg;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "experiment config file");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "OpenMP thread count (0 = runtime default)");
}

void apply_seed_spec(ExperimentConfig& cfg, const std::string& seed_spec) {
    if (seed_spec.empty()) return;
    // seed spec: eigen:n:amp | ansatz[:t1:t2] | zero
    std::istringstream ss(seed_spec);
    std::string kind;
    std::getline(ss, kind, ':');
    cfg.seed_type = kind;
    if (kind == "eigen") {
        std::string n, amp;
        std::getline(ss, n, ':');
        std::getline(ss, amp, ':');
        if (!n.empty()) cfg.eigen_index = std::stoi(n);
        if (!amp.empty()) cfg.eigen_amplitude = std::stod(amp);
    } else if (kind == "ansatz") {
        std::string t1, t2;
        std::getline(ss, t1, ':');
        std::getline(ss, t2, ':');
        if (!t1.empty()) cfg.ansatz_t1 = std::stod(t1);
        if (!t2.empty()) cfg.ansatz_t2 = std::stod(t2);
    }
}

int run_steps(const Common& c, std::vector<std::string> steps, const std::string& seed_spec) {
    if (c.threads > 0) omp_set_num_threads(c.threads);
    ExperimentConfig cfg = load(c);
    cfg.steps = std::move(steps);
    apply_seed_spec(cfg, seed_spec);
    return run_experiment(cfg, cfg.out_dir);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"steklab: anisotropic nonlinear Steklov laboratory"};
    app.require_subcommand(1);

    Common c;
    std::string seed_spec;
    std::vector<std::string> deflate_files;
    double lambda_start = 0, lambda_end = 0, lambda_factor = 0;

    auto* cmd_run = app.add_subcommand("run", "run the configured pipeline end to end");
    add_common(cmd_run, c);

    auto* cmd_mesh = app.add_subcommand("mesh", "build and write the base mesh");
    add_common(cmd_mesh, c);

    auto* cmd_spectrum = app.add_subcommand("spectrum", "linear Steklov spectrum");
    add_common(cmd_spectrum, c);

    auto* cmd_green = app.add_subcommand("green", "Green function table and Robin diagonals");
    add_common(cmd_green, c);

    auto* cmd_ansatz = app.add_subcommand("ansatz", "two-bubble approximation and residual");
    add_common(cmd_ansatz, c);

    auto* cmd_solve = app.add_subcommand("solve", "solve the branch from the configured seed");
    add_common(cmd_solve, c);
    cmd_solve->add_option("--seed-spec", seed_spec, "seed override: eigen:n:amp | ansatz | zero");
    cmd_solve->add_option("--deflate", deflate_files, "field CSVs of known solutions to deflate");

    auto* cmd_continue = app.add_subcommand("continue", "alias of solve with schedule overrides");
    add_common(cmd_continue, c);
    cmd_continue->add_option("--seed-spec", seed_spec, "seed override: eigen:n:amp | ansatz | zero");
    cmd_continue->add_option("--deflate", deflate_files, "field CSVs of known solutions to deflate");
    cmd_continue->add_option("--lambda-start", lambda_start, "first lambda");
    cmd_continue->add_option("--lambda-end", lambda_end, "last lambda");
    cmd_continue->add_option("--lambda-factor", lambda_factor, "multiplicative step in (0,1)");

    auto* cmd_diag = app.add_subcommand("diagnose", "energies, fluxes and concentration report");
    add_common(cmd_diag, c);

    auto* cmd_axi = app.add_subcommand("axisym", "lift the final solution to the 3D torus");
    add_common(cmd_axi, c);

    auto* cmd_report = app.add_subcommand("report", "SVG charts and manifest");
    add_common(cmd_report, c);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            if (c.threads > 0) omp_set_num_threads(c.threads);
            ExperimentConfig cfg = load(c);
            return run_experiment(cfg, cfg.out_dir);
        }
        if (cmd_mesh->parsed()) return run_steps(c, {"mesh"}, "");
        if (cmd_spectrum->parsed()) return run_steps(c, {"mesh", "spectrum"}, "");
        if (cmd_green->parsed()) return run_steps(c, {"green"}, "");
        if (cmd_ansatz->parsed()) return run_steps(c, {"green", "ansatz"}, "");
        if (cmd_solve->parsed() || cmd_continue->parsed()) {
            if (c.threads > 0) omp_set_num_threads(c.threads);
            ExperimentConfig cfg = load(c);
            cfg.steps = {"solve"};
            apply_seed_spec(cfg, seed_spec);
            for (const auto& f : deflate_files) cfg.deflate_files.push_back(f);
            if (lambda_start > 0) cfg.lambda_start = lambda_start;
            if (lambda_end > 0) cfg.lambda_end = lambda_end;
            if (lambda_factor > 0) cfg.lambda_factor = lambda_factor;
            return run_experiment(cfg, cfg.out_dir);
        }
        if (cmd_diag->parsed()) return run_steps(c, {"solve", "diagnose"}, "");
        if (cmd_axi->parsed()) return run_steps(c, {"solve", "diagnose", "axisym"}, "");
        if (cmd_report->parsed()) return run_steps(c, {"solve", "diagnose", "report"}, "");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
