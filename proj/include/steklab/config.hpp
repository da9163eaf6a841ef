#ifndef STEKLAB_CONFIG_HPP
#define STEKLAB_CONFIG_HPP

#include "steklab/geometry.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace steklab {

// Flat key-value experiment configuration with [section] headers.
struct ExperimentConfig {
    // [domain]
    std::string domain_type = "circle";  // circle | ellipse | star | spline
    Vec2 center{0, 0};
    double radius = 1.0;
    double rx = 1.0, ry = 1.0;
    double star_eps = 0.0;
    int star_k = 3;
    std::string spline_file;

    // [weight]
    std::string weight_expr = "one";

    // [mesh]
    double h_max = 0.05;
    double grade_factor = 10.0;  // local_h = lambda_end * mu / grade_factor
    std::vector<GradingPoint> extra_grading;

    // [lambda]
    double lambda_start = 0.1;
    double lambda_end = 0.01;
    double lambda_factor = 0.8;

    // [seed]
    std::string seed_type = "ansatz";  // ansatz | eigen | zero
    int eigen_index = 1;
    double eigen_amplitude = 0.5;
    // ansatz points: curve parameters; negative means "pick the first maximum
    // and the first minimum of the weight automatically"
    double ansatz_t1 = -1, ansatz_t2 = -1;
    std::vector<std::string> deflate_files;  // known-solution CSVs to deflate

    // [green]
    std::array<double, 3> green_ladder{0.08, 0.04, 0.02};

    // [spectrum]
    int spectrum_count = 6;
    bool spectrum_fields = false;  // dump eigenfield CSVs

    // [norms]
    double sigma = 0.1;

    // [axisym]
    bool axisym = false;
    double grid_step = 0.12;
    double mask_radius = 0.6;

    // [assert]
    bool has_asserts = false;
    double assert_flux_mass_rel = -1;   // |mass| within this of 2 pi when >= 0
    int assert_peaks = -1;              // exact peak count at the final lambda
    double assert_peak_dist = -1;       // peak distance to predicted sites
    double assert_energy_ratio_min = -1, assert_energy_ratio_max = -1;

    // [output]
    std::string out_dir = "out";

    // [run]
    std::vector<std::string> steps{"mesh", "spectrum", "green", "ansatz",
                                   "solve", "diagnose", "report"};

    std::string raw_text;  // exact config contents, hashed into the manifest

    std::vector<double> lambda_schedule() const;
    BoundaryCurve make_curve() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace steklab

#endif
