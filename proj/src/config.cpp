#include "steklab/config.hpp"

#include "steklab/expr.hpp"

#include <fstream>
#include <sstream>

namespace steklab {

std::vector<double> ExperimentConfig::lambda_schedule() const {
    std::vector<double> s;
    double lam = lambda_start;
    while (lam > lambda_end * (1 + 1e-9)) {
        s.push_back(lam);
        lam *= lambda_factor;
    }
    if (s.empty() || s.back() > lambda_end * (1 + 1e-9))
        s.push_back(lambda_end);
    else
        s.back() = lambda_end;
    return s;
}

BoundaryCurve ExperimentConfig::make_curve() const {
    if (domain_type == "circle") return circle_curve(center, radius);
    if (domain_type == "ellipse") return ellipse_curve(center, rx, ry);
    if (domain_type == "star") return star_curve(center, radius, star_eps, star_k);
    if (domain_type == "spline") {
        std::ifstream is(spline_file);
        if (!is) throw Error("spline file not found: " + spline_file);
        std::vector<Vec2> pts;
        double x, y;
        while (is >> x >> y) pts.push_back(Vec2(x, y));
        return spline_curve(pts);
    }
    throw Error("unknown domain type '" + domain_type + "'");
}

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw Error("config line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.raw_text = text;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    bool grading_cleared = false;
    while (std::getline(is, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(lineno, "malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        auto num = [&](const std::string& v) {
            try {
                size_t used = 0;
                double d = std::stod(v, &used);
                if (trim(v.substr(used)).size()) fail(lineno, "trailing characters after number");
                return d;
            } catch (const std::invalid_argument&) {
                fail(lineno, "expected a number, got '" + v + "'");
            }
        };

        if (section == "domain") {
            if (key == "type") cfg.domain_type = val;
            else if (key == "cx") cfg.center.x() = num(val);
            else if (key == "cy") cfg.center.y() = num(val);
            else if (key == "radius") cfg.radius = num(val);
            else if (key == "rx") cfg.rx = num(val);
            else if (key == "ry") cfg.ry = num(val);
            else if (key == "eps") cfg.star_eps = num(val);
            else if (key == "k") cfg.star_k = int(num(val));
            else if (key == "file") cfg.spline_file = val;
            else fail(lineno, "unknown domain key '" + key + "'");
        } else if (section == "weight") {
            if (key == "expr") cfg.weight_expr = val;
            else fail(lineno, "unknown weight key '" + key + "'");
        } else if (section == "mesh") {
            if (key == "h_max") cfg.h_max = num(val);
            else if (key == "grade_factor") cfg.grade_factor = num(val);
            else if (key == "grading") {
                if (!grading_cleared) {
                    cfg.extra_grading.clear();
                    grading_cleared = true;
                }
                std::istringstream gs(val);
                double x, y, h;
                if (!(gs >> x >> y >> h)) fail(lineno, "grading needs 'x y local_h'");
                cfg.extra_grading.push_back({Vec2(x, y), h});
            } else fail(lineno, "unknown mesh key '" + key + "'");
        } else if (section == "lambda") {
            if (key == "start") cfg.lambda_start = num(val);
            else if (key == "end") cfg.lambda_end = num(val);
            else if (key == "factor") cfg.lambda_factor = num(val);
            else fail(lineno, "unknown lambda key '" + key + "'");
        } else if (section == "seed") {
            if (key == "type") cfg.seed_type = val;
            else if (key == "n") cfg.eigen_index = int(num(val));
            else if (key == "amp") cfg.eigen_amplitude = num(val);
            else if (key == "t1") cfg.ansatz_t1 = num(val);
            else if (key == "t2") cfg.ansatz_t2 = num(val);
            else if (key == "deflate") cfg.deflate_files.push_back(val);
            else fail(lineno, "unknown seed key '" + key + "'");
        } else if (section == "green") {
            if (key == "ladder") {
                std::istringstream gs(val);
                if (!(gs >> cfg.green_ladder[0] >> cfg.green_ladder[1] >> cfg.green_ladder[2]))
                    fail(lineno, "ladder needs three h values");
            } else fail(lineno, "unknown green key '" + key + "'");
        } else if (section == "spectrum") {
            if (key == "count") cfg.spectrum_count = int(num(val));
            else if (key == "fields") cfg.spectrum_fields = num(val) != 0;
            else fail(lineno, "unknown spectrum key '" + key + "'");
        } else if (section == "norms") {
            if (key == "sigma") cfg.sigma = num(val);
            else fail(lineno, "unknown norms key '" + key + "'");
        } else if (section == "axisym") {
            if (key == "grid") cfg.grid_step = num(val);
            else if (key == "mask_radius") cfg.mask_radius = num(val);
            else fail(lineno, "unknown axisym key '" + key + "'");
        } else if (section == "assert") {
            cfg.has_asserts = true;
            if (key == "flux_mass_rel") cfg.assert_flux_mass_rel = num(val);
            else if (key == "peaks") cfg.assert_peaks = int(num(val));
            else if (key == "peak_dist") cfg.assert_peak_dist = num(val);
            else if (key == "energy_ratio_min") cfg.assert_energy_ratio_min = num(val);
            else if (key == "energy_ratio_max") cfg.assert_energy_ratio_max = num(val);
            else fail(lineno, "unknown assert key '" + key + "'");
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = val;
            else fail(lineno, "unknown output key '" + key + "'");
        } else if (section == "run") {
            if (key == "steps") {
                cfg.steps.clear();
                std::istringstream ss(val);
                std::string step;
                while (std::getline(ss, step, ',')) {
                    step = trim(step);
                    if (!step.empty()) cfg.steps.push_back(step);
                }
            } else fail(lineno, "unknown run key '" + key + "'");
        } else {
            fail(lineno, "unknown section '" + section + "'");
        }
    }

    // validation
    if (cfg.lambda_start <= 0 || cfg.lambda_end <= 0)
        throw Error("config: lambda values must be positive");
    if (cfg.lambda_start < cfg.lambda_end)
        throw Error("config: lambda schedule must decrease (start >= end)");
    if (!(cfg.lambda_factor > 0 && cfg.lambda_factor < 1))
        throw Error("config: lambda factor must lie in (0,1)");
    if (!(cfg.green_ladder[0] > cfg.green_ladder[1] && cfg.green_ladder[1] > cfg.green_ladder[2]))
        throw Error("config: green ladder must be strictly decreasing");
    if (cfg.h_max <= 0) throw Error("config: h_max must be positive");
    for (const auto& step : cfg.steps) {
        static const std::vector<std::string> known{"mesh",  "spectrum", "green",  "ansatz",
                                                    "solve", "diagnose", "axisym", "report"};
        if (std::find(known.begin(), known.end(), step) == known.end())
            throw Error("config: unknown step '" + step + "'");
        if (step == "axisym") cfg.axisym = true;
    }
    if (cfg.domain_type == "spline" && !std::filesystem::exists(cfg.spline_file))
        throw Error("config: spline file does not exist: " + cfg.spline_file);
    for (const auto& f : cfg.deflate_files)
        if (!std::filesystem::exists(f)) throw Error("config: deflate file does not exist: " + f);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace steklab
