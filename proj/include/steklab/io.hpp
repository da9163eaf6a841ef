#ifndef STEKLAB_IO_HPP
#define STEKLAB_IO_HPP

#include "steklab/axisym.hpp"
#include "steklab/diagnostics.hpp"
#include "steklab/fem.hpp"
#include "steklab/greens.hpp"
#include "steklab/solver.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace steklab {

namespace fs = std::filesystem;

std::string fmt17(double v);  // 17 significant digits
std::string fmt15(double v);  // 15 significant digits (mesh files)

// write-to-temp then rename, so partial files never appear under the target name
void atomic_write(const fs::path& path, const std::string& content);

// Mesh file: "nodes N triangles T boundary B" header, then node, triangle and
// boundary lines, whitespace-separated.
void write_mesh(const Mesh& mesh, const fs::path& path);
Mesh read_mesh(const fs::path& path);

// Field CSV: header "node_id,value", 17 significant digits.
void write_field_csv(const Field& f, const fs::path& path);
Vec read_field_csv(const fs::path& path);

void write_spectrum_csv(const std::vector<double>& eigenvalues,
                        const std::vector<double>& residuals, const fs::path& path);

void write_green_table(const GreenTable& table, const fs::path& dir);

void write_branch(const Branch& branch, const fs::path& dir);

void write_concentration_csv(const ConcentrationReport& rep, const fs::path& path);

void write_lift_csv(const Lift3D& lift, const fs::path& path);
void write_geodesics_json(const std::vector<GeodesicCircle>& geodesics, const fs::path& path);

// Simple deterministic SVG polyline chart.
struct ChartSeries {
    std::vector<double> x, y;
    std::string color = "#1f6fb2";
};
void write_svg_chart(const std::vector<ChartSeries>& series, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel, const fs::path& path);

} // namespace steklab

#endif
