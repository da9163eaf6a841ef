#include "steklab/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace steklab {

using json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt15(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << content;
    }
    fs::rename(tmp, path);
}

void write_mesh(const Mesh& mesh, const fs::path& path) {
    std::ostringstream os;
    os << "nodes " << mesh.n_nodes() << " triangles " << mesh.n_triangles() << " boundary "
       << mesh.n_boundary << "\n";
    for (int i = 0; i < mesh.n_nodes(); ++i)
        os << i << " " << fmt15(mesh.nodes[i].x()) << " " << fmt15(mesh.nodes[i].y()) << "\n";
    for (int t = 0; t < mesh.n_triangles(); ++t)
        os << t << " " << mesh.triangles[t][0] << " " << mesh.triangles[t][1] << " "
           << mesh.triangles[t][2] << "\n";
    for (int b = 0; b < mesh.n_boundary; ++b)
        os << b << " " << b << " " << fmt15(mesh.boundary_param[b]) << "\n";
    atomic_write(path, os.str());
}

Mesh read_mesh(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open mesh file " + path.string());
    std::string kw1, kw2, kw3;
    int n, t, b;
    is >> kw1 >> n >> kw2 >> t >> kw3 >> b;
    if (kw1 != "nodes" || kw2 != "triangles" || kw3 != "boundary")
        throw Error("bad mesh header in " + path.string());
    Mesh mesh;
    mesh.nodes.resize(n);
    mesh.triangles.resize(t);
    mesh.n_boundary = b;
    mesh.boundary_param.resize(b);
    for (int i = 0; i < n; ++i) {
        int id;
        double x, y;
        is >> id >> x >> y;
        mesh.nodes[id] = Vec2(x, y);
    }
    for (int i = 0; i < t; ++i) {
        int id, a0, a1, a2;
        is >> id >> a0 >> a1 >> a2;
        mesh.triangles[id] = {a0, a1, a2};
    }
    for (int i = 0; i < b; ++i) {
        int id, node;
        double tp;
        is >> id >> node >> tp;
        mesh.boundary_param[id] = tp;
    }
    if (!is) throw Error("truncated mesh file " + path.string());
    double hmax = 0;
    for (const auto& tr : mesh.triangles)
        for (int e = 0; e < 3; ++e)
            hmax = std::max(hmax, (mesh.nodes[tr[e]] - mesh.nodes[tr[(e + 1) % 3]]).norm());
    mesh.h_max_edge = hmax;
    mesh.build_search_structures();
    return mesh;
}

void write_field_csv(const Field& f, const fs::path& path) {
    std::ostringstream os;
    os << "node_id,value\n";
    for (int i = 0; i < f.values.size(); ++i) os << i << "," << fmt17(f.values[i]) << "\n";
    atomic_write(path, os.str());
}

Vec read_field_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open field file " + path.string());
    std::string line;
    std::getline(is, line);  // header
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        vals.push_back(std::stod(line.substr(comma + 1)));
    }
    Vec v(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
    return v;
}

void write_spectrum_csv(const std::vector<double>& eigenvalues,
                        const std::vector<double>& residuals, const fs::path& path) {
    std::ostringstream os;
    os << "n,lambda,residual\n";
    for (size_t i = 0; i < eigenvalues.size(); ++i)
        os << i << "," << fmt17(eigenvalues[i]) << "," << fmt17(residuals[i]) << "\n";
    atomic_write(path, os.str());
}

void write_green_table(const GreenTable& table, const fs::path& dir) {
    fs::create_directories(dir);
    json index;
    index["mesh_ladder"] = {table.mesh_ladder[0], table.mesh_ladder[1], table.mesh_ladder[2]};
    index["weighted_normalization"] = table.weighted_normalization;
    index["sources"] = json::array();
    index["robin_diagonals"] = json::array();
    index["error_estimates"] = json::array();
    char name[64];
    for (size_t s = 0; s < table.sources.size(); ++s) {
        const auto& src = table.sources[s];
        std::snprintf(name, sizeof name, "g_%03zu.csv", s);
        write_field_csv(table.G[s], dir / name);
        std::string gname = name;
        std::snprintf(name, sizeof name, "h_%03zu.csv", s);
        write_field_csv(table.H[s], dir / name);
        index["sources"].push_back({{"index", src.index},
                                    {"t", src.t},
                                    {"x", src.point.x()},
                                    {"y", src.point.y()},
                                    {"node", src.node},
                                    {"g_file", gname},
                                    {"h_file", std::string(name)}});
        const auto& rd = table.robin[s];
        index["robin_diagonals"].push_back({{"t", rd.t},
                                            {"value", rd.value},
                                            {"error", rd.error},
                                            {"rate", rd.rate},
                                            {"extrapolated", rd.extrapolated},
                                            {"ladder_values", rd.ladder_values}});
        index["error_estimates"].push_back(rd.error);
    }
    atomic_write(dir / "index.json", index.dump(2) + "\n");
    write_mesh(*table.mesh, dir / "mesh.txt");
}

void write_branch(const Branch& branch, const fs::path& dir) {
    fs::create_directories(dir);
    json index;
    index["seed"] = branch.seed_description;
    index["terminated_early"] = branch.terminated_early;
    index["message"] = branch.message;
    index["points"] = json::array();
    char name[64];
    for (size_t i = 0; i < branch.points.size(); ++i) {
        const auto& bp = branch.points[i];
        std::snprintf(name, sizeof name, "u_%04zu.csv", i);
        write_field_csv(bp.u, dir / name);
        index["points"].push_back({{"lambda", bp.lambda},
                                   {"iterations", bp.iterations},
                                   {"scheduled", bp.scheduled},
                                   {"file", std::string(name)}});
    }
    atomic_write(dir / "index.json", index.dump(2) + "\n");
}

void write_concentration_csv(const ConcentrationReport& rep, const fs::path& path) {
    std::ostringstream os;
    os << "lambda,energy,energy_over_log,flux_total,xi1_err,xi2_err,mu1_fit,mu2_fit\n";
    for (const auto& row : rep.rows) {
        double x1 = row.peaks.size() > 0 ? row.peaks[0].dist_to_predicted : -1;
        double x2 = row.peaks.size() > 1 ? row.peaks[1].dist_to_predicted : -1;
        double m1 = row.peaks.size() > 0 ? row.peaks[0].mu_fit : 0;
        double m2 = row.peaks.size() > 1 ? row.peaks[1].mu_fit : 0;
        os << fmt17(row.lambda) << "," << fmt17(row.energy) << "," << fmt17(row.energy_over_log)
           << "," << fmt17(row.total_abs_flux) << "," << fmt17(x1) << "," << fmt17(x2) << ","
           << fmt17(m1) << "," << fmt17(m2) << "\n";
    }
    atomic_write(path, os.str());
}

void write_lift_csv(const Lift3D& lift, const fs::path& path) {
    std::ostringstream os;
    os << "y1,y2,y3,value\n";
    for (const auto& s : lift.samples)
        os << fmt17(s.y.x()) << "," << fmt17(s.y.y()) << "," << fmt17(s.y.z()) << ","
           << fmt17(s.value) << "\n";
    atomic_write(path, os.str());
}

void write_geodesics_json(const std::vector<GeodesicCircle>& geodesics, const fs::path& path) {
    json j = json::array();
    for (const auto& g : geodesics)
        j.push_back({{"radius", g.radius}, {"height", g.height}, {"sign", g.sign}});
    atomic_write(path, j.dump(2) + "\n");
}

void write_svg_chart(const std::vector<ChartSeries>& series, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel, const fs::path& path) {
    const int W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    if (xhi <= xlo) xhi = xlo + 1;
    if (yhi <= ylo) yhi = ylo + 1;
    auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
       << H - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double xv = xlo + k * (xhi - xlo) / 4;
        double yv = ylo + k * (yhi - ylo) / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt15(xv).substr(0, 9)
           << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt15(yv).substr(0, 9) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
       << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";
    for (const auto& s : series) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
        os << "\"/>\n";
    }
    os << "</svg>\n";
    atomic_write(path, os.str());
}

} // namespace steklab
