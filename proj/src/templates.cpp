#include "clutterfit/templates.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace clutterfit {
namespace {

using TriangleList = std::vector<Eigen::Vector3i>;

TriangleMesh assemble(const std::vector<Vector3d>& vertices, const TriangleList& triangles) {
    TriangleMesh mesh;
    mesh.vertices.resize(3, static_cast<Eigen::Index>(vertices.size()));
    for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = vertices[i];
    mesh.triangles.resize(3, static_cast<Eigen::Index>(triangles.size()));
    for (std::size_t i = 0; i < triangles.size(); ++i) mesh.triangles.col(static_cast<Eigen::Index>(i)) = triangles[i];
    center_on_centroid(mesh);
    mesh.validate();
    return mesh;
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be positive");
    }
}

// Closed surface of revolution-like stack: `rings` is a list of (radius_x,
// radius_y, z) loops from bottom to top. Optional single-vertex caps close
// the ends (a cap vertex is placed at the loop's axis point).
TriangleMesh ring_stack(const std::vector<Eigen::Vector3d>& rings, int segments, bool cap_bottom, bool cap_top,
                        double bottom_pole_z, double top_pole_z) {
    if (segments < 3) throw Error(ErrorKind::InvalidArgument, "segments must be >= 3");
    std::vector<Vector3d> v;
    TriangleList t;
    const int n = segments;
    for (const auto& ring : rings) {
        for (int s = 0; s < n; ++s) {
            const double theta = 2.0 * std::numbers::pi * s / n;
            v.emplace_back(ring[0] * std::cos(theta), ring[1] * std::sin(theta), ring[2]);
        }
    }
    const int ring_count = static_cast<int>(rings.size());
    for (int r = 0; r + 1 < ring_count; ++r) {
        for (int s = 0; s < n; ++s) {
            const int a = r * n + s, b = r * n + (s + 1) % n;
            const int c = (r + 1) * n + s, d = (r + 1) * n + (s + 1) % n;
            t.emplace_back(a, b, d);
            t.emplace_back(a, d, c);
        }
    }
    if (cap_bottom) {
        const int pole = static_cast<int>(v.size());
        v.emplace_back(0.0, 0.0, bottom_pole_z);
        for (int s = 0; s < n; ++s) t.emplace_back(pole, (s + 1) % n, s);
    }
    if (cap_top) {
        const int pole = static_cast<int>(v.size());
        v.emplace_back(0.0, 0.0, top_pole_z);
        const int base = (ring_count - 1) * n;
        for (int s = 0; s < n; ++s) t.emplace_back(pole, base + s, base + (s + 1) % n);
    }
    return assemble(v, t);
}

double param(const TemplateSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

}  // namespace

void center_on_centroid(TriangleMesh& mesh) {
    if (mesh.vertices.cols() == 0) return;
    const Vector3d centroid = mesh.vertices.rowwise().mean();
    mesh.vertices.colwise() -= centroid;
}

TriangleMesh make_box(double size_x, double size_y, double size_z) {
    require_positive(size_x, "box size_x");
    require_positive(size_y, "box size_y");
    require_positive(size_z, "box size_z");
    const double x = 0.5 * size_x, y = 0.5 * size_y, z = 0.5 * size_z;
    const std::vector<Vector3d> v{{-x, -y, -z}, {x, -y, -z}, {x, y, -z}, {-x, y, -z},
                                  {-x, -y, z},  {x, -y, z},  {x, y, z},  {-x, y, z}};
    const TriangleList t{{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                         {1, 2, 6}, {1, 6, 5}, {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
    return assemble(v, t);
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
    return make_tapered_cylinder(radius, radius, height, segments);
}

TriangleMesh make_tapered_cylinder(double bottom_radius, double top_radius, double height, int segments) {
    require_positive(bottom_radius, "bottom radius");
    require_positive(top_radius, "top radius");
    require_positive(height, "height");
    const double h = 0.5 * height;
    return ring_stack({{bottom_radius, bottom_radius, -h}, {top_radius, top_radius, h}}, segments, true, true, -h, h);
}

TriangleMesh make_capped_ellipsoid(double rx, double ry, double rz, double cut, int segments, int rings) {
    require_positive(rx, "rx");
    require_positive(ry, "ry");
    require_positive(rz, "rz");
    if (!(cut >= 0.0 && cut < 1.0)) throw Error(ErrorKind::InvalidArgument, "cut must be in [0, 1)");
    if (rings < 2) throw Error(ErrorKind::InvalidArgument, "rings must be >= 2");
    // polar angle measured from the top pole; the cut plane sits at z = -rz + cut * 2 rz
    const double z_cut = -rz + 2.0 * cut * rz;
    const double phi_max = cut > 0.0 ? std::acos(std::clamp(z_cut / rz, -1.0, 1.0)) : std::numbers::pi;
    std::vector<Eigen::Vector3d> loops;
    // loops from bottom to top, excluding the poles
    const int first = cut > 0.0 ? 0 : 1;
    for (int r = first; r < rings; ++r) {
        const double phi = phi_max * (1.0 - static_cast<double>(r) / rings);
        loops.emplace_back(rx * std::sin(phi), ry * std::sin(phi), rz * std::cos(phi));
    }
    const double bottom_z = cut > 0.0 ? z_cut : -rz;
    return ring_stack(loops, segments, true, true, bottom_z, rz);
}

TemplateRegistry TemplateRegistry::defaults() {
    TemplateRegistry reg;
    reg.add("box", {"box", {{"size_x", 0.10}, {"size_y", 0.07}, {"size_z", 0.05}}});
    reg.add("can", {"cylinder", {{"radius", 0.035}, {"height", 0.11}, {"segments", 24}}});
    reg.add("bucket", {"cylinder", {{"radius", 0.055}, {"height", 0.13}, {"segments", 24}}});
    reg.add("bowl",
            {"tapered_cylinder", {{"bottom_radius", 0.04}, {"top_radius", 0.07}, {"height", 0.06}, {"segments", 24}}});
    reg.add("fruit", {"capped_ellipsoid",
                      {{"rx", 0.04}, {"ry", 0.04}, {"rz", 0.045}, {"cut", 0.15}, {"segments", 24}, {"rings", 12}}});
    return reg;
}

void TemplateRegistry::add(const std::string& category, TemplateSpec spec) {
    if (category.empty()) throw Error(ErrorKind::InvalidArgument, "empty category name");
    specs_[category] = std::move(spec);
}

std::vector<std::string> TemplateRegistry::categories() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : specs_) out.push_back(name);
    return out;
}

const TemplateSpec& TemplateRegistry::spec(const std::string& category) const {
    auto it = specs_.find(category);
    if (it == specs_.end()) throw Error(ErrorKind::InvalidArgument, "unknown category '" + category + "'");
    return it->second;
}

CategoryTemplate TemplateRegistry::build(const std::string& category) const {
    const TemplateSpec& s = spec(category);
    const int segments = static_cast<int>(param(s, "segments", 24));
    CategoryTemplate tmpl;
    tmpl.category = category;
    if (s.generator == "box") {
        tmpl.mesh = make_box(param(s, "size_x", 0.1), param(s, "size_y", 0.1), param(s, "size_z", 0.1));
    } else if (s.generator == "cylinder") {
        tmpl.mesh = make_cylinder(param(s, "radius", 0.04), param(s, "height", 0.1), segments);
    } else if (s.generator == "tapered_cylinder") {
        tmpl.mesh = make_tapered_cylinder(param(s, "bottom_radius", 0.04), param(s, "top_radius", 0.06),
                                          param(s, "height", 0.06), segments);
    } else if (s.generator == "capped_ellipsoid") {
        tmpl.mesh = make_capped_ellipsoid(param(s, "rx", 0.04), param(s, "ry", 0.04), param(s, "rz", 0.04),
                                          param(s, "cut", 0.0), segments, static_cast<int>(param(s, "rings", 12)));
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown template generator '" + s.generator + "'");
    }
    tmpl.validate();
    return tmpl;
}

std::string TemplateRegistry::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, s] : specs_) {
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (const auto& [k, v] : s.params) params[k] = v;
        j[name] = {{"generator", s.generator}, {"params", params}};
    }
    return j.dump(2);
}

TemplateRegistry TemplateRegistry::from_json(const std::string& text) {
    TemplateRegistry reg;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& [name, entry] : j.items()) {
            TemplateSpec s;
            s.generator = entry.at("generator").get<std::string>();
            if (entry.contains("params")) {
                for (const auto& [k, v] : entry.at("params").items()) s.params[k] = v.get<double>();
            }
            reg.add(name, std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Data, std::string("template manifest: ") + e.what());
    }
    return reg;
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void TemplateRegistry::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out << to_json() << '\n';
}

}  // namespace clutterfit
