#pragma once

#include "clutterfit/deform.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace clutterfit {

// Procedural primitives. All are returned with the vertex centroid at the
// origin and z up.
TriangleMesh make_box(double size_x, double size_y, double size_z);
TriangleMesh make_cylinder(double radius, double height, int segments = 24);
TriangleMesh make_tapered_cylinder(double bottom_radius, double top_radius, double height, int segments = 24);
/// Ellipsoid with the bottom `cut` fraction of its height sliced off and
/// closed by a flat disk. cut == 0 gives a closed ellipsoid with two poles.
TriangleMesh make_capped_ellipsoid(double rx, double ry, double rz, double cut, int segments = 24,
                                   int rings = 12);

void center_on_centroid(TriangleMesh& mesh);

struct TemplateSpec {
    std::string generator;  // box | cylinder | tapered_cylinder | capped_ellipsoid
    std::map<std::string, double> params;
};

/// Category -> generator mapping, persisted as a JSON manifest.
class TemplateRegistry {
public:
    static TemplateRegistry defaults();
    static TemplateRegistry from_json(const std::string& text);
    static TemplateRegistry load(const std::filesystem::path& path);

    std::string to_json() const;
    void save(const std::filesystem::path& path) const;

    void add(const std::string& category, TemplateSpec spec);
    bool contains(const std::string& category) const { return specs_.count(category) > 0; }
    std::vector<std::string> categories() const;
    const TemplateSpec& spec(const std::string& category) const;

    CategoryTemplate build(const std::string& category) const;

private:
    std::map<std::string, TemplateSpec> specs_;
};

}  // namespace clutterfit
