#pragma once

#include "clutterfit/deform.hpp"
#include "clutterfit/templates.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clutterfit {

inline constexpr std::int32_t kBackground = -1;
inline constexpr std::uint16_t kBackgroundPixel = 0xFFFF;

using LabelImage = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Pixel {
    int x = 0;
    int y = 0;
    double depth = 0.0;
};

/// Pinhole camera. The pose maps camera coordinates (x right, y down, z
/// forward) to world coordinates.
struct CameraModel {
    RigidPose pose;
    int width = 160;
    int height = 120;
    double focal = 100.0;
    Eigen::Vector2d principal{80.0, 60.0};

    static CameraModel look_at(const Vector3d& eye, const Vector3d& target, const Vector3d& up, int width,
                               int height, double focal);

    void validate() const;

    /// Pixel hit by a world point, or nothing when the point is behind the
    /// camera or outside the image.
    std::optional<Pixel> project(const Vector3d& world) const;
};

struct Workspace {
    double half_x = 0.3;
    double half_y = 0.3;

    double diagonal() const { return 2.0 * std::hypot(half_x, half_y); }
};

struct RigConfig {
    int width = 160;
    int height = 120;
    double side_elevation_deg = 15.0;
    double distance_factor = 1.2;  // times the workspace diagonal
    double target_height = 0.04;
};

/// One overhead camera plus four side cameras 90 degrees apart.
std::vector<CameraModel> default_rig(const Workspace& workspace, const RigConfig& rig = {});

struct RenderConfig {
    double samples_per_m2 = 2.0e5;
    std::size_t min_samples = 800;
    int occlusion_radius = 1;       // neighborhood (pixels) for the depth test
    double depth_tolerance = 0.015; // m
};

struct SceneConfig {
    int object_count = 5;
    std::vector<std::string> categories;  // empty: every category in the registry
    double alpha_min = 0.7;
    double alpha_max = 1.3;
    double epsilon_min = -0.3;
    double epsilon_max = 0.5;
    Workspace workspace;
    double max_overlap = 0.15;
    int max_attempts = 10000;
    RigConfig rig;
    RenderConfig render;

    void validate() const;
};

struct SceneInstance {
    std::int32_t id = 0;
    std::string category;
    DeformationParams params;
    RigidPose pose;
};

struct PlacedInstance {
    std::int32_t id = 0;
    TriangleMesh mesh;  // world frame
};

struct ViewData {
    PointCloud cloud;  // labels and view ids always present
    LabelImage labels;
};

struct SceneDescription {
    std::vector<SceneInstance> instances;
    std::vector<CameraModel> cameras;
    std::vector<ViewData> views;
    TemplateRegistry registry;

    /// Union of per-view clouds in view order.
    PointCloud fused_cloud() const;
    /// Offset of view k's first point in the fused cloud.
    std::size_t view_offset(std::size_t view) const;
    /// Deformed template in world frame.
    TriangleMesh instance_mesh(std::size_t index) const;
    void validate() const;
};

struct Mask {
    std::string category;
    MaskImage pixels;  // height x width, nonzero = inside

    friend bool operator==(const Mask& a, const Mask& b) {
        return a.category == b.category && a.pixels.rows() == b.pixels.rows() &&
               a.pixels.cols() == b.pixels.cols() && (a.pixels == b.pixels).all();
    }
};

struct ViewMasks {
    int width = 0;
    int height = 0;
    std::vector<Mask> masks;

    friend bool operator==(const ViewMasks&, const ViewMasks&) = default;
};

struct MaskSet {
    std::vector<ViewMasks> views;

    std::size_t mask_count() const;
    /// Throws if any two masks of one view share a pixel.
    void validate() const;

    friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

struct NoiseConfig {
    int erode_radius = 0;
    double flip_probability = 0.0;
    double drop_probability = 0.0;

    void validate() const;
};

/// Places `object_count` deformed instances and renders every camera.
SceneDescription generate_scene(const SceneConfig& config, const TemplateRegistry& registry, std::uint64_t seed);

/// Z-buffer over dense surface samples of every instance; one kept point per
/// pixel at most, labeled with its source instance.
std::vector<ViewData> render_views(std::span<const PlacedInstance> instances, std::span<const CameraModel> cameras,
                                   const RenderConfig& config, std::uint64_t seed);

/// Ground-truth masks read off the label images.
MaskSet truth_masks(const SceneDescription& scene);

/// Per mask: drop with probability q, else flip category with probability p
/// (to a uniformly chosen other category), then erode by a square window.
MaskSet corrupt_masks(const MaskSet& truth, const NoiseConfig& noise, std::span<const std::string> categories,
                      std::uint64_t seed);

}  // namespace clutterfit
