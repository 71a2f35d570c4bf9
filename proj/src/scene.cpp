#include "clutterfit/scene.hpp"

#include "clutterfit/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

namespace clutterfit {

CameraModel CameraModel::look_at(const Vector3d& eye, const Vector3d& target, const Vector3d& up, int width,
                                 int height, double focal) {
    const Vector3d forward = (target - eye).normalized();
    Vector3d right = forward.cross(up);
    if (right.norm() < 1e-9) throw Error(ErrorKind::InvalidArgument, "look_at: up is parallel to view direction");
    right.normalize();
    const Vector3d down = forward.cross(right);
    CameraModel cam;
    cam.pose.rotation.col(0) = right;
    cam.pose.rotation.col(1) = down;
    cam.pose.rotation.col(2) = forward;
    cam.pose.translation = eye;
    cam.width = width;
    cam.height = height;
    cam.focal = focal;
    cam.principal = {0.5 * width, 0.5 * height};
    return cam;
}

void CameraModel::validate() const {
    pose.validate();
    if (width < 16 || height < 16) throw Error(ErrorKind::InvalidArgument, "camera image must be at least 16x16");
    if (!(focal > 0.0)) throw Error(ErrorKind::InvalidArgument, "camera focal length must be positive");
}

std::optional<Pixel> CameraModel::project(const Vector3d& world) const {
    const Vector3d c = pose.rotation.transpose() * (world - pose.translation);
    if (c.z() <= 1e-6) return std::nullopt;
    const double u = focal * c.x() / c.z() + principal.x();
    const double v = focal * c.y() / c.z() + principal.y();
    if (!(u >= 0.0 && v >= 0.0 && u < width && v < height)) return std::nullopt;
    return Pixel{static_cast<int>(std::floor(u)), static_cast<int>(std::floor(v)), c.z()};
}

std::vector<CameraModel> default_rig(const Workspace& workspace, const RigConfig& rig) {
    const double distance = rig.distance_factor * workspace.diagonal();
    // fit the workspace's bounding circle (with margin) into the short image side
    const double radius = 0.55 * workspace.diagonal();
    const double half_angle = std::asin(std::min(0.99, radius / distance));
    const double focal = 0.5 * std::min(rig.width, rig.height) / std::tan(half_angle);
    const Vector3d target(0.0, 0.0, rig.target_height);

    std::vector<CameraModel> cams;
    cams.push_back(CameraModel::look_at(target + Vector3d(0.0, 0.0, distance), target, Vector3d::UnitY(), rig.width,
                                        rig.height, focal));
    const double elev = rig.side_elevation_deg * std::numbers::pi / 180.0;
    for (int k = 0; k < 4; ++k) {
        const double az = k * 0.5 * std::numbers::pi;
        const Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
        cams.push_back(CameraModel::look_at(target + distance * dir, target, Vector3d::UnitZ(), rig.width, rig.height,
                                            focal));
    }
    return cams;
}

void SceneConfig::validate() const {
    if (object_count < 1 || object_count > 30) {
        throw Error(ErrorKind::InvalidArgument, "object count must be in [1, 30]");
    }
    const DeformationParams lo{alpha_min, alpha_min, alpha_min, epsilon_min};
    const DeformationParams hi{alpha_max, alpha_max, alpha_max, epsilon_max};
    if (!lo.within_bounds() || !hi.within_bounds() || alpha_min > alpha_max || epsilon_min > epsilon_max) {
        throw Error(ErrorKind::InvalidArgument, "scene parameter ranges must lie within deformation bounds");
    }
    if (!(workspace.half_x > 0.0 && workspace.half_y > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "workspace extent must be positive");
    }
    if (!(max_overlap >= 0.0 && max_overlap < 1.0) || max_attempts < 1) {
        throw Error(ErrorKind::InvalidArgument, "invalid placement settings");
    }
}

PointCloud SceneDescription::fused_cloud() const {
    PointCloud fused;
    for (const ViewData& v : views) fused.append(v.cloud);
    return fused;
}

std::size_t SceneDescription::view_offset(std::size_t view) const {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < view; ++k) offset += views[k].cloud.size();
    return offset;
}

TriangleMesh SceneDescription::instance_mesh(std::size_t index) const {
    const SceneInstance& inst = instances.at(index);
    TriangleMesh mesh = deform_template(registry.build(inst.category), inst.params);
    mesh.vertices = inst.pose.apply(mesh.vertices);
    return mesh;
}

void SceneDescription::validate() const {
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].id != static_cast<std::int32_t>(i)) {
            throw Error(ErrorKind::Data, "instance ids must be contiguous from 0");
        }
        instances[i].params.validate();
        instances[i].pose.validate();
    }
    if (views.size() != cameras.size()) throw Error(ErrorKind::Data, "view count does not match camera count");
    const auto n = static_cast<std::int32_t>(instances.size());
    for (const ViewData& v : views) {
        v.cloud.validate();
        if (v.cloud.labels.size() != v.cloud.size()) throw Error(ErrorKind::Data, "view cloud lacks labels");
        for (auto l : v.cloud.labels) {
            if (l != kBackground && (l < 0 || l >= n)) throw Error(ErrorKind::Data, "label outside instance range");
        }
    }
}

std::size_t MaskSet::mask_count() const {
    std::size_t n = 0;
    for (const auto& v : views) n += v.masks.size();
    return n;
}

void MaskSet::validate() const {
    for (std::size_t k = 0; k < views.size(); ++k) {
        const ViewMasks& v = views[k];
        MaskImage used = MaskImage::Zero(v.height, v.width);
        for (const Mask& m : v.masks) {
            if (m.pixels.rows() != v.height || m.pixels.cols() != v.width) {
                throw Error(ErrorKind::ShapeMismatch, "mask size differs from view size in view " + std::to_string(k));
            }
            if (((used != 0) && (m.pixels != 0)).any()) {
                throw Error(ErrorKind::Data, "overlapping masks in view " + std::to_string(k));
            }
            used = (used != 0 || m.pixels != 0).cast<std::uint8_t>();
        }
    }
}

void NoiseConfig::validate() const {
    if (erode_radius < 0) throw Error(ErrorKind::InvalidArgument, "erode radius must be non-negative");
    if (!(flip_probability >= 0.0 && flip_probability < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "flip probability must be in [0, 1)");
    }
    // q = 1 is accepted: it is the degenerate drop-everything setting
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "drop probability must be in [0, 1]");
    }
}

namespace {

float quantize(double v) { return static_cast<float>(v); }

}  // namespace

std::vector<ViewData> render_views(std::span<const PlacedInstance> instances, std::span<const CameraModel> cameras,
                                   const RenderConfig& config, std::uint64_t seed) {
    // dense surface samples, rounded to float32 so the stored clouds project
    // to the same pixels after a PLY round trip
    Matrix3Xd points;
    std::vector<std::int32_t> labels;
    for (const PlacedInstance& inst : instances) {
        const double area = inst.mesh.surface_area();
        const auto n = std::max(config.min_samples, static_cast<std::size_t>(std::ceil(area * config.samples_per_m2)));
        PointCloud s = sample_mesh_surface(inst.mesh, n, derive_seed(seed, stage::render, static_cast<std::uint64_t>(inst.id)));
        const Eigen::Index n0 = points.cols();
        points.conservativeResize(3, n0 + s.points.cols());
        points.rightCols(s.points.cols()) = s.points.unaryExpr([](double v) { return static_cast<double>(quantize(v)); });
        labels.insert(labels.end(), static_cast<std::size_t>(s.points.cols()), inst.id);
    }

    std::vector<ViewData> views;
    views.reserve(cameras.size());
    for (std::size_t k = 0; k < cameras.size(); ++k) {
        const CameraModel& cam = cameras[k];
        cam.validate();
        const auto w = static_cast<std::size_t>(cam.width);
        const auto h = static_cast<std::size_t>(cam.height);
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::vector<double> depth(w * h, inf);
        std::vector<Eigen::Index> owner(w * h, -1);
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            const auto px = cam.project(points.col(i));
            if (!px) continue;
            const std::size_t p = static_cast<std::size_t>(px->y) * w + static_cast<std::size_t>(px->x);
            if (px->depth < depth[p]) {  // strict: earlier index wins ties
                depth[p] = px->depth;
                owner[p] = i;
            }
        }

        ViewData view;
        view.labels = LabelImage::Constant(cam.height, cam.width, kBackgroundPixel);
        std::vector<Eigen::Index> kept;
        const int r = config.occlusion_radius;
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const std::size_t p = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
                if (owner[p] < 0) continue;
                // a point hidden behind a nearer surface in its neighborhood is
                // a hole in that surface's sampling, not a visible point
                double front = depth[p];
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = x + dx, yy = y + dy;
                        if (xx < 0 || yy < 0 || xx >= cam.width || yy >= cam.height) continue;
                        front = std::min(front, depth[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)]);
                    }
                }
                if (depth[p] > front + config.depth_tolerance) continue;
                kept.push_back(owner[p]);
                view.labels(y, x) = static_cast<std::uint16_t>(labels[static_cast<std::size_t>(owner[p])]);
            }
        }
        view.cloud.points.resize(3, static_cast<Eigen::Index>(kept.size()));
        view.cloud.labels.resize(kept.size());
        view.cloud.view_ids.assign(kept.size(), static_cast<std::int32_t>(k));
        for (std::size_t j = 0; j < kept.size(); ++j) {
            view.cloud.points.col(static_cast<Eigen::Index>(j)) = points.col(kept[j]);
            view.cloud.labels[j] = labels[static_cast<std::size_t>(kept[j])];
        }
        views.push_back(std::move(view));
    }
    return views;
}

SceneDescription generate_scene(const SceneConfig& config, const TemplateRegistry& registry, std::uint64_t seed) {
    config.validate();
    std::vector<std::string> categories = config.categories.empty() ? registry.categories() : config.categories;
    if (categories.empty()) throw Error(ErrorKind::InvalidArgument, "no categories to draw from");
    std::map<std::string, CategoryTemplate> templates;
    for (const auto& c : categories) templates.emplace(c, registry.build(c));

    Rng rng(derive_seed(seed, stage::scene));
    SceneDescription scene;
    scene.registry = registry;
    std::vector<PlacedInstance> placed;
    std::vector<Aabb> boxes;
    const Workspace& ws = config.workspace;

    for (int id = 0; id < config.object_count; ++id) {
        SceneInstance inst;
        inst.id = id;
        inst.category = categories[rng.below(categories.size())];
        inst.params.alpha_x = rng.uniform(config.alpha_min, config.alpha_max);
        inst.params.alpha_y = rng.uniform(config.alpha_min, config.alpha_max);
        inst.params.alpha_z = rng.uniform(config.alpha_min, config.alpha_max);
        inst.params.epsilon = rng.uniform(config.epsilon_min, config.epsilon_max);
        const TriangleMesh canonical = deform_template(templates.at(inst.category), inst.params);
        const double rest_z = -canonical.vertices.row(2).minCoeff();

        bool ok = false;
        for (int attempt = 0; attempt < config.max_attempts && !ok; ++attempt) {
            const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Vector3d t(rng.uniform(-ws.half_x, ws.half_x), rng.uniform(-ws.half_y, ws.half_y), rest_z);
            const RigidPose pose = RigidPose::from_yaw(yaw, t);
            const Aabb box = aabb_of(pose.apply(canonical.vertices));
            ok = std::all_of(boxes.begin(), boxes.end(),
                             [&](const Aabb& other) { return aabb_overlap_ratio(box, other) < config.max_overlap; });
            if (ok) {
                inst.pose = pose;
                boxes.push_back(box);
                placed.push_back({id, TriangleMesh{pose.apply(canonical.vertices), canonical.triangles}});
            }
        }
        if (!ok) {
            throw Error(ErrorKind::PlacementFailure, "could not place instance " + std::to_string(id) + " (" +
                                                         inst.category + ") after " +
                                                         std::to_string(config.max_attempts) + " attempts");
        }
        scene.instances.push_back(std::move(inst));
    }

    scene.cameras = default_rig(ws, config.rig);
    scene.views = render_views(placed, scene.cameras, config.render, seed);
    return scene;
}

MaskSet truth_masks(const SceneDescription& scene) {
    MaskSet set;
    for (const ViewData& view : scene.views) {
        ViewMasks vm;
        vm.height = static_cast<int>(view.labels.rows());
        vm.width = static_cast<int>(view.labels.cols());
        for (const SceneInstance& inst : scene.instances) {
            const auto id = static_cast<std::uint16_t>(inst.id);
            MaskImage m = (view.labels == id).cast<std::uint8_t>();
            if (m.any()) vm.masks.push_back({inst.category, std::move(m)});
        }
        set.views.push_back(std::move(vm));
    }
    return set;
}

namespace {

MaskImage erode(const MaskImage& in, int radius) {
    if (radius <= 0) return in;
    MaskImage out = MaskImage::Zero(in.rows(), in.cols());
    for (Eigen::Index y = 0; y < in.rows(); ++y) {
        for (Eigen::Index x = 0; x < in.cols(); ++x) {
            if (!in(y, x)) continue;
            bool inside = true;
            for (Eigen::Index dy = -radius; dy <= radius && inside; ++dy) {
                for (Eigen::Index dx = -radius; dx <= radius && inside; ++dx) {
                    const Eigen::Index yy = y + dy, xx = x + dx;
                    inside = yy >= 0 && xx >= 0 && yy < in.rows() && xx < in.cols() && in(yy, xx);
                }
            }
            out(y, x) = inside ? 1 : 0;
        }
    }
    return out;
}

}  // namespace

MaskSet corrupt_masks(const MaskSet& truth, const NoiseConfig& noise, std::span<const std::string> categories,
                      std::uint64_t seed) {
    noise.validate();
    Rng rng(derive_seed(seed, stage::masks));
    MaskSet out;
    for (const ViewMasks& view : truth.views) {
        ViewMasks v;
        v.width = view.width;
        v.height = view.height;
        for (const Mask& m : view.masks) {
            // fixed number of draws per mask keeps streams aligned across settings
            const double u_drop = rng.uniform();
            const double u_flip = rng.uniform();
            const double u_pick = rng.uniform();
            if (u_drop < noise.drop_probability) continue;
            Mask corrupted{m.category, erode(m.pixels, noise.erode_radius)};
            if (u_flip < noise.flip_probability) {
                std::vector<std::string> others;
                for (const auto& c : categories) {
                    if (c != m.category) others.push_back(c);
                }
                if (!others.empty()) {
                    const auto pick = std::min(others.size() - 1, static_cast<std::size_t>(u_pick * others.size()));
                    corrupted.category = others[pick];
                }
            }
            v.masks.push_back(std::move(corrupted));
        }
        out.views.push_back(std::move(v));
    }
    return out;
}

}  // namespace clutterfit
