#include "clutterfit/scene_io.hpp"

#include "clutterfit/ply.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace clutterfit {

using Json = nlohmann::ordered_json;

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw Error(ErrorKind::Data, "truncated binary header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

Json pose_to_json(const RigidPose& pose) {
    Json r = Json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.push_back(pose.rotation(i, j));
    return {{"rotation", r},
            {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

RigidPose pose_from_json(const Json& j) {
    RigidPose pose;
    const auto& r = j.at("rotation");
    if (r.size() != 9) throw Error(ErrorKind::Data, "pose rotation must have 9 entries");
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2) pose.rotation(i, j2) = r.at(static_cast<std::size_t>(3 * i + j2)).get<double>();
    const auto& t = j.at("translation");
    pose.translation = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()};
    pose.validate();
    return pose;
}

Json params_to_json(const DeformationParams& p) {
    return {{"alpha_x", p.alpha_x}, {"alpha_y", p.alpha_y}, {"alpha_z", p.alpha_z}, {"epsilon", p.epsilon}};
}

DeformationParams params_from_json(const Json& j) {
    DeformationParams p{j.at("alpha_x").get<double>(), j.at("alpha_y").get<double>(), j.at("alpha_z").get<double>(),
                        j.at("epsilon").get<double>()};
    p.validate();
    return p;
}

std::filesystem::path view_ply(const std::filesystem::path& dir, std::size_t k) {
    return dir / ("view_" + std::to_string(k) + ".ply");
}

std::filesystem::path view_labels(const std::filesystem::path& dir, std::size_t k) {
    return dir / ("view_" + std::to_string(k) + "_labels.bin");
}

}  // namespace

void write_label_raster(std::ostream& out, const LabelImage& image) {
    put_u32(out, static_cast<std::uint32_t>(image.cols()));
    put_u32(out, static_cast<std::uint32_t>(image.rows()));
    for (Eigen::Index y = 0; y < image.rows(); ++y) {
        for (Eigen::Index x = 0; x < image.cols(); ++x) {
            const std::uint16_t v = image(y, x);
            const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
            out.write(b.data(), 2);
        }
    }
}

LabelImage read_label_raster(std::istream& in) {
    const std::uint32_t w = get_u32(in);
    const std::uint32_t h = get_u32(in);
    LabelImage image(h, w);
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 2);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw Error(ErrorKind::Data, "label raster: truncated body");
    }
    for (std::uint32_t y = 0; y < h; ++y) {
        for (std::uint32_t x = 0; x < w; ++x) {
            const std::size_t o = 2 * (static_cast<std::size_t>(y) * w + x);
            image(y, x) = static_cast<std::uint16_t>(buf[o] | (buf[o + 1] << 8));
        }
    }
    return image;
}

void write_matrix_f32(std::ostream& out, const Eigen::MatrixXd& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
    }
}

Eigen::MatrixXd read_matrix_f32(std::istream& in) {
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = std::bit_cast<float>(get_u32(in));
    }
    return m;
}

void write_matrix_f32(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    write_matrix_f32(out, m);
}

Eigen::MatrixXd read_matrix_f32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    return read_matrix_f32(in);
}

std::string mask_set_to_json(const MaskSet& masks) {
    Json views = Json::array();
    for (const ViewMasks& v : masks.views) {
        Json list = Json::array();
        for (const Mask& m : v.masks) {
            Json runs = Json::array();
            for (Eigen::Index y = 0; y < m.pixels.rows(); ++y) {
                Eigen::Index x = 0;
                while (x < m.pixels.cols()) {
                    if (!m.pixels(y, x)) {
                        ++x;
                        continue;
                    }
                    const Eigen::Index start = x;
                    while (x < m.pixels.cols() && m.pixels(y, x)) ++x;
                    runs.push_back({y, start, x - start});
                }
            }
            list.push_back({{"category", m.category}, {"runs", runs}});
        }
        views.push_back({{"width", v.width}, {"height", v.height}, {"masks", list}});
    }
    return Json{{"views", views}}.dump();
}

MaskSet mask_set_from_json(const std::string& text) {
    MaskSet set;
    try {
        const auto j = Json::parse(text);
        for (const auto& jv : j.at("views")) {
            ViewMasks v;
            v.width = jv.at("width").get<int>();
            v.height = jv.at("height").get<int>();
            if (v.width <= 0 || v.height <= 0) throw Error(ErrorKind::Data, "mask view size must be positive");
            for (const auto& jm : jv.at("masks")) {
                Mask m{jm.at("category").get<std::string>(), MaskImage::Zero(v.height, v.width)};
                for (const auto& run : jm.at("runs")) {
                    const int y = run.at(0).get<int>(), x = run.at(1).get<int>(), len = run.at(2).get<int>();
                    if (y < 0 || y >= v.height || x < 0 || len < 0 || x + len > v.width) {
                        throw Error(ErrorKind::Data, "mask run outside the image");
                    }
                    m.pixels.row(y).segment(x, len) = 1;
                }
                v.masks.push_back(std::move(m));
            }
            set.views.push_back(std::move(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Data, std::string("mask set: ") + e.what());
    }
    set.validate();
    return set;
}

void save_mask_set(const std::filesystem::path& path, const MaskSet& masks) {
    write_text_file(path, mask_set_to_json(masks));
}

MaskSet load_mask_set(const std::filesystem::path& path) { return mask_set_from_json(read_text_file(path)); }

std::string scene_to_json(const SceneDescription& scene, const SceneMeta& meta) {
    Json instances = Json::array();
    for (const SceneInstance& inst : scene.instances) {
        instances.push_back({{"id", inst.id},
                             {"category", inst.category},
                             {"params", params_to_json(inst.params)},
                             {"pose", pose_to_json(inst.pose)}});
    }
    Json cameras = Json::array();
    for (const CameraModel& cam : scene.cameras) {
        cameras.push_back({{"pose", pose_to_json(cam.pose)},
                           {"width", cam.width},
                           {"height", cam.height},
                           {"focal", cam.focal},
                           {"principal", {cam.principal.x(), cam.principal.y()}}});
    }
    Json views = Json::array();
    for (std::size_t k = 0; k < scene.views.size(); ++k) {
        views.push_back({{"cloud", view_ply({}, k).string()},
                         {"labels", view_labels({}, k).string()},
                         {"points", scene.views[k].cloud.size()}});
    }
    Json j{{"seed", meta.seed},
           {"preset", meta.preset},
           {"instances", instances},
           {"cameras", cameras},
           {"views", views},
           {"templates", Json::parse(scene.registry.to_json())}};
    return j.dump(2) + "\n";
}

void save_scene(const std::filesystem::path& dir, const SceneDescription& scene, const SceneMeta& meta) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
    write_text_file(dir / "scene.json", scene_to_json(scene, meta));
    for (std::size_t k = 0; k < scene.views.size(); ++k) {
        write_ply(view_ply(dir, k), scene.views[k].cloud);
        std::ofstream out(view_labels(dir, k), std::ios::binary);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + view_labels(dir, k).string() + "'");
        write_label_raster(out, scene.views[k].labels);
    }
}

SceneDescription load_scene(const std::filesystem::path& dir, SceneMeta* meta) {
    const auto json_path = dir / "scene.json";
    if (!std::filesystem::exists(json_path)) throw Error(ErrorKind::Io, "missing '" + json_path.string() + "'");
    SceneDescription scene;
    try {
        const auto j = Json::parse(read_text_file(json_path));
        if (meta) {
            meta->seed = j.value("seed", std::uint64_t{0});
            meta->preset = j.value("preset", std::string{});
        }
        scene.registry = TemplateRegistry::from_json(j.at("templates").dump());
        for (const auto& ji : j.at("instances")) {
            SceneInstance inst;
            inst.id = ji.at("id").get<std::int32_t>();
            inst.category = ji.at("category").get<std::string>();
            inst.params = params_from_json(ji.at("params"));
            inst.pose = pose_from_json(ji.at("pose"));
            scene.instances.push_back(std::move(inst));
        }
        for (const auto& jc : j.at("cameras")) {
            CameraModel cam;
            cam.pose = pose_from_json(jc.at("pose"));
            cam.width = jc.at("width").get<int>();
            cam.height = jc.at("height").get<int>();
            cam.focal = jc.at("focal").get<double>();
            cam.principal = {jc.at("principal").at(0).get<double>(), jc.at("principal").at(1).get<double>()};
            cam.validate();
            scene.cameras.push_back(cam);
        }
        const std::size_t n_views = j.at("views").size();
        for (std::size_t k = 0; k < n_views; ++k) {
            ViewData v;
            v.cloud = read_ply_cloud(view_ply(dir, k));
            if (!v.cloud.has_view_ids()) v.cloud.view_ids.assign(v.cloud.size(), static_cast<std::int32_t>(k));
            std::ifstream in(view_labels(dir, k), std::ios::binary);
            if (!in) throw Error(ErrorKind::Io, "missing '" + view_labels(dir, k).string() + "'");
            v.labels = read_label_raster(in);
            scene.views.push_back(std::move(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Data, "scene.json: " + std::string(e.what()));
    }
    scene.validate();
    return scene;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace clutterfit
