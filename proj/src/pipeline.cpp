#include "clutterfit/pipeline.hpp"

#include "clutterfit/ply.hpp"
#include "clutterfit/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace clutterfit {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* to_string(Preset preset) {
    switch (preset) {
        case Preset::Easy: return "easy";
        case Preset::Normal: return "normal";
        case Preset::Hard: return "hard";
        case Preset::Random: return "random";
    }
    return "easy";
}

Preset preset_from_string(const std::string& name) {
    if (name == "easy") return Preset::Easy;
    if (name == "normal") return Preset::Normal;
    if (name == "hard") return Preset::Hard;
    if (name == "random") return Preset::Random;
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "' (easy|normal|hard|random)");
}

int preset_object_count(Preset preset, std::uint64_t seed) {
    switch (preset) {
        case Preset::Easy: return 5;
        case Preset::Normal: return 10;
        case Preset::Hard: return 15;
        case Preset::Random: {
            Rng rng(derive_seed(seed, stage::scene, 1));
            return 5 + static_cast<int>(rng.below(11));
        }
    }
    return 5;
}

void PipelineConfig::validate() const {
    if (objects && *objects < 1) throw Error(ErrorKind::InvalidArgument, "object count must be positive");
    if (!(h_threshold > 0.0) || !std::isfinite(h_threshold)) {
        throw Error(ErrorKind::InvalidArgument, "h threshold must be positive");
    }
    if (reconstruct_samples < 1 || cd_samples < 1) throw Error(ErrorKind::InvalidArgument, "sample counts must be positive");
    if (repetitions < 1) throw Error(ErrorKind::InvalidArgument, "repetitions must be at least 1");
    if (bench_presets.empty()) throw Error(ErrorKind::InvalidArgument, "no bench presets");
    noise.validate();
    fit.validate();
}

SceneConfig PipelineConfig::scene_config(Preset p, std::uint64_t scene_seed) const {
    SceneConfig sc;
    sc.object_count = objects ? *objects : preset_object_count(p, scene_seed);
    sc.categories = categories;
    return sc;
}

// ---------------------------------------------------------------------------
// Stages

MaskSet scene_masks(const SceneDescription& scene, const NoiseConfig& noise, std::uint64_t seed) {
    const MaskSet truth = truth_masks(scene);
    const std::vector<std::string> categories = scene.registry.categories();
    return corrupt_masks(truth, noise, categories, seed);
}

std::vector<Partition> segment_scene(const SceneDescription& scene, const MaskSet& masks, double h) {
    if (masks.views.size() != scene.views.size()) {
        throw Error(ErrorKind::ShapeMismatch, "mask set has " + std::to_string(masks.views.size()) +
                                                  " views, scene has " + std::to_string(scene.views.size()));
    }
    std::vector<Partition> all;
    for (std::size_t k = 0; k < scene.views.size(); ++k) {
        auto parts = assign_labels(scene.views[k].cloud, masks.views[k], scene.cameras[k], static_cast<int>(k),
                                   scene.view_offset(k));
        for (auto& p : parts) all.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < all.size(); ++i) all[i].merge_id = static_cast<int>(i);
    return merge_partitions(std::move(all), h);
}

std::vector<Partition> truth_partitions(const SceneDescription& scene) {
    const PointCloud fused = scene.fused_cloud();
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < fused.labels.size(); ++i) {
        if (fused.labels[i] != kBackground) by_label[fused.labels[i]].push_back(i);
    }
    std::vector<Partition> out;
    for (const SceneInstance& inst : scene.instances) {
        Partition p;
        p.merge_id = inst.id;
        p.category = inst.category;
        auto it = by_label.find(inst.id);
        if (it != by_label.end()) p.indices = it->second;
        p.points = fused.select(p.indices);
        for (auto i : p.indices) p.source_views.insert(fused.view_ids[i]);
        out.push_back(std::move(p));
    }
    return out;
}

int majority_label(const Partition& partition, const PointCloud& fused) {
    std::map<int, std::size_t> votes;
    for (auto i : partition.indices) {
        if (i >= fused.labels.size()) throw Error(ErrorKind::Data, "partition index outside the fused cloud");
        ++votes[fused.labels[i]];
    }
    int best = kBackground;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
        if (label != kBackground && count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

namespace {

const SceneInstance* find_instance(const SceneDescription& scene, int id) {
    for (const auto& inst : scene.instances) {
        if (inst.id == id) return &inst;
    }
    return nullptr;
}

std::vector<PlacedShape> placed_shapes(std::span<const InstanceFit> fits,
                                       const std::map<std::string, CategoryTemplate>& templates) {
    std::vector<PlacedShape> shapes;
    for (const auto& f : fits) {
        shapes.push_back({f.partition, &templates.at(f.category), f.fit.params, f.pose});
    }
    return shapes;
}

std::map<std::string, CategoryTemplate> build_templates(const SceneDescription& scene) {
    std::map<std::string, CategoryTemplate> out;
    for (const auto& c : scene.registry.categories()) out.emplace(c, scene.registry.build(c));
    return out;
}

std::string stage_message(const char* stage_name, const std::exception& e) {
    return std::string(stage_name) + ": " + e.what();
}

template <typename F>
auto run_stage(const char* stage_name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), stage_message(stage_name, e));
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::Io, stage_message(stage_name, e));
    }
}

}  // namespace

std::vector<Estimate> estimate_modes(const SceneDescription& scene, const std::vector<Partition>& partitions,
                                     std::span<const FitMode> modes, const PipelineConfig& config,
                                     std::uint64_t seed) {
    const PointCloud fused = scene.fused_cloud();
    const auto templates = build_templates(scene);
    std::vector<Estimate> out(modes.size());
    for (auto& e : out) e.partitions = partitions;

    for (const Partition& part : partitions) {
        const int label = majority_label(part, fused);
        const SceneInstance* inst = find_instance(scene, label);
        if (inst == nullptr) {
            for (auto& e : out) {
                e.warnings.push_back("partition " + std::to_string(part.merge_id) + " has no ground-truth instance");
            }
            continue;
        }
        if (templates.count(part.category) == 0) {
            throw Error(ErrorKind::Data, "partition " + std::to_string(part.merge_id) + " has unknown category '" +
                                             part.category + "'");
        }
        const CategoryTemplate& tmpl = templates.at(part.category);
        const PointCloud observed = apply_pose(part.points, inst->pose.inverse());

        const bool too_small = part.points.size() < 10;
        std::map<FitMode, FitResult> done;
        auto fit_mode = [&](FitMode mode) -> FitResult {
            if (auto it = done.find(mode); it != done.end()) return it->second;
            FitResult r;
            if (too_small) {
                r.params = DeformationParams::identity();
                r.converged = false;
            } else if (mode == FitMode::Full && done.count(FitMode::ScaleOnly) && done.count(FitMode::SurfaceOnly)) {
                const std::array<FitResult, 2> seeds{done.at(FitMode::ScaleOnly), done.at(FitMode::SurfaceOnly)};
                r = fit_deformation(observed, tmpl, config.fit, seeds);
            } else {
                r = fit_baseline(observed, tmpl, mode, config.fit);
            }
            done.emplace(mode, r);
            return r;
        };
        // restricted fits first so a requested full fit can reuse them
        for (FitMode m : {FitMode::None, FitMode::ScaleOnly, FitMode::SurfaceOnly, FitMode::Full}) {
            if (std::find(modes.begin(), modes.end(), m) != modes.end()) fit_mode(m);
        }
        for (std::size_t k = 0; k < modes.size(); ++k) {
            if (too_small) {
                out[k].warnings.push_back("partition " + std::to_string(part.merge_id) + " has " +
                                          std::to_string(part.points.size()) + " points; template kept unchanged");
            }
            out[k].fits.push_back({part.merge_id, part.category, label, inst->pose, done.at(modes[k])});
        }
    }
    for (auto& e : out) {
        const auto shapes = placed_shapes(e.fits, templates);
        e.reconstruction = reconstruct_scene(shapes, config.reconstruct_samples, seed);
    }
    return out;
}

Estimate estimate_shapes(const SceneDescription& scene, std::vector<Partition> partitions,
                         const PipelineConfig& config, std::uint64_t seed) {
    const std::array<FitMode, 1> modes{config.mode};
    return std::move(estimate_modes(scene, partitions, modes, config, seed).front());
}

Estimate estimate_scene(const SceneDescription& scene, const PipelineConfig& config, std::uint64_t seed) {
    const MaskSet masks = scene_masks(scene, config.noise, seed);
    auto partitions = segment_scene(scene, masks, config.h_threshold);
    Estimate e = estimate_shapes(scene, std::move(partitions), config, seed);
    if (e.partitions.empty()) e.warnings.push_back("no partitions survived segmentation");
    return e;
}

Evaluation evaluate_scene(const SceneDescription& scene, std::span<const Partition> partitions,
                          std::span<const InstanceFit> fits, const PointCloud& reconstruction,
                          const PipelineConfig& config, std::uint64_t seed) {
    for (const auto& f : fits) {
        if (find_instance(scene, f.instance) == nullptr) {
            throw Error(ErrorKind::Data, "fit for partition " + std::to_string(f.partition) +
                                             " references unknown instance " + std::to_string(f.instance));
        }
    }
    Evaluation ev;
    const auto truth = truth_partitions(scene);
    ev.segmentation = segmentation_map(partitions, truth);

    std::map<int, std::vector<std::size_t>> recon_cols;
    for (std::size_t i = 0; i < reconstruction.labels.size(); ++i) {
        recon_cols[reconstruction.labels[i]].push_back(i);
    }
    double cd_sum = 0.0;
    for (const InstanceMatch& m : ev.segmentation.matches) {
        const int pid = partitions[static_cast<std::size_t>(m.pred)].merge_id;
        auto it = recon_cols.find(pid);
        if (it == recon_cols.end()) continue;
        const int gid = truth[static_cast<std::size_t>(m.gt)].merge_id;
        std::size_t index = 0;
        while (scene.instances[index].id != gid) ++index;
        const PointCloud predicted = reconstruction.select(it->second);
        const double cd = shape_cd(predicted, scene.instance_mesh(index), config.cd_samples,
                                   derive_seed(seed, stage::metric, static_cast<std::uint64_t>(gid)));
        ev.shape.push_back({pid, gid, cd});
        cd_sum += cd;
    }
    ev.mean_cd = ev.shape.empty() ? 0.0 : cd_sum / static_cast<double>(ev.shape.size());

    // ground-truth scene: true shapes sampled the same way as the prediction
    const auto templates = build_templates(scene);
    std::vector<PlacedShape> gt_shapes;
    std::map<int, std::string> gt_category;
    for (const auto& inst : scene.instances) {
        gt_shapes.push_back({inst.id, &templates.at(inst.category), inst.params, inst.pose});
        gt_category[inst.id] = inst.category;
    }
    const PointCloud gt_cloud =
        reconstruct_scene(gt_shapes, config.reconstruct_samples, derive_seed(seed, stage::metric, 0x9e));
    std::vector<BoxInstance> gt_boxes, pred_boxes;
    if (!gt_cloud.empty()) {
        for (const auto& [label, box] : boxes_by_label(gt_cloud)) gt_boxes.push_back({box, gt_category[label]});
    }
    std::map<int, std::string> pred_category;
    for (const auto& p : partitions) pred_category[p.merge_id] = p.category;
    if (!reconstruction.empty()) {
        for (const auto& [label, box] : boxes_by_label(reconstruction)) {
            auto it = pred_category.find(label);
            if (it == pred_category.end()) {
                throw Error(ErrorKind::Data, "reconstruction label " + std::to_string(label) + " has no partition");
            }
            pred_boxes.push_back({box, it->second});
        }
    }
    ev.scene = scene_pr(pred_boxes, gt_boxes);
    return ev;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string format(const char* fmt, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, a);
    return buf;
}

std::string pct(double v) { return format("%8.2f", 100.0 * v); }

Json report_json(const MatchReport& r) { return Json::parse(match_report_to_json(r)); }

Json pose_json(const RigidPose& pose) {
    Json rot = Json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) rot.push_back(pose.rotation(i, j));
    }
    return {{"rotation", rot},
            {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

RigidPose pose_from_json(const Json& j) {
    RigidPose pose;
    const auto& rot = j.at("rotation");
    if (rot.size() != 9) throw Error(ErrorKind::Data, "pose rotation needs 9 entries");
    for (int i = 0; i < 3; ++i) {
        for (int j2 = 0; j2 < 3; ++j2) pose.rotation(i, j2) = rot.at(static_cast<std::size_t>(3 * i + j2)).get<double>();
    }
    const auto& t = j.at("translation");
    pose.translation = Vector3d(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
    pose.validate();
    return pose;
}

Json parse_json(const std::string& text, const fs::path& path) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Data, path.string() + ": " + e.what());
    }
}

}  // namespace

std::string evaluation_table(const Evaluation& ev) {
    std::ostringstream out;
    out << "Segmentation (%)   AP_25    AP_50      mAP      mAR\n";
    out << "                " << pct(ev.segmentation.at(0.25).precision) << " " << pct(ev.segmentation.at(0.5).precision)
        << " " << pct(ev.segmentation.mean_precision) << " " << pct(ev.segmentation.mean_recall) << "\n\n";
    out << "Shape            mean CD (1e-4 m^2)   instances\n";
    out << "                " << format("%19.4f", ev.mean_cd * 1e4) << format("%12.0f", static_cast<double>(ev.shape.size()))
        << "\n\n";
    out << "Scene (%)          AP_10    AP_25    AP_50      mAP      mAR       F1\n";
    out << "                " << pct(ev.scene.at(0.1).precision) << " " << pct(ev.scene.at(0.25).precision) << " "
        << pct(ev.scene.at(0.5).precision) << " " << pct(ev.scene.mean_precision) << " "
        << pct(ev.scene.mean_recall) << " " << pct(ev.scene.f1) << "\n";
    return out.str();
}

std::string evaluation_to_json(const Evaluation& ev) {
    Json shape = Json::array();
    for (const auto& s : ev.shape) shape.push_back({{"partition", s.partition}, {"instance", s.instance}, {"cd", s.cd}});
    const Json j{{"segmentation", report_json(ev.segmentation)},
                 {"shape", {{"mean_cd", ev.mean_cd}, {"instances", shape}}},
                 {"scene", report_json(ev.scene)}};
    return j.dump(2);
}

void save_estimate(const fs::path& dir, const Estimate& estimate, const MaskSet& masks) {
    fs::create_directories(dir);
    save_mask_set(dir / "masks.json", masks);
    Json parts = Json::array();
    for (const auto& p : estimate.partitions) {
        parts.push_back({{"id", p.merge_id},
                         {"category", p.category},
                         {"views", std::vector<int>(p.source_views.begin(), p.source_views.end())},
                         {"indices", p.indices}});
    }
    write_text_file(dir / "partitions.json", Json{{"partitions", parts}}.dump(2));
    Json fits = Json::array();
    for (const auto& f : estimate.fits) {
        Json r = Json::parse(fit_result_to_json(f.fit));
        fits.push_back({{"partition", f.partition},
                        {"category", f.category},
                        {"instance", f.instance},
                        {"pose", pose_json(f.pose)},
                        {"params", r["params"]},
                        {"objective", r["objective"]},
                        {"evaluations", r["evaluations"]},
                        {"converged", r["converged"]}});
    }
    Json warnings = estimate.warnings;
    write_text_file(dir / "fits.json", Json{{"fits", fits}, {"warnings", warnings}}.dump(2));
    write_ply(dir / "reconstructed.ply", estimate.reconstruction, PlyFormat::BinaryLittleEndian);
}

Estimate load_estimate(const fs::path& dir) {
    Estimate e;
    const fs::path parts_path = dir / "partitions.json";
    const fs::path fits_path = dir / "fits.json";
    try {
        const Json parts = parse_json(read_text_file(parts_path), parts_path);
        for (const auto& j : parts.at("partitions")) {
            Partition p;
            p.merge_id = j.at("id").get<int>();
            p.category = j.at("category").get<std::string>();
            for (int v : j.at("views")) p.source_views.insert(v);
            p.indices = j.at("indices").get<std::vector<std::size_t>>();
            e.partitions.push_back(std::move(p));
        }
        const Json fits = parse_json(read_text_file(fits_path), fits_path);
        for (const auto& j : fits.at("fits")) {
            InstanceFit f;
            f.partition = j.at("partition").get<int>();
            f.category = j.at("category").get<std::string>();
            f.instance = j.at("instance").get<int>();
            f.pose = pose_from_json(j.at("pose"));
            const auto& pj = j.at("params");
            f.fit.params = {pj.at("alpha_x").get<double>(), pj.at("alpha_y").get<double>(),
                            pj.at("alpha_z").get<double>(), pj.at("epsilon").get<double>()};
            f.fit.objective = j.at("objective").get<double>();
            f.fit.evaluations = j.at("evaluations").get<int>();
            f.fit.converged = j.at("converged").get<bool>();
            e.fits.push_back(std::move(f));
        }
        if (fits.contains("warnings")) e.warnings = fits["warnings"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::Data, dir.string() + ": malformed results: " + ex.what());
    }
    e.reconstruction = read_ply_cloud(dir / "reconstructed.ply");
    return e;
}

// ---------------------------------------------------------------------------
// Commands

fs::path cmd_gen(const PipelineConfig& config) {
    config.validate();
    const TemplateRegistry registry = TemplateRegistry::defaults();
    const SceneDescription scene = run_stage("generate", [&] {
        return generate_scene(config.scene_config(config.preset, config.seed), registry, config.seed);
    });
    run_stage("write", [&] {
        save_scene(config.out, scene, {config.seed, to_string(config.preset)});
        return 0;
    });
    std::cout << "scene " << config.out.string() << ": " << scene.instances.size() << " instances, "
              << scene.views.size() << " views\n";
    for (const auto& inst : scene.instances) {
        std::cout << "  #" << inst.id << " " << inst.category << " alpha=(" << inst.params.alpha_x << ", "
                  << inst.params.alpha_y << ", " << inst.params.alpha_z << ") eps=" << inst.params.epsilon << "\n";
    }
    return config.out;
}

fs::path cmd_estimate(const fs::path& scene_dir, const PipelineConfig& config) {
    config.validate();
    SceneMeta meta;
    const SceneDescription scene = run_stage("load", [&] { return load_scene(scene_dir, &meta); });
    const MaskSet masks = run_stage("masks", [&] { return scene_masks(scene, config.noise, meta.seed); });
    Estimate e;
    e.partitions = run_stage("segment", [&] { return segment_scene(scene, masks, config.h_threshold); });
    run_stage("write", [&] {
        save_estimate(config.out, e, masks);  // flush partitions before fitting
        return 0;
    });
    e = run_stage("fit", [&] { return estimate_shapes(scene, e.partitions, config, meta.seed); });
    if (e.partitions.empty()) e.warnings.push_back("no partitions survived segmentation");
    run_stage("write", [&] {
        save_estimate(config.out, e, masks);
        return 0;
    });
    for (const auto& w : e.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "estimate " << config.out.string() << ": " << e.partitions.size() << " partitions, "
              << e.fits.size() << " fits (" << to_string(config.mode) << ")\n";
    return config.out;
}

fs::path cmd_eval(const fs::path& scene_dir, const fs::path& results_dir, const PipelineConfig& config) {
    config.validate();
    SceneMeta meta;
    const SceneDescription scene = run_stage("load", [&] { return load_scene(scene_dir, &meta); });
    const Estimate e = run_stage("load", [&] { return load_estimate(results_dir); });
    const Evaluation ev = run_stage("eval", [&] {
        return evaluate_scene(scene, e.partitions, e.fits, e.reconstruction, config, meta.seed);
    });
    const std::string table = evaluation_table(ev);
    run_stage("write", [&] {
        write_text_file(results_dir / "report.json", evaluation_to_json(ev));
        write_text_file(results_dir / "report.txt", table);
        return 0;
    });
    std::cout << table;
    return results_dir / "report.json";
}

// ---------------------------------------------------------------------------
// Bench

namespace {

constexpr std::array<FitMode, 4> kBenchModes{FitMode::None, FitMode::ScaleOnly, FitMode::SurfaceOnly, FitMode::Full};

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"seg_AP25",  "seg_AP50",  "seg_mAP",   "seg_mAR",   "shape_CD",
                                                "scene_AP10", "scene_AP25", "scene_AP50", "scene_mAP", "scene_mAR",
                                                "scene_F1"};
    return names;
}

std::vector<double> metric_values(const Evaluation& ev) {
    return {ev.segmentation.at(0.25).precision,
            ev.segmentation.at(0.5).precision,
            ev.segmentation.mean_precision,
            ev.segmentation.mean_recall,
            ev.mean_cd,
            ev.scene.at(0.1).precision,
            ev.scene.at(0.25).precision,
            ev.scene.at(0.5).precision,
            ev.scene.mean_precision,
            ev.scene.mean_recall,
            ev.scene.f1};
}

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

Stat summarize(const std::vector<double>& v) {
    Stat s;
    s.count = static_cast<int>(v.size());
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

BenchReport run_bench(const PipelineConfig& config) {
    config.validate();
    const TemplateRegistry registry = TemplateRegistry::defaults();
    BenchReport report;
    Json presets = Json::object();
    std::ostringstream table;
    table << "preset  mode           scenes";
    for (const auto& n : metric_names()) table << " " << std::string(n.size() > 6 ? 0 : 6 - n.size(), ' ') << n << "      ";
    table << "\n";

    for (Preset preset : config.bench_presets) {
        // metric samples per mode; shape CD only from scenes with true positives
        std::vector<std::vector<std::vector<double>>> samples(kBenchModes.size(),
                                                              std::vector<std::vector<double>>(metric_names().size()));
        int ok = 0;
        int failed = 0;
        Json failures = Json::array();
        const std::uint64_t preset_seed = derive_seed(config.seed, stage::scene, static_cast<std::uint64_t>(preset));
        for (int r = 0; r < config.repetitions; ++r) {
            const std::uint64_t scene_seed = derive_seed(preset_seed, stage::scene, static_cast<std::uint64_t>(r));
            try {
                const SceneDescription scene = generate_scene(config.scene_config(preset, scene_seed), registry, scene_seed);
                const MaskSet masks = scene_masks(scene, config.noise, scene_seed);
                const auto partitions = segment_scene(scene, masks, config.h_threshold);
                const auto estimates = estimate_modes(scene, partitions, kBenchModes, config, scene_seed);
                for (std::size_t m = 0; m < kBenchModes.size(); ++m) {
                    const Estimate& e = estimates[m];
                    const Evaluation ev = evaluate_scene(scene, e.partitions, e.fits, e.reconstruction, config, scene_seed);
                    const auto values = metric_values(ev);
                    for (std::size_t k = 0; k < values.size(); ++k) {
                        if (metric_names()[k] == "shape_CD" && ev.shape.empty()) continue;
                        samples[m][k].push_back(values[k]);
                    }
                }
                ++ok;
            } catch (const std::exception& ex) {
                ++failed;
                failures.push_back({{"scene", r}, {"error", ex.what()}});
            }
        }
        report.scenes += ok;
        report.failures += failed;

        Json modes = Json::object();
        for (std::size_t m = 0; m < kBenchModes.size(); ++m) {
            Json metrics = Json::object();
            char head[64];
            std::snprintf(head, sizeof head, "%-7s %-14s %6d", to_string(preset), to_string(kBenchModes[m]), ok);
            table << head;
            for (std::size_t k = 0; k < metric_names().size(); ++k) {
                const Stat s = summarize(samples[m][k]);
                metrics[metric_names()[k]] = {{"mean", s.mean}, {"std", s.stddev}, {"n", s.count}};
                const bool cd = metric_names()[k] == "shape_CD";
                const double scale = cd ? 1e4 : 100.0;
                char cell[64];
                std::snprintf(cell, sizeof cell, " %*.2f±%-5.2f", static_cast<int>(metric_names()[k].size()) - 6,
                              s.mean * scale, s.stddev * scale);
                table << cell;
            }
            table << "\n";
            modes[to_string(kBenchModes[m])] = metrics;
        }
        presets[to_string(preset)] = {{"scenes", ok}, {"failures", failed}, {"errors", failures}, {"modes", modes}};
    }
    table << "(precision/recall in %, shape_CD in 1e-4 m^2; mean±std over scenes)\n";
    if (report.failures > 0) table << report.failures << " scene(s) failed\n";

    const Json j{{"master_seed", config.seed},
                 {"repetitions", config.repetitions},
                 {"h_threshold", config.h_threshold},
                 {"noise",
                  {{"erode", config.noise.erode_radius},
                   {"flip", config.noise.flip_probability},
                   {"drop", config.noise.drop_probability}}},
                 {"fit", {{"samples", config.fit.samples}, {"max_evaluations", config.fit.max_evaluations},
                          {"reverse_weight", config.fit.reverse_weight}}},
                 {"presets", presets},
                 {"failures", report.failures}};
    report.json = j.dump(2);
    report.table = table.str();
    return report;
}

fs::path cmd_bench(const PipelineConfig& config) {
    const BenchReport report = run_bench(config);
    run_stage("write", [&] {
        fs::create_directories(config.out);
        write_text_file(config.out / "bench.json", report.json);
        write_text_file(config.out / "bench.txt", report.table);
        return 0;
    });
    std::cout << report.table;
    return config.out / "bench.json";
}

}  // namespace clutterfit
