#pragma once

#include "clutterfit/fit.hpp"
#include "clutterfit/metrics.hpp"
#include "clutterfit/scene_io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clutterfit {

enum class Preset { Easy, Normal, Hard, Random };

const char* to_string(Preset preset);
Preset preset_from_string(const std::string& name);

/// 5, 10 or 15 objects; Random draws uniformly from 5..15 using `seed`.
int preset_object_count(Preset preset, std::uint64_t seed);

inline constexpr double kDefaultMergeThreshold = 1e-2;  // m^2

struct PipelineConfig {
    Preset preset = Preset::Easy;
    std::optional<int> objects;  // overrides the preset count
    std::uint64_t seed = 1;
    std::vector<std::string> categories;  // empty: all registry categories
    NoiseConfig noise;
    double h_threshold = kDefaultMergeThreshold;
    FitConfig fit;
    FitMode mode = FitMode::Full;
    std::size_t reconstruct_samples = 2048;  // per instance
    std::size_t cd_samples = 2048;
    int repetitions = 10;                    // bench scenes per preset
    std::vector<Preset> bench_presets{Preset::Easy, Preset::Normal, Preset::Hard};
    std::filesystem::path out = "clutterfit_out";

    void validate() const;
    SceneConfig scene_config(Preset preset, std::uint64_t scene_seed) const;
};

struct InstanceFit {
    int partition = 0;  // merge id
    std::string category;
    int instance = 0;   // majority ground-truth label, supplies the pose
    RigidPose pose;
    FitResult fit;
};

struct Estimate {
    std::vector<Partition> partitions;
    std::vector<InstanceFit> fits;
    PointCloud reconstruction;  // labels are partition merge ids
    std::vector<std::string> warnings;
};

struct ShapeScore {
    int partition = 0;
    int instance = 0;
    double cd = 0.0;
};

struct Evaluation {
    MatchReport segmentation;
    std::vector<ShapeScore> shape;  // true-positive partitions at IoU 0.5
    double mean_cd = 0.0;           // 0 when no true positives
    MatchReport scene;
};

/// Ground-truth masks corrupted by `noise` with a seed derived from `seed`.
MaskSet scene_masks(const SceneDescription& scene, const NoiseConfig& noise, std::uint64_t seed);

/// Per-view label assignment followed by mergence. Merge ids are renumbered
/// 0..n-1 in view order before merging.
std::vector<Partition> segment_scene(const SceneDescription& scene, const MaskSet& masks, double h);

/// One partition per ground-truth instance over the fused cloud.
std::vector<Partition> truth_partitions(const SceneDescription& scene);

/// Majority ground-truth label of a partition's points (smallest on ties).
int majority_label(const Partition& partition, const PointCloud& fused);

/// Shape fitting in the canonical frame of each partition's majority
/// instance, then reconstruction. Partitions too small to fit keep the
/// template unchanged and add a warning.
Estimate estimate_shapes(const SceneDescription& scene, std::vector<Partition> partitions,
                         const PipelineConfig& config, std::uint64_t seed);

/// estimate_shapes for several fit modes at once; restricted fits seed the
/// full fit when both are requested.
std::vector<Estimate> estimate_modes(const SceneDescription& scene, const std::vector<Partition>& partitions,
                                     std::span<const FitMode> modes, const PipelineConfig& config,
                                     std::uint64_t seed);

/// Full estimate: masks, segmentation, fitting, reconstruction.
Estimate estimate_scene(const SceneDescription& scene, const PipelineConfig& config, std::uint64_t seed);

Evaluation evaluate_scene(const SceneDescription& scene, std::span<const Partition> partitions,
                          std::span<const InstanceFit> fits, const PointCloud& reconstruction,
                          const PipelineConfig& config, std::uint64_t seed);

std::string evaluation_table(const Evaluation& eval);
std::string evaluation_to_json(const Evaluation& eval);

// Result directory: partitions.json, fits.json, reconstructed.ply, masks.json.
void save_estimate(const std::filesystem::path& dir, const Estimate& estimate, const MaskSet& masks);
Estimate load_estimate(const std::filesystem::path& dir);

// Commands. Each returns the directory or file it wrote.
std::filesystem::path cmd_gen(const PipelineConfig& config);
std::filesystem::path cmd_estimate(const std::filesystem::path& scene_dir, const PipelineConfig& config);
std::filesystem::path cmd_eval(const std::filesystem::path& scene_dir, const std::filesystem::path& results_dir,
                               const PipelineConfig& config);

struct BenchReport {
    std::string json;
    std::string table;
    int scenes = 0;
    int failures = 0;
};

BenchReport run_bench(const PipelineConfig& config);
std::filesystem::path cmd_bench(const PipelineConfig& config);

}  // namespace clutterfit
