#pragma once

#include "clutterfit/scene.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace clutterfit {

// Label raster: u32 width, u32 height, then width*height u16 values, all
// little-endian, row-major.
void write_label_raster(std::ostream& out, const LabelImage& image);
LabelImage read_label_raster(std::istream& in);

// Dense float32 matrix: u32 rows, u32 cols, then rows*cols f32 values,
// little-endian, row-major.
void write_matrix_f32(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_f32(std::istream& in);
void write_matrix_f32(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_f32(const std::filesystem::path& path);

/// {"views": [{"width", "height", "masks": [{"category", "runs": [[row, col, len], ...]}]}]}
std::string mask_set_to_json(const MaskSet& masks);
MaskSet mask_set_from_json(const std::string& text);
void save_mask_set(const std::filesystem::path& path, const MaskSet& masks);
MaskSet load_mask_set(const std::filesystem::path& path);

struct SceneMeta {
    std::uint64_t seed = 0;
    std::string preset;
};

/// Directory layout: scene.json, view_<k>.ply, view_<k>_labels.bin.
void save_scene(const std::filesystem::path& dir, const SceneDescription& scene, const SceneMeta& meta = {});
SceneDescription load_scene(const std::filesystem::path& dir, SceneMeta* meta = nullptr);

std::string scene_to_json(const SceneDescription& scene, const SceneMeta& meta);

// Shared helpers for JSON text files.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace clutterfit
