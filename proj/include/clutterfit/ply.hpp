#pragma once

#include "clutterfit/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace clutterfit {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Vertex properties are x, y, z as float32, plus int32 "instance" when the
/// cloud carries labels and int32 "view" when it carries view ids.
void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format);
void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyFormat format);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyFormat format = PlyFormat::BinaryLittleEndian);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

/// Readers accept ascii and binary_little_endian files with any scalar
/// property types; unknown properties and elements are skipped.
PointCloud read_ply_cloud(std::istream& in);
TriangleMesh read_ply_mesh(std::istream& in);
PointCloud read_ply_cloud(const std::filesystem::path& path);
TriangleMesh read_ply_mesh(const std::filesystem::path& path);

}  // namespace clutterfit
