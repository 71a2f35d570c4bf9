#include "clutterfit/ply.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace clutterfit {
namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    throw Error(ErrorKind::Data, "ply: unknown property type '" + name + "'");
}

std::size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::Int8:
        case PlyType::UInt8: return 1;
        case PlyType::Int16:
        case PlyType::UInt16: return 2;
        case PlyType::Int32:
        case PlyType::UInt32:
        case PlyType::Float32: return 4;
        case PlyType::Float64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
};

Header read_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        throw Error(ErrorKind::Data, "ply: missing magic line");
    }
    Header header;
    bool have_format = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "end_header") {
            if (!have_format) throw Error(ErrorKind::Data, "ply: missing format line");
            return header;
        }
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                header.binary = false;
            } else if (fmt == "binary_little_endian") {
                header.binary = true;
            } else {
                throw Error(ErrorKind::Data, "ply: unsupported format '" + fmt + "'");
            }
            have_format = true;
        } else if (key == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (!ls) throw Error(ErrorKind::Data, "ply: malformed element line");
            header.elements.push_back(std::move(e));
        } else if (key == "property") {
            if (header.elements.empty()) throw Error(ErrorKind::Data, "ply: property before element");
            Property p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type >> p.name;
                p.is_list = true;
                p.count_type = parse_type(count_type);
                p.type = parse_type(item_type);
            } else {
                p.type = parse_type(type);
                ls >> p.name;
            }
            header.elements.back().properties.push_back(std::move(p));
        }
        // comment / obj_info lines are ignored
    }
    throw Error(ErrorKind::Data, "ply: header not terminated");
}

template <typename T>
T load_le(const unsigned char* bytes) {
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto* raw = reinterpret_cast<unsigned char*>(&value);
        std::reverse(raw, raw + sizeof(T));
    }
    return value;
}

double read_scalar(std::istream& in, PlyType type, bool binary) {
    if (!binary) {
        double v;
        if (!(in >> v)) throw Error(ErrorKind::Data, "ply: truncated ascii body");
        return type == PlyType::Float32 ? static_cast<double>(static_cast<float>(v)) : v;
    }
    std::array<unsigned char, 8> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(type_size(type)))) {
        throw Error(ErrorKind::Data, "ply: truncated binary body");
    }
    switch (type) {
        case PlyType::Int8: return load_le<std::int8_t>(buf.data());
        case PlyType::UInt8: return load_le<std::uint8_t>(buf.data());
        case PlyType::Int16: return load_le<std::int16_t>(buf.data());
        case PlyType::UInt16: return load_le<std::uint16_t>(buf.data());
        case PlyType::Int32: return load_le<std::int32_t>(buf.data());
        case PlyType::UInt32: return load_le<std::uint32_t>(buf.data());
        case PlyType::Float32: return load_le<float>(buf.data());
        case PlyType::Float64: return load_le<double>(buf.data());
    }
    return 0.0;
}

struct RawPly {
    Matrix3Xd vertices;
    std::vector<std::int32_t> instance;
    std::vector<std::int32_t> view;
    std::vector<std::vector<int>> faces;
};

RawPly read_raw(std::istream& in) {
    const Header header = read_header(in);
    RawPly raw;
    for (const Element& e : header.elements) {
        if (e.name == "vertex") {
            raw.vertices.resize(3, static_cast<Eigen::Index>(e.count));
            int xi = -1, yi = -1, zi = -1, li = -1, vi = -1;
            for (std::size_t p = 0; p < e.properties.size(); ++p) {
                const auto& name = e.properties[p].name;
                const int idx = static_cast<int>(p);
                if (name == "x") xi = idx;
                else if (name == "y") yi = idx;
                else if (name == "z") zi = idx;
                else if (name == "instance" || name == "label") li = idx;
                else if (name == "view") vi = idx;
            }
            if (xi < 0 || yi < 0 || zi < 0) throw Error(ErrorKind::Data, "ply: vertex lacks x/y/z");
            if (li >= 0) raw.instance.resize(e.count);
            if (vi >= 0) raw.view.resize(e.count);
            std::vector<double> values(e.properties.size());
            for (std::size_t r = 0; r < e.count; ++r) {
                for (std::size_t p = 0; p < e.properties.size(); ++p) {
                    const Property& prop = e.properties[p];
                    if (prop.is_list) {
                        const auto n = static_cast<std::size_t>(read_scalar(in, prop.count_type, header.binary));
                        for (std::size_t k = 0; k < n; ++k) read_scalar(in, prop.type, header.binary);
                        values[p] = 0.0;
                    } else {
                        values[p] = read_scalar(in, prop.type, header.binary);
                    }
                }
                const auto c = static_cast<Eigen::Index>(r);
                raw.vertices(0, c) = values[static_cast<std::size_t>(xi)];
                raw.vertices(1, c) = values[static_cast<std::size_t>(yi)];
                raw.vertices(2, c) = values[static_cast<std::size_t>(zi)];
                if (li >= 0) raw.instance[r] = static_cast<std::int32_t>(values[static_cast<std::size_t>(li)]);
                if (vi >= 0) raw.view[r] = static_cast<std::int32_t>(values[static_cast<std::size_t>(vi)]);
            }
        } else {
            const bool is_face = e.name == "face";
            for (std::size_t r = 0; r < e.count; ++r) {
                for (const Property& prop : e.properties) {
                    if (prop.is_list) {
                        const auto n = static_cast<std::size_t>(read_scalar(in, prop.count_type, header.binary));
                        std::vector<int> idx(n);
                        for (std::size_t k = 0; k < n; ++k) {
                            idx[k] = static_cast<int>(read_scalar(in, prop.type, header.binary));
                        }
                        if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                            raw.faces.push_back(std::move(idx));
                        }
                    } else {
                        read_scalar(in, prop.type, header.binary);
                    }
                }
            }
        }
    }
    return raw;
}

void put_f32(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const std::array<char, 4> b{static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(b.data(), 4);
}

void put_i32(std::ostream& out, std::int32_t v) {
    const auto bits = static_cast<std::uint32_t>(v);
    const std::array<char, 4> b{static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(b.data(), 4);
}

void write_header(std::ostream& out, PlyFormat format, std::size_t vertices, bool labels, bool views,
                  std::size_t faces) {
    out << "ply\n"
        << "format " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << vertices << "\n"
        << "property float x\nproperty float y\nproperty float z\n";
    if (labels) out << "property int instance\n";
    if (views) out << "property int view\n";
    if (faces > 0) {
        out << "element face " << faces << "\n"
            << "property list uchar int vertex_indices\n";
    }
    out << "end_header\n";
}

void write_vertices(std::ostream& out, PlyFormat format, const Matrix3Xd& v,
                    const std::vector<std::int32_t>* labels, const std::vector<std::int32_t>* views) {
    for (Eigen::Index i = 0; i < v.cols(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        if (format == PlyFormat::Ascii) {
            out << static_cast<float>(v(0, i)) << ' ' << static_cast<float>(v(1, i)) << ' '
                << static_cast<float>(v(2, i));
            if (labels) out << ' ' << (*labels)[u];
            if (views) out << ' ' << (*views)[u];
            out << '\n';
        } else {
            put_f32(out, v(0, i));
            put_f32(out, v(1, i));
            put_f32(out, v(2, i));
            if (labels) put_i32(out, (*labels)[u]);
            if (views) put_i32(out, (*views)[u]);
        }
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

void write_ply(std::ostream& out, const PointCloud& cloud, PlyFormat format) {
    cloud.validate();
    out.precision(9);
    write_header(out, format, cloud.size(), cloud.has_labels(), cloud.has_view_ids(), 0);
    write_vertices(out, format, cloud.points, cloud.has_labels() ? &cloud.labels : nullptr,
                   cloud.has_view_ids() ? &cloud.view_ids : nullptr);
}

void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyFormat format) {
    out.precision(9);
    write_header(out, format, mesh.vertex_count(), false, false, mesh.triangle_count());
    write_vertices(out, format, mesh.vertices, nullptr, nullptr);
    for (Eigen::Index t = 0; t < mesh.triangles.cols(); ++t) {
        if (format == PlyFormat::Ascii) {
            out << "3 " << mesh.triangles(0, t) << ' ' << mesh.triangles(1, t) << ' ' << mesh.triangles(2, t)
                << '\n';
        } else {
            out.put(3);
            for (int k = 0; k < 3; ++k) put_i32(out, mesh.triangles(k, t));
        }
    }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
    auto out = open_out(path);
    write_ply(out, cloud, format);
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format) {
    auto out = open_out(path);
    write_ply(out, mesh, format);
    if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

PointCloud read_ply_cloud(std::istream& in) {
    RawPly raw = read_raw(in);
    PointCloud cloud(std::move(raw.vertices));
    cloud.labels = std::move(raw.instance);
    cloud.view_ids = std::move(raw.view);
    cloud.validate();
    return cloud;
}

TriangleMesh read_ply_mesh(std::istream& in) {
    RawPly raw = read_raw(in);
    TriangleMesh mesh;
    mesh.vertices = std::move(raw.vertices);
    std::vector<Eigen::Vector3i> tris;
    for (const auto& f : raw.faces) {
        // fan-triangulate polygons
        for (std::size_t k = 1; k + 1 < f.size(); ++k) tris.emplace_back(f[0], f[k], f[k + 1]);
    }
    mesh.triangles.resize(3, static_cast<Eigen::Index>(tris.size()));
    for (std::size_t t = 0; t < tris.size(); ++t) mesh.triangles.col(static_cast<Eigen::Index>(t)) = tris[t];
    mesh.validate();
    return mesh;
}

PointCloud read_ply_cloud(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_ply_cloud(in);
}

TriangleMesh read_ply_mesh(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_ply_mesh(in);
}

}  // namespace clutterfit
