#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clutterfit {

template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

using Matrix3Xd = Matrix3X<double>;
using Vector3d = Vector3<double>;

enum class ErrorKind {
    EmptyInput,
    InvalidArgument,
    DegenerateGeometry,
    ShapeMismatch,
    TopologyMismatch,
    PlacementFailure,
    ZeroDenominator,
    Io,
    Data,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// splitmix64 finalizer; used to expand one master seed into independent streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stage,
                                    std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(mix_seed(master) ^ stage) ^ index);
}

// Stage tags for derive_seed.
namespace stage {
inline constexpr std::uint64_t scene = 0x5ce0e;
inline constexpr std::uint64_t render = 0x4e4d;
inline constexpr std::uint64_t masks = 0x3a5c;
inline constexpr std::uint64_t fit = 0xf17;
inline constexpr std::uint64_t reconstruct = 0x4ec0;
inline constexpr std::uint64_t metric = 0x3e7;
}  // namespace stage

}  // namespace clutterfit
