#pragma once

#include "gp_pathwise/types.hpp"

#include <cstdint>
#include <random>

namespace gp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of stream `stream` under master seed `master`. The rule is
/// seed = mix64(mix64(master) ^ mix64(stream + 1)), so streams are fixed by
/// (master, stream) alone and never depend on scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(mix64(master) ^ mix64(stream + 1));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t stream) {
    return Rng(stream_seed(master, stream));
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Vector standard_normal(Eigen::Index size, Rng& rng);
Matrix uniform_points(Eigen::Index count, Eigen::Index dim, Rng& rng);

}  // namespace gp
