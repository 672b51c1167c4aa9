#pragma once

#include <cstdint>
#include <random>

namespace tcbm {

// Independent random streams are addressed by (master seed, path index, purpose).
enum class StreamPurpose : std::uint64_t {
    time_change = 1,
    brownian = 2,
    auxiliary = 3,
};

using RngStream = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based seed derivation:
//   z0 = splitmix64(master)
//   z1 = splitmix64(z0 ^ (path * 0x9E3779B97F4A7C15))
//   z2 = splitmix64(z1 ^ purpose)
// The stream for a path never depends on how many other paths were drawn.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t path,
                                 StreamPurpose purpose) noexcept;

RngStream make_stream(std::uint64_t master, std::uint64_t path, StreamPurpose purpose);

}  // namespace tcbm
