#include "tcbm/rng.hpp"

namespace tcbm {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t path,
                                 StreamPurpose purpose) noexcept {
    std::uint64_t z = splitmix64(master);
    z = splitmix64(z ^ (path * 0x9E3779B97F4A7C15ULL));
    return splitmix64(z ^ static_cast<std::uint64_t>(purpose));
}

RngStream make_stream(std::uint64_t master, std::uint64_t path, StreamPurpose purpose) {
    return RngStream{derive_stream_seed(master, path, purpose)};
}

}  // namespace tcbm
