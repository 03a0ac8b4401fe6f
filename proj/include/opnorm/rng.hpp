#pragma once

#include <array>
#include <cstdint>

namespace opnorm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every output block is a pure function of (key, counter), so draws can be
/// addressed directly by coordinates instead of consumed from a stream. This
/// is what lets X(beta) share primitive draws across beta and lets
/// replications run in any order.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Key key, Counter ctr) noexcept;

    static Key key_from_seed(std::uint64_t seed) noexcept {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }
};

/// Uniform in the open interval (0, 1) from 64 random bits (52 used).
double uniform_open01(std::uint64_t bits) noexcept;

/// Two independent standard normals addressed by (seed, counter).
std::array<double, 2> normal_pair(std::uint64_t seed, Philox4x32::Counter ctr) noexcept;

/// Two independent uniforms in (0, 1) addressed by (seed, counter).
std::array<double, 2> uniform_pair(std::uint64_t seed, Philox4x32::Counter ctr) noexcept;

/// Derive the seed of child `index` from `base`. Children of one base are
/// independent of how many siblings exist.
std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Stream tags used as the first counter word so unrelated quantities never
/// share draws.
enum class Stream : std::uint32_t {
    innovation = 1,
    loading = 2,
    factor = 3,
    factor_noise = 4,
    moment_data = 5,
    sphere = 6,
    metric_space = 7,
    lanczos_start = 8,
    split = 0x5eed,
};

/// Sequential convenience wrapper: a counter that advances by one block per
/// call. Used where draws have no natural coordinates (test fixtures,
/// random point clouds).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint32_t substream = 0) noexcept
        : seed_(seed), stream_(static_cast<std::uint32_t>(stream)), substream_(substream) {}

    double uniform() noexcept;
    double normal() noexcept;
    std::uint64_t next_u64() noexcept;

private:
    Philox4x32::Counter next_counter() noexcept;

    std::uint64_t seed_;
    std::uint32_t stream_;
    std::uint32_t substream_;
    std::uint64_t position_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace opnorm
