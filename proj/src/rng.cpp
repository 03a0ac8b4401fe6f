#include "opnorm/rng.hpp"

#include <cmath>
#include <numbers>

namespace opnorm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) noexcept {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

std::array<double, 2> box_muller(double u1, double u2) noexcept {
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Key key, Counter ctr) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

double uniform_open01(std::uint64_t bits) noexcept {
    // (k + 0.5) / 2^52 never hits 0 or 1.
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

std::array<double, 2> uniform_pair(std::uint64_t seed, Philox4x32::Counter ctr) noexcept {
    const auto out = Philox4x32::block(Philox4x32::key_from_seed(seed), ctr);
    return {uniform_open01(join(out[0], out[1])), uniform_open01(join(out[2], out[3]))};
}

std::array<double, 2> normal_pair(std::uint64_t seed, Philox4x32::Counter ctr) noexcept {
    const auto u = uniform_pair(seed, ctr);
    return box_muller(u[0], u[1]);
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) noexcept {
    const auto out = Philox4x32::block(
        Philox4x32::key_from_seed(base),
        {static_cast<std::uint32_t>(Stream::split), static_cast<std::uint32_t>(index),
         static_cast<std::uint32_t>(index >> 32), 0u});
    return join(out[0], out[1]);
}

Philox4x32::Counter CounterRng::next_counter() noexcept {
    const std::uint64_t pos = position_++;
    return {stream_, substream_, static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(pos >> 32)};
}

std::uint64_t CounterRng::next_u64() noexcept {
    const auto out = Philox4x32::block(Philox4x32::key_from_seed(seed_), next_counter());
    return join(out[0], out[1]);
}

double CounterRng::uniform() noexcept { return uniform_open01(next_u64()); }

double CounterRng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const auto z = normal_pair(seed_, next_counter());
    spare_ = z[1];
    has_spare_ = true;
    return z[0];
}

}  // namespace opnorm
