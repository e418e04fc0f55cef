#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (key, counter), so a replica's Wiener noise,
// its jumps and the solver's auxiliary noise live on disjoint streams and can
// be regenerated in any order. The block function is Philox4x32-10
// (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace levyou {

/// Purpose of a stream inside one replica. The numeric values are part of the
/// reproducibility contract; do not renumber.
enum class StreamRole : std::uint64_t {
    wiener = 1,
    jumps = 2,
    solver = 3,
    small_jumps = 4,
    aux = 5,
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t m0 = 0xD2511F53U;
    constexpr std::uint32_t m1 = 0xCD9E8D57U;
    constexpr std::uint32_t w0 = 0x9E3779B9U;
    constexpr std::uint32_t w1 = 0xBB67AE85U;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

}  // namespace detail

/// Stream key for (master seed, replica index, role). Injective in the replica
/// index for a fixed seed and role up to 64-bit hash collisions.
inline std::uint64_t derive_stream_key(std::uint64_t seed, std::uint64_t replica, StreamRole role) noexcept {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ replica);
    h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(role) * 0xA24BAED4963EE407ULL));
    return h;
}

/// A counter-based generator. Satisfies UniformRandomBitGenerator, so it works
/// with <random> distributions, and also exposes indexed (seekable) draws.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

    CounterRng(std::uint64_t seed, std::uint64_t replica, StreamRole role) noexcept
        : key_(derive_stream_key(seed, replica, role)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return bits_at(counter_++); }

    /// 64 random bits at position `index`, independent of the sequential cursor.
    [[nodiscard]] result_type bits_at(std::uint64_t index) const noexcept {
        const auto out = detail::philox4x32(
            {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0U, 0U},
            {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
        return (std::uint64_t{out[0]} << 32) | out[1];
    }

    /// Uniform on the open interval (0, 1).
    [[nodiscard]] double uniform_at(std::uint64_t index) const noexcept {
        return (static_cast<double>(bits_at(index) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal at position `index` (Box-Muller on two sub-draws).
    [[nodiscard]] double normal_at(std::uint64_t index) const noexcept {
        const double u1 = uniform_at(2 * index);
        const double u2 = uniform_at(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double uniform() noexcept { return uniform_at(counter_++); }

    double normal() noexcept {
        const double z = normal_at(normal_counter_);
        ++normal_counter_;
        return z;
    }

    void seek(std::uint64_t counter) noexcept { counter_ = counter; }
    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    // Normals consume a separate index space (offset into the upper half) so
    // mixing uniform() and normal() calls never reuses a block.
    std::uint64_t normal_counter_ = std::uint64_t{1} << 62;
};

}  // namespace levyou
