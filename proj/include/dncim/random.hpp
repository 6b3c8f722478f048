#pragma once

// Splittable, counter-keyed random streams.
//
// Every stream is identified by a 64-bit key. Child streams are derived from
// the parent key and a (tag, index) pair, never from the parent's generator
// state, so the numbers a task sees depend only on where it sits in the
// derivation tree and not on scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace dncim {

namespace detail {

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
{
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

/// Purpose tags used when deriving substreams.
enum class StreamTag : std::uint64_t {
    Data = 1,
    Partition = 2,
    Validify = 3,
    Redraw = 4,
    Jitter = 5,
    Oracle = 6,
    Test = 99,
};

/// xoshiro256++ seeded from a 64-bit key through SplitMix64.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t key = 0) noexcept : key_(key)
    {
        std::uint64_t x = key;
        for (auto& word : state_) {
            x += detail::kGolden;
            word = detail::splitmix64_mix(x);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    std::uint64_t key() const noexcept { return key_; }

    /// Independent child stream keyed by (tag, index).
    RandomStream split(std::uint64_t tag, std::uint64_t index) const noexcept
    {
        std::uint64_t h = detail::splitmix64_mix(key_ ^ detail::kGolden);
        h = detail::splitmix64_mix(h + detail::kGolden * (tag + 1));
        h = detail::splitmix64_mix(h + detail::kGolden * (index + 1));
        return RandomStream(h);
    }

    RandomStream split(StreamTag tag, std::uint64_t index) const noexcept
    {
        return split(static_cast<std::uint64_t>(tag), index);
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform_open() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform_open(); }

    /// Standard exponential by inversion.
    double exponential() noexcept { return -std::log(uniform_open()); }

    /// Uniform integer on [0, bound) using Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        if (bound <= 1) return 0;
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_{};
};

} // namespace dncim
