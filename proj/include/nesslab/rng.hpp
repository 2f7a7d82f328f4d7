#pragma once

// Reproducible random streams keyed by (seed, trajectory_id).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace nesslab {

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) {
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }
};

/// Uniform random bit generator for one trajectory: xoshiro256++ whose
/// state is the Philox image of (seed, trajectory_id). The stream is a pure
/// function of that pair, never of the worker that runs it.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t trajectory_id) {
        const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                                  static_cast<std::uint32_t>(seed >> 32)};
        const auto lo = static_cast<std::uint32_t>(trajectory_id);
        const auto hi = static_cast<std::uint32_t>(trajectory_id >> 32);
        const auto a = Philox4x32::apply({0, 0, lo, hi}, key);
        const auto b = Philox4x32::apply({1, 0, lo, hi}, key);
        s_[0] = (std::uint64_t{a[1]} << 32) | a[0];
        s_[1] = (std::uint64_t{a[3]} << 32) | a[2];
        s_[2] = (std::uint64_t{b[1]} << 32) | b[0];
        s_[3] = (std::uint64_t{b[3]} << 32) | b[2];
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_(*this); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nesslab
