#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "mlmc_saa/core.hpp"

namespace mlmc_saa {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block of
// four 32-bit words is a pure function of (key, counter), which is what makes
// streams reproducible independently of execution order.
class Philox4x32 {
public:
    using block_type = std::array<std::uint32_t, 4>;

    Philox4x32() = default;
    Philox4x32(std::uint32_t key0, std::uint32_t key1, block_type counter)
        : key_{key0, key1}, counter_(counter) {}

    block_type next_block() {
        block_type out = encrypt(counter_, key_);
        // 64-bit block index lives in words 0..1; words 2..3 identify the stream.
        if (++counter_[0] == 0) ++counter_[1];
        return out;
    }

    static block_type encrypt(block_type ctr, std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    std::array<std::uint32_t, 2> key_{};
    block_type counter_{};
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}
}  // namespace detail

// Uniform/normal draws on top of one Philox stream. Normals come from
// Box-Muller; the spare draw is cached, so the stream is consumed in a fixed
// deterministic pattern.
class RandomStream {
public:
    explicit RandomStream(const SeedSpec& spec) {
        const std::uint64_t k = detail::splitmix64(spec.master_seed);
        const std::uint32_t stream_word =
            (static_cast<std::uint32_t>(spec.stream_role) << 29) | (spec.level_index & 0x1FFFFFFFu);
        gen_ = Philox4x32(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                          {0u, 0u, spec.replication_index, stream_word});
    }

    std::uint32_t next_u32() {
        if (word_pos_ == 4) {
            block_ = gen_.next_block();
            word_pos_ = 0;
        }
        return block_[word_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0, 1]: 53-bit mantissa, never exactly zero (safe under log).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    Philox4x32 gen_;
    Philox4x32::block_type block_{};
    int word_pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline RandomStream make_stream(const SeedSpec& spec) { return RandomStream(spec); }

}  // namespace mlmc_saa
