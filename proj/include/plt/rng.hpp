#pragma once

// Philox4x32-10 counter-based generator. A stream is identified by a 64-bit key; replicate r
// of a run with seed s uses key = stream_key(s, r). The generator satisfies
// UniformRandomBitGenerator and yields 64-bit words.

#include <array>
#include <cstdint>
#include <limits>

namespace plt {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t r)
{
    return splitmix64(splitmix64(seed) ^ (r * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

class Philox {
public:
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    explicit Philox(std::uint64_t key = 0) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    result_type operator()()
    {
        if (pos_ == 2) refill();
        return buf_[pos_++];
    }

    // Uniform in (0, 1) with 53 random bits; never returns 0 or 1.
    double uniform()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t draws() const { return counter_; }

private:
    void refill()
    {
        std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
            std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        ++counter_;
        buf_[0] = (std::uint64_t{c[0]} << 32) | c[1];
        buf_[1] = (std::uint64_t{c[2]} << 32) | c[3];
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int pos_ = 2;
};

} // namespace plt
