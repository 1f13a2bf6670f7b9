#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "salab/error.hpp"

namespace salab {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state;
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state(seed) {}
    constexpr std::uint64_t next() noexcept {
        state += 0x9E3779B97F4A7C15ULL;
        return splitmix64_mix(state);
    }
};

// xoshiro256** by Blackman and Vigna.
class Xoshiro256StarStar {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256StarStar(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm.next();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5ULL, 7) * 9ULL;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    bool operator==(const Xoshiro256StarStar&) const = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

struct StreamOrigin {
    std::uint64_t base_seed = 0;
    std::uint64_t trial_id = 0;
    std::uint64_t stream_id = 0;

    bool operator==(const StreamOrigin&) const = default;

    std::string to_string() const {
        return std::to_string(base_seed) + ":" + std::to_string(trial_id) + ":" +
               std::to_string(stream_id);
    }

    static StreamOrigin parse(std::string_view text) {
        StreamOrigin origin;
        std::istringstream in{std::string(text)};
        char c1 = 0, c2 = 0;
        if (!(in >> origin.base_seed >> c1 >> origin.trial_id >> c2 >> origin.stream_id) ||
            c1 != ':' || c2 != ':' || !in.eof()) {
            throw Error(ErrorKind::InvalidParameter,
                        "malformed stream origin '" + std::string(text) + "'");
        }
        return origin;
    }
};

inline std::uint64_t derive_seed(const StreamOrigin& origin) noexcept {
    std::uint64_t z = splitmix64_mix(origin.base_seed + 0x9E3779B97F4A7C15ULL);
    z = splitmix64_mix(z ^ (origin.trial_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    z = splitmix64_mix(z ^ (origin.stream_id * 0xAEF17502108EF2D9ULL + 0x632BE59BD9B4E019ULL));
    return z;
}

/// A single-owner random stream. Every variate helper consumes a fixed number
/// of 64-bit draws so sample counts map one-to-one onto stream positions.
class RngStream {
public:
    static constexpr std::string_view algorithm_id = "xoshiro256**/splitmix64";

    explicit RngStream(const StreamOrigin& origin)
        : origin_(origin), engine_(derive_seed(origin)) {}

    const StreamOrigin& origin() const noexcept { return origin_; }

    std::uint64_t next_u64() noexcept { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool operator==(const RngStream&) const = default;

private:
    StreamOrigin origin_;
    Xoshiro256StarStar engine_;
};

inline RngStream derive_stream(std::uint64_t base_seed, std::uint64_t trial_id,
                               std::uint64_t stream_id) {
    return RngStream(StreamOrigin{base_seed, trial_id, stream_id});
}

} // namespace salab
