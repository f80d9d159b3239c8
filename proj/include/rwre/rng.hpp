#pragma once

#include <cstdint>

namespace rwre {

// Counter-based randomness: every random decision in the toolkit is a pure
// function of (master seed, stream tag, index). Parallel and serial runs
// therefore draw identical numbers no matter how work is scheduled.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

// Derive a child seed from (seed, index). Matches the splitmix64 output
// sequence when index counts up from 0.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + kGolden * (index + 1));
}

inline double unit_double(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
}

// Stream tags keeping the environment, walk, replica, scan and bootstrap
// substreams disjoint under one master seed.
inline constexpr std::uint64_t kStreamEnv = 0xe1;
inline constexpr std::uint64_t kStreamWalk = 0x17a;
inline constexpr std::uint64_t kStreamReplica = 0x2e9;
inline constexpr std::uint64_t kStreamScan = 0x3c4;
inline constexpr std::uint64_t kStreamBootstrap = 0x4b7;

// Minimal splitmix64 sequential generator for walker streams.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden;
        return mix64(state_);
    }

    double next_unit() { return unit_double(next()); }

private:
    std::uint64_t state_;
};

}  // namespace rwre
