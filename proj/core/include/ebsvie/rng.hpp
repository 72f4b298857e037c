#pragma once

#include <cstdint>
#include <random>

namespace ebsvie {

/// Mixes a master seed with a stream index (SplitMix64 finalizer). Used to
/// derive independent seeds for per-point jobs.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Standard-normal stream keyed by (seed, path). Path p draws the same
/// numbers no matter how many paths the ensemble has or which thread runs it.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ebsvie
