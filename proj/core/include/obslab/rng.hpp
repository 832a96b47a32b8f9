#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace obslab {

/// Deterministic counter-style generator (splitmix64 core). Every stochastic
/// choice in the engine flows through one of these with an explicit seed, so
/// runs are reproducible bit-for-bit and the seed can be recorded in reports.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller with a cached spare draw.
    double normal(double mu = 0.0, double sigma = 1.0);

    /// Uniform integer in [0, n). n must be positive.
    std::size_t below(std::size_t n);

    /// k distinct indices drawn from [0, n) via partial Fisher-Yates.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace obslab
