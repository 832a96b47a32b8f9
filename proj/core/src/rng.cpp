#include "obslab/rng.hpp"

#include <cmath>
#include <numbers>

#include "obslab/error.hpp"

namespace obslab {

double Rng::normal(double mu, double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return mu + spare_ * sigma;
    }
    const double angle = uniform01() * 2.0 * std::numbers::pi;
    const double radius = std::sqrt(-2.0 * std::log(1.0 - uniform01()));
    spare_ = std::sin(angle) * radius;
    has_spare_ = true;
    return mu + std::cos(angle) * radius * sigma;
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) raise(ErrorCode::invalid_parameter, "Rng::below(0)");
    // Multiply-shift map onto [0, n); bias is < n / 2^64.
    const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) raise(ErrorCode::invalid_parameter, "sample_without_replacement: k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace obslab
