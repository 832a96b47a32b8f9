#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "obslab/tensor.hpp"

namespace obslab {

/// 64-bit FNV-1a, used for parameter checksums and config hashes.
class Fnv1a {
public:
    void update(const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ULL;
        }
    }

    void update(std::string_view s) { update(s.data(), s.size()); }

    void update(const Tensor& t) {
        for (std::size_t d : t.shape) {
            std::uint64_t v = d;
            update(&v, sizeof(v));
        }
        update(t.values.data(), t.values.size() * sizeof(double));
    }

    std::uint64_t digest() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

std::uint64_t hash_bytes(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace obslab
