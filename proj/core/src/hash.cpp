#include "obslab/hash.hpp"

#include <cstdio>

namespace obslab {

std::uint64_t hash_bytes(std::string_view s) {
    Fnv1a h;
    h.update(s);
    return h.digest();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace obslab
