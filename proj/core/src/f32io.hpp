#pragma once

// Internal helpers: little-endian float32 blocks used by the artifact files.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <vector>

#include "obslab/error.hpp"

namespace obslab::detail {

inline void write_f32_le(std::ostream& os, const std::vector<double>& values) {
    std::vector<unsigned char> buf(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float f = static_cast<float>(values[i]);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        buf[4 * i + 0] = static_cast<unsigned char>(u & 0xFF);
        buf[4 * i + 1] = static_cast<unsigned char>((u >> 8) & 0xFF);
        buf[4 * i + 2] = static_cast<unsigned char>((u >> 16) & 0xFF);
        buf[4 * i + 3] = static_cast<unsigned char>((u >> 24) & 0xFF);
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void read_f32_le(std::istream& is, std::vector<double>& values) {
    std::vector<unsigned char> buf(values.size() * 4);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size()))
        raise(ErrorCode::checkpoint_format, "truncated float32 block");
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t u = static_cast<std::uint32_t>(buf[4 * i + 0]) |
                                (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                                (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                                (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        values[i] = static_cast<double>(f);
    }
}

}  // namespace obslab::detail
