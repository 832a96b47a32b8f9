#pragma once

#include <string>

#include "obslab/lm.hpp"

namespace obslab {

// Model checkpoint: "OBSLM1\n" magic, a length-prefixed text header carrying
// the config and tensor manifest, then raw little-endian float32 arrays in
// manifest order. Weights round-trip with float32 precision.
void save_checkpoint(const TinyLm& model, const std::string& path);
TinyLm load_checkpoint(const std::string& path);

}  // namespace obslab
