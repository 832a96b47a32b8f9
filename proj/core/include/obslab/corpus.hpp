#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace obslab {

// Deterministic pseudo-text: templated sentences over a small lexicon.
// At least min_bytes long; same (min_bytes, seed) always yields the same text.
std::string synthetic_corpus(std::size_t min_bytes, std::uint64_t seed);

// The motif repeated until at least min_bytes. Fully predictable by a
// context-1 model; used to exercise the trainer's convergence floor.
std::string periodic_corpus(std::size_t min_bytes, std::string_view motif);

}  // namespace obslab
