#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "obslab/tensor.hpp"

namespace obslab {

// Byte-level token ids: 0..255 are raw bytes, then the two specials.
inline constexpr int kByteTokens = 256;
inline constexpr int kBosId = 256;
inline constexpr int kEosId = 257;
inline constexpr std::size_t kVocabSize = 258;

// Text to byte token ids (never produces specials).
std::vector<int> tokenize(std::string_view text);
// Ids back to text; specials render as "<bos>" / "<eos>".
std::string detokenize(const std::vector<int>& ids);
// Single-token display form: printable byte, hex escape, or special marker.
std::string token_repr(int id);

// Embedding table bundled with the special-token ids. Rows index tokens, so
// row t is the injection vector for token t.
class Vocabulary {
public:
    Vocabulary(Tensor embedding, int bos = kBosId, int eos = kEosId);

    std::size_t token_count() const { return embedding_.rows(); }
    std::size_t embed_dim() const { return embedding_.cols(); }
    int bos() const { return bos_; }
    int eos() const { return eos_; }
    const Tensor& embedding() const { return embedding_; }

    Tensor embed_one(int id) const;                   // {V}
    Tensor embed(const std::vector<int>& ids) const;  // {T, V}
    // Probability-weighted mix of embedding rows: sum_t probs[t] * row_t.
    Tensor combination(const Tensor& probs) const;    // {V}
    // Closest token id under Euclidean distance; ties go to the lowest id.
    int nearest_token(const Tensor& vec) const;

private:
    Tensor embedding_;
    int bos_, eos_;
};

}  // namespace obslab
