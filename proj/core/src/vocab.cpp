#include "obslab/vocab.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "obslab/error.hpp"

namespace obslab {

std::vector<int> tokenize(std::string_view text) {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (unsigned char ch : text) ids.push_back(static_cast<int>(ch));
    return ids;
}

std::string detokenize(const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id >= 0 && id < kByteTokens)
            out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
        else if (id == kBosId)
            out += "<bos>";
        else if (id == kEosId)
            out += "<eos>";
        else
            raise(ErrorCode::invalid_token, "detokenize: id " + std::to_string(id) + " out of range");
    }
    return out;
}

std::string token_repr(int id) {
    if (id == kBosId) return "<bos>";
    if (id == kEosId) return "<eos>";
    if (id < 0 || id >= kByteTokens)
        raise(ErrorCode::invalid_token, "token_repr: id " + std::to_string(id) + " out of range");
    if (id >= 0x20 && id <= 0x7E) return std::string(1, static_cast<char>(id));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "\\x%02x", id);
    return buf;
}

Vocabulary::Vocabulary(Tensor embedding, int bos, int eos)
    : embedding_(std::move(embedding)), bos_(bos), eos_(eos) {
    if (embedding_.rank() != 2 || embedding_.rows() == 0 || embedding_.cols() == 0)
        raise(ErrorCode::invalid_input, "vocabulary: embedding must be a non-empty matrix");
    const int m = static_cast<int>(embedding_.rows());
    if (bos_ < 0 || bos_ >= m || eos_ < 0 || eos_ >= m || bos_ == eos_)
        raise(ErrorCode::invalid_parameter, "vocabulary: bad special-token ids");
    ensure_finite(embedding_, "vocabulary embedding");
}

Tensor Vocabulary::embed_one(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= token_count())
        raise(ErrorCode::invalid_token, "embed: id " + std::to_string(id) + " out of range");
    Tensor out = Tensor::zeros({embed_dim()});
    for (std::size_t j = 0; j < embed_dim(); ++j) out.values[j] = embedding_.at(static_cast<std::size_t>(id), j);
    return out;
}

Tensor Vocabulary::embed(const std::vector<int>& ids) const {
    Tensor out = Tensor::zeros({ids.size(), embed_dim()});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= token_count())
            raise(ErrorCode::invalid_token, "embed: id " + std::to_string(ids[t]) + " out of range");
        for (std::size_t j = 0; j < embed_dim(); ++j)
            out.at(t, j) = embedding_.at(static_cast<std::size_t>(ids[t]), j);
    }
    return out;
}

Tensor Vocabulary::combination(const Tensor& probs) const {
    if (probs.rank() != 1 || probs.numel() != token_count())
        raise(ErrorCode::invalid_input, "combination: expected one weight per token");
    Tensor out = Tensor::zeros({embed_dim()});
    for (std::size_t t = 0; t < token_count(); ++t) {
        const double w = probs.values[t];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < embed_dim(); ++j) out.values[j] += w * embedding_.at(t, j);
    }
    return out;
}

int Vocabulary::nearest_token(const Tensor& vec) const {
    if (vec.rank() != 1 || vec.numel() != embed_dim())
        raise(ErrorCode::invalid_input, "nearest_token: dimension mismatch");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < token_count(); ++t) {
        double d = 0.0;
        for (std::size_t j = 0; j < embed_dim(); ++j) {
            const double diff = vec.values[j] - embedding_.at(t, j);
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(t);
        }
    }
    return best;
}

}  // namespace obslab
