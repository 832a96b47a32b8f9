#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "obslab/graph.hpp"
#include "obslab/tensor.hpp"
#include "obslab/vocab.hpp"

namespace obslab {

struct LmConfig {
    std::size_t embed_dim = 32;    // width of one context slot
    std::size_t context = 16;      // sliding-window length c
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ff_dim = 64;
    std::size_t vocab = kVocabSize;
    double ln_eps = 1e-5;

    void validate() const;
};

// Map from parameter name to its node in a Graph, in registration order.
struct LmNodes {
    std::vector<std::string> order;
    std::map<std::string, NodeId> by_name;
    NodeId id(const std::string& name) const;
};

// Pre-LN causal transformer over externally supplied context rows. The model
// reserves context+1 position slots: offset 0 is the extended-state prompt
// slot, plain token windows start at offset 1.
class TinyLm {
public:
    explicit TinyLm(LmConfig cfg);

    const LmConfig& config() const { return cfg_; }
    const std::vector<std::string>& param_names() const { return order_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

    void init_random(std::uint64_t seed);

    // Full logit matrix {T, vocab} for T embedded rows placed at positions
    // pos_offset .. pos_offset+T-1.
    Tensor forward_rows(const Tensor& rows, std::size_t pos_offset) const;
    // Next-token logits {vocab} (last row of forward_rows).
    Tensor logits_last(const Tensor& rows, std::size_t pos_offset) const;
    // Embeds token ids with the model's own table, then forward_rows.
    Tensor forward_ids(const std::vector<int>& ids, std::size_t pos_offset = 1) const;

    // Registers every parameter in g (trainable or frozen) for graph builds.
    LmNodes register_params(Graph& g, bool trainable) const;
    // Differentiable forward over already-registered params. input_rows must
    // be a {T, embed_dim} node; returns the {T, vocab} logits node.
    NodeId logits_node(Graph& g, const LmNodes& nodes, NodeId input_rows,
                       std::size_t pos_offset) const;

    // Copies updated values back from graph nodes into the model.
    void absorb(const Graph& g, const LmNodes& nodes);

    Vocabulary vocabulary() const;
    std::uint64_t checksum() const;

private:
    LmConfig cfg_;
    std::vector<std::string> order_;
    std::map<std::string, Tensor> params_;
};

struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch = 16;
    double lr = 1e-3;
    double weight_decay = 0.01;
    std::uint64_t seed = 7;
    std::size_t log_every = 0;  // 0 = silent
};

struct TrainStats {
    std::vector<double> losses;  // one mean cross-entropy per step, in nats
    double final_loss = 0.0;
};

// Next-token training on sliding windows over a byte-token corpus.
TrainStats train_lm(TinyLm& model, const std::vector<int>& corpus_ids, const TrainConfig& cfg);

}  // namespace obslab
