#include "obslab/lm.hpp"

#include <cmath>
#include <cstdio>

#include "obslab/error.hpp"
#include "obslab/hash.hpp"
#include "obslab/optim.hpp"
#include "obslab/rng.hpp"

namespace obslab {

void LmConfig::validate() const {
    if (embed_dim == 0 || context == 0 || layers == 0 || heads == 0 || ff_dim == 0)
        raise(ErrorCode::configuration, "model config: all sizes must be positive");
    if (embed_dim % heads != 0)
        raise(ErrorCode::configuration, "model config: embed_dim must be divisible by heads");
    if (vocab < 3)
        raise(ErrorCode::configuration, "model config: vocab must hold bytes plus specials");
}

NodeId LmNodes::id(const std::string& name) const {
    auto it = by_name.find(name);
    if (it == by_name.end()) raise(ErrorCode::invalid_input, "unknown parameter node " + name);
    return it->second;
}

TinyLm::TinyLm(LmConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    auto def = [&](const std::string& name, std::vector<std::size_t> shape) {
        order_.push_back(name);
        params_.emplace(name, Tensor::zeros(std::move(shape)));
    };
    const std::size_t v = cfg_.embed_dim;
    def("tok_emb", {cfg_.vocab, v});
    def("pos_emb", {cfg_.context + 1, v});
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        def(p + "ln1.gain", {v});
        def(p + "ln1.bias", {v});
        def(p + "attn.wq", {v, v});
        def(p + "attn.wk", {v, v});
        def(p + "attn.wv", {v, v});
        def(p + "attn.wo", {v, v});
        def(p + "ln2.gain", {v});
        def(p + "ln2.bias", {v});
        def(p + "ff.w1", {v, cfg_.ff_dim});
        def(p + "ff.b1", {cfg_.ff_dim});
        def(p + "ff.w2", {cfg_.ff_dim, v});
        def(p + "ff.b2", {v});
    }
    def("ln_f.gain", {v});
    def("ln_f.bias", {v});
    def("unembed", {cfg_.vocab, v});
}

Tensor& TinyLm::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) raise(ErrorCode::invalid_input, "unknown parameter " + name);
    return it->second;
}

const Tensor& TinyLm::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) raise(ErrorCode::invalid_input, "unknown parameter " + name);
    return it->second;
}

void TinyLm::init_random(std::uint64_t seed) {
    Rng rng(seed);
    for (const std::string& name : order_) {
        Tensor& t = params_.at(name);
        const bool is_gain = name.size() > 4 && name.rfind(".gain") == name.size() - 5;
        const bool is_bias = name.size() > 4 && (name.rfind(".bias") == name.size() - 5 ||
                                                 name.rfind(".b1") == name.size() - 3 ||
                                                 name.rfind(".b2") == name.size() - 3);
        if (is_gain)
            for (double& x : t.values) x = 1.0;
        else if (is_bias)
            for (double& x : t.values) x = 0.0;
        else
            for (double& x : t.values) x = rng.normal(0.0, 0.02);
    }
}

LmNodes TinyLm::register_params(Graph& g, bool trainable) const {
    LmNodes nodes;
    for (const std::string& name : order_) {
        const NodeId id = trainable ? g.param(name, params_.at(name))
                                    : g.input(params_.at(name), name);
        nodes.order.push_back(name);
        nodes.by_name[name] = id;
    }
    return nodes;
}

NodeId TinyLm::logits_node(Graph& g, const LmNodes& nodes, NodeId input_rows,
                           std::size_t pos_offset) const {
    const Tensor& rows = g.value(input_rows);
    if (rows.rank() != 2 || rows.cols() != cfg_.embed_dim)
        raise(ErrorCode::invalid_input, "forward: expected {T, embed_dim} rows, got " + shape_str(rows));
    const std::size_t t_len = rows.rows();
    if (t_len == 0) raise(ErrorCode::invalid_input, "forward: empty input");
    if (pos_offset + t_len > cfg_.context + 1)
        raise(ErrorCode::context_overflow,
              "forward: " + std::to_string(t_len) + " rows at offset " + std::to_string(pos_offset) +
                  " exceed the " + std::to_string(cfg_.context + 1) + "-slot window");

    std::vector<int> pos_ids(t_len);
    for (std::size_t i = 0; i < t_len; ++i) pos_ids[i] = static_cast<int>(pos_offset + i);
    NodeId x = g.add(input_rows, g.gather_rows(nodes.id("pos_emb"), pos_ids));

    const std::size_t head_dim = cfg_.embed_dim / cfg_.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        const NodeId normed1 =
            g.layer_norm_rows(x, nodes.id(p + "ln1.gain"), nodes.id(p + "ln1.bias"), cfg_.ln_eps);
        const NodeId q = g.matmul(normed1, nodes.id(p + "attn.wq"));
        const NodeId k = g.matmul(normed1, nodes.id(p + "attn.wk"));
        const NodeId v = g.matmul(normed1, nodes.id(p + "attn.wv"));
        std::vector<NodeId> head_outs;
        for (std::size_t h = 0; h < cfg_.heads; ++h) {
            const std::size_t off = h * head_dim;
            const NodeId qh = g.slice_cols(q, off, head_dim);
            const NodeId kh = g.slice_cols(k, off, head_dim);
            const NodeId vh = g.slice_cols(v, off, head_dim);
            const NodeId scores = g.scale(g.matmul(qh, kh, false, true), inv_sqrt_d);
            const NodeId attn = g.causal_softmax_rows(scores);
            head_outs.push_back(g.matmul(attn, vh));
        }
        const NodeId merged = cfg_.heads == 1 ? head_outs[0] : g.concat_cols(head_outs);
        x = g.add(x, g.matmul(merged, nodes.id(p + "attn.wo")));

        const NodeId normed2 =
            g.layer_norm_rows(x, nodes.id(p + "ln2.gain"), nodes.id(p + "ln2.bias"), cfg_.ln_eps);
        const NodeId hidden =
            g.gelu(g.add_bias(g.matmul(normed2, nodes.id(p + "ff.w1")), nodes.id(p + "ff.b1")));
        const NodeId ff_out =
            g.add_bias(g.matmul(hidden, nodes.id(p + "ff.w2")), nodes.id(p + "ff.b2"));
        x = g.add(x, ff_out);
    }
    const NodeId final_norm =
        g.layer_norm_rows(x, nodes.id("ln_f.gain"), nodes.id("ln_f.bias"), cfg_.ln_eps);
    return g.matmul(final_norm, nodes.id("unembed"), false, true);
}

Tensor TinyLm::forward_rows(const Tensor& rows, std::size_t pos_offset) const {
    // A throwaway tape shares every kernel call with the differentiable path,
    // keeping the two forward modes bitwise identical by construction.
    Graph g;
    const LmNodes nodes = register_params(g, /*trainable=*/false);
    const NodeId in = g.input(rows);
    return g.value(logits_node(g, nodes, in, pos_offset));
}

Tensor TinyLm::logits_last(const Tensor& rows, std::size_t pos_offset) const {
    Tensor all = forward_rows(rows, pos_offset);
    const std::size_t t_len = all.rows();
    Tensor out = Tensor::zeros({all.cols()});
    for (std::size_t j = 0; j < all.cols(); ++j) out.values[j] = all.at(t_len - 1, j);
    return out;
}

Tensor TinyLm::forward_ids(const std::vector<int>& ids, std::size_t pos_offset) const {
    if (ids.empty()) raise(ErrorCode::invalid_input, "forward: empty input");
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab)
            raise(ErrorCode::invalid_token, "forward: token id " + std::to_string(id) + " out of range");
    return forward_rows(gather_rows(params_.at("tok_emb"), ids), pos_offset);
}

void TinyLm::absorb(const Graph& g, const LmNodes& nodes) {
    for (const std::string& name : nodes.order) params_.at(name) = g.value(nodes.id(name));
}

Vocabulary TinyLm::vocabulary() const { return Vocabulary(params_.at("tok_emb")); }

std::uint64_t TinyLm::checksum() const {
    Fnv1a h;
    for (const std::string& name : order_) {
        h.update(name);
        h.update(params_.at(name));
    }
    return h.digest();
}

TrainStats train_lm(TinyLm& model, const std::vector<int>& corpus_ids, const TrainConfig& cfg) {
    const std::size_t c = model.config().context;
    if (corpus_ids.size() < c + 2)
        raise(ErrorCode::data, "train: corpus shorter than one context window");
    for (int id : corpus_ids)
        if (id < 0 || static_cast<std::size_t>(id) >= model.config().vocab)
            raise(ErrorCode::invalid_token, "train: corpus id out of range");
    if (cfg.batch == 0) raise(ErrorCode::invalid_parameter, "train: batch must be positive");
    if (cfg.steps == 0) return {};  // zero work requested; model untouched

    Rng rng(cfg.seed);
    OptimConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    opt.total_steps = cfg.steps;
    AdamW adam(opt);

    TrainStats stats;
    stats.losses.reserve(cfg.steps);
    const std::size_t max_start = corpus_ids.size() - (c + 1);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        Graph g;
        const LmNodes nodes = model.register_params(g, /*trainable=*/true);
        std::vector<NodeId> sample_logits;
        std::vector<int> targets;
        targets.reserve(cfg.batch * c);
        for (std::size_t s = 0; s < cfg.batch; ++s) {
            const std::size_t start = static_cast<std::size_t>(rng.below(max_start + 1));
            std::vector<int> window(corpus_ids.begin() + static_cast<std::ptrdiff_t>(start),
                                    corpus_ids.begin() + static_cast<std::ptrdiff_t>(start + c));
            for (std::size_t i = 1; i <= c; ++i) targets.push_back(corpus_ids[start + i]);
            const NodeId rows = g.gather_rows(nodes.id("tok_emb"), window);
            sample_logits.push_back(model.logits_node(g, nodes, rows, /*pos_offset=*/1));
        }
        const NodeId logits = sample_logits.size() == 1 ? sample_logits[0] : g.concat_rows(sample_logits);
        const NodeId loss = g.cross_entropy_mean(logits, targets);
        g.backward(loss);

        for (const std::string& name : nodes.order) {
            Tensor value = g.value(nodes.id(name));
            adam.update(name, value, g.grad(nodes.id(name)));
            model.param(name) = std::move(value);
        }
        adam.advance();

        const double step_loss = g.value(loss).values[0];
        stats.losses.push_back(step_loss);
        if (cfg.log_every && (step + 1) % cfg.log_every == 0)
            std::fprintf(stderr, "step %zu/%zu  ce %.4f\n", step + 1, cfg.steps, step_loss);
    }
    stats.final_loss = stats.losses.empty() ? 0.0 : stats.losses.back();
    return stats;
}

}  // namespace obslab
