#include "obslab/mpp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "obslab/error.hpp"
#include "obslab/numerics.hpp"
#include "obslab/optim.hpp"
#include "obslab/rng.hpp"

namespace obslab {

void MppConfig::validate() const {
    if (n < 1) raise(ErrorCode::invalid_parameter, "prompt optimizer: n must be >= 1");
    if (tau < 1) raise(ErrorCode::invalid_parameter, "prompt optimizer: tau must be >= 1");
    if (batch_pairs < 1) raise(ErrorCode::invalid_parameter, "prompt optimizer: batch_pairs must be >= 1");
    if (!(lr > 0.0)) raise(ErrorCode::invalid_parameter, "prompt optimizer: lr must be > 0");
    if (reparam && hidden < 1) raise(ErrorCode::invalid_parameter, "prompt optimizer: hidden must be >= 1");
}

namespace {

// Logit rows y_1..y_tau for one control under soft feedback: each emitted
// row is softmax(y)·E, the probability-weighted embedding mix.
std::vector<NodeId> soft_logit_rows(Graph& g, const TinyLm& model, const LmNodes& nodes,
                                    NodeId x0_row, std::vector<NodeId> window_rows,
                                    std::size_t tau) {
    const std::size_t c = model.config().context;
    std::vector<NodeId> out;
    out.reserve(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        std::vector<NodeId> parts;
        parts.reserve(c + 1);
        parts.push_back(x0_row);
        for (NodeId w : window_rows) parts.push_back(w);
        const NodeId logits = model.logits_node(g, nodes, g.concat_rows(parts), /*pos_offset=*/0);
        const NodeId last = g.gather_rows(logits, {static_cast<int>(c)});
        out.push_back(last);
        if (t + 1 < tau) {
            const NodeId probs = g.exp_map(g.log_softmax_rows(last));
            const NodeId fed = g.matmul(probs, nodes.id("tok_emb"));
            window_rows.erase(window_rows.begin());
            window_rows.push_back(fed);
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> all_ordered_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            if (a != b) pairs.emplace_back(a, b);
    return pairs;
}

}  // namespace

double soft_prompt_loss(const TinyLm& model, const VerbalSet& domain, const Tensor& prompt_rows,
                        std::size_t tau) {
    if (domain.ids.size() < 2)
        raise(ErrorCode::invalid_parameter, "prompt objective needs at least two controls");
    const Vocabulary vocab = model.vocabulary();
    const std::size_t c = model.config().context;
    const ExtendedState base = make_initial_soft(prompt_rows, Plain{}, vocab, c);

    // Per control: tau soft-feedback steps, keeping each step's softmax.
    std::vector<std::vector<Tensor>> dists(domain.ids.size());
    for (std::size_t i = 0; i < domain.ids.size(); ++i) {
        std::vector<Tensor> window = base.window;
        const Tensor x0 = vocab.embed_one(domain.ids[i]);
        for (std::size_t t = 0; t < tau; ++t) {
            Tensor rows = Tensor::zeros({c + 1, vocab.embed_dim()});
            for (std::size_t j = 0; j < vocab.embed_dim(); ++j) rows.at(0, j) = x0.values[j];
            for (std::size_t w = 0; w < c; ++w)
                for (std::size_t j = 0; j < vocab.embed_dim(); ++j) rows.at(w + 1, j) = window[w].values[j];
            const Tensor probs = softmax(model.logits_last(rows, 0));
            dists[i].push_back(probs);
            if (t + 1 < tau) {
                window.erase(window.begin());
                window.push_back(vocab.combination(probs));
            }
        }
    }

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t a = 0; a < dists.size(); ++a)
        for (std::size_t b = 0; b < dists.size(); ++b) {
            if (a == b) continue;
            double kl = 0.0;
            for (std::size_t t = 0; t < tau; ++t) kl += kl_div(dists[a][t], dists[b][t]);
            total += -kl;
            ++count;
        }
    return total / static_cast<double>(count);
}

std::vector<std::vector<int>> handcrafted_baselines() {
    return {tokenize(""), tokenize(" "), tokenize("the"), tokenize("\n"), tokenize("what is")};
}

MppResult optimize_mpp(const TinyLm& model, const VerbalSet& domain, const MppConfig& cfg) {
    cfg.validate();
    if (domain.ids.size() < 2)
        raise(ErrorCode::invalid_parameter, "prompt optimizer needs at least two controls");
    validate_domain(ControlDomain{domain});
    const std::size_t c = model.config().context;
    if (cfg.n > c) raise(ErrorCode::prompt_overflow, "prompt optimizer: n exceeds the window length");
    const Vocabulary vocab = model.vocabulary();
    const std::size_t v_dim = vocab.embed_dim();

    // Trainable set: either the raw prompt rows, or a latent routed through a
    // one-hidden-layer tanh net. The output bias is chosen so the initial
    // prompt equals the init token's embedding exactly in both modes.
    Rng rng(cfg.seed);
    std::map<std::string, Tensor> train;
    const Tensor init_row = vocab.embed_one(cfg.init_token);
    if (cfg.reparam) {
        Tensor z = Tensor::zeros({cfg.n, v_dim});
        for (std::size_t i = 0; i < cfg.n; ++i)
            for (std::size_t j = 0; j < v_dim; ++j) z.at(i, j) = init_row.values[j];
        Tensor w1 = Tensor::zeros({v_dim, cfg.hidden});
        for (double& x : w1.values) x = rng.normal(0.0, 0.05);
        Tensor b1 = Tensor::zeros({cfg.hidden});
        Tensor w2 = Tensor::zeros({cfg.hidden, v_dim});
        for (double& x : w2.values) x = rng.normal(0.0, 0.05);
        const Tensor pre = matmul(tanh_map(add_bias_rows(matmul(z, w1), b1)), w2);
        Tensor b2 = Tensor::zeros({v_dim});
        for (std::size_t j = 0; j < v_dim; ++j) b2.values[j] = init_row.values[j] - pre.at(0, j);
        train.emplace("mpp.z", std::move(z));
        train.emplace("mpp.w1", std::move(w1));
        train.emplace("mpp.b1", std::move(b1));
        train.emplace("mpp.w2", std::move(w2));
        train.emplace("mpp.b2", std::move(b2));
    } else {
        Tensor p = Tensor::zeros({cfg.n, v_dim});
        for (std::size_t i = 0; i < cfg.n; ++i)
            for (std::size_t j = 0; j < v_dim; ++j) p.at(i, j) = init_row.values[j];
        train.emplace("mpp.p", std::move(p));
    }

    auto build_prompt_node = [&](Graph& g) -> NodeId {
        if (!cfg.reparam) return g.param("mpp.p", train.at("mpp.p"));
        const NodeId z = g.param("mpp.z", train.at("mpp.z"));
        const NodeId w1 = g.param("mpp.w1", train.at("mpp.w1"));
        const NodeId b1 = g.param("mpp.b1", train.at("mpp.b1"));
        const NodeId w2 = g.param("mpp.w2", train.at("mpp.w2"));
        const NodeId b2 = g.param("mpp.b2", train.at("mpp.b2"));
        return g.add_bias(g.matmul(g.tanh_map(g.add_bias(g.matmul(z, w1), b1)), w2), b2);
    };

    auto current_prompt = [&]() -> Tensor {
        if (!cfg.reparam) return train.at("mpp.p");
        const Tensor pre = matmul(
            tanh_map(add_bias_rows(matmul(train.at("mpp.z"), train.at("mpp.w1")), train.at("mpp.b1"))),
            train.at("mpp.w2"));
        return add_bias_rows(pre, train.at("mpp.b2"));
    };

    MppResult res;
    res.initial_loss = soft_prompt_loss(model, domain, current_prompt(), cfg.tau);

    const std::size_t d = domain.ids.size();
    const bool full = d <= cfg.full_pairwise_limit;
    const std::size_t steps_per_epoch =
        full ? 1 : (d + cfg.batch_pairs - 1) / cfg.batch_pairs;
    const std::size_t total_steps = cfg.epochs * steps_per_epoch;

    OptimConfig opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    opt.total_steps = total_steps;
    AdamW adam(opt);

    const auto full_pairs = full ? all_ordered_pairs(d) : std::vector<std::pair<std::size_t, std::size_t>>{};

    for (std::size_t step = 0; step < total_steps; ++step) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        if (full) {
            pairs = full_pairs;
        } else {
            pairs.reserve(cfg.batch_pairs);
            for (std::size_t k = 0; k < cfg.batch_pairs; ++k) {
                const std::size_t a = static_cast<std::size_t>(rng.below(d));
                std::size_t b = static_cast<std::size_t>(rng.below(d - 1));
                if (b >= a) ++b;
                pairs.emplace_back(a, b);
            }
        }

        Graph g;
        const LmNodes nodes = model.register_params(g, /*trainable=*/false);
        const NodeId prompt_node = build_prompt_node(g);

        // Shared window skeleton: bos padding then the prompt rows.
        std::vector<NodeId> base_window;
        base_window.reserve(c);
        const NodeId bos_row = g.input(Tensor::from({1, v_dim}, vocab.embed_one(vocab.bos()).values));
        for (std::size_t w = 0; w + cfg.n < c; ++w) base_window.push_back(bos_row);
        for (std::size_t i = 0; i < cfg.n; ++i)
            base_window.push_back(g.gather_rows(prompt_node, {static_cast<int>(i)}));

        std::vector<std::size_t> controls;
        for (const auto& [a, b] : pairs) {
            controls.push_back(a);
            controls.push_back(b);
        }
        std::sort(controls.begin(), controls.end());
        controls.erase(std::unique(controls.begin(), controls.end()), controls.end());

        std::map<std::size_t, std::vector<NodeId>> logit_rows;
        for (std::size_t idx : controls) {
            const NodeId x0_row =
                g.input(Tensor::from({1, v_dim}, vocab.embed_one(domain.ids[idx]).values));
            logit_rows[idx] = soft_logit_rows(g, model, nodes, x0_row, base_window, cfg.tau);
        }

        NodeId loss_sum = 0;
        bool have_loss = false;
        for (const auto& [a, b] : pairs) {
            for (std::size_t t = 0; t < cfg.tau; ++t) {
                const NodeId kl = g.kl_softmax_rows(logit_rows[a][t], logit_rows[b][t]);
                loss_sum = have_loss ? g.add(loss_sum, kl) : kl;
                have_loss = true;
            }
        }
        const NodeId loss = g.scale(loss_sum, -1.0 / static_cast<double>(pairs.size()));

        const double loss_value = g.value(loss).values[0];
        res.loss_curve.push_back(loss_value);
        if (!std::isfinite(loss_value)) {
            res.aborted = true;
            break;
        }

        g.backward(loss);
        for (auto& [name, tensor] : train) {
            Tensor value = g.value(g.param_id(name));
            adam.update(name, value, g.grad(g.param_id(name)));
            tensor = std::move(value);
        }
        adam.advance();
        ++res.steps_run;
    }

    res.prompt = current_prompt();
    ensure_finite(res.prompt, "optimized prompt");
    res.final_loss = soft_prompt_loss(model, domain, res.prompt, cfg.tau);
    return res;
}

}  // namespace obslab
