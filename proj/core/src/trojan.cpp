#include "obslab/trojan.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "f32io.hpp"
#include "obslab/dynsys.hpp"
#include "obslab/error.hpp"
#include "obslab/hash.hpp"
#include "obslab/optim.hpp"
#include "obslab/rng.hpp"

namespace obslab {

void TrojanSpec::validate(const Vocabulary& vocab, std::size_t context) const {
    if (target.empty()) raise(ErrorCode::invalid_parameter, "trojan: target must be nonempty");
    for (int id : target)
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.token_count())
            raise(ErrorCode::invalid_token, "trojan: target token out of range");
    if (benign_token < 0 || static_cast<std::size_t>(benign_token) >= vocab.token_count())
        raise(ErrorCode::invalid_token, "trojan: benign token out of range");
    if (user_prompt.size() > context)
        raise(ErrorCode::prompt_overflow, "trojan: user prompt exceeds the window length");
    if (!(lr > 0.0)) raise(ErrorCode::invalid_parameter, "trojan: lr must be > 0");
}

TrojanEval evaluate_trojan(const std::vector<int>& user_prompt, const Tensor& benign,
                           const Tensor& candidate, std::size_t agreement,
                           const std::vector<int>& target, const TinyLm& model,
                           const Vocabulary& vocab) {
    if (target.empty()) raise(ErrorCode::invalid_parameter, "trojan: target must be nonempty");
    const std::size_t horizon = agreement + target.size();
    const Trajectory ben = rollout(user_prompt, NonVerbalPrompt{benign}, horizon, model, vocab);
    const Trajectory cand = rollout(user_prompt, NonVerbalPrompt{candidate}, horizon, model, vocab);

    TrojanEval ev;
    while (ev.agreement_len < horizon &&
           ben.verbal[ev.agreement_len] == cand.verbal[ev.agreement_len])
        ++ev.agreement_len;
    for (std::size_t k = 0; k < target.size(); ++k)
        if (cand.verbal[agreement + k] == target[k]) ++ev.match_count;
    ev.success = ev.agreement_len >= agreement && ev.match_count == target.size();
    return ev;
}

TrojanResult craft_trojan(const TrojanSpec& spec, const TinyLm& model, const Vocabulary& vocab) {
    const std::size_t c = model.config().context;
    spec.validate(vocab, c);
    const std::size_t tau = spec.agreement;
    const std::size_t t_len = spec.target.size();
    const std::size_t horizon = tau + t_len;
    const std::size_t v_dim = vocab.embed_dim();

    TrojanResult res;
    res.model_checksum = model.checksum();

    const Tensor benign_vec = vocab.embed_one(spec.benign_token);
    const Trajectory benign = rollout(spec.user_prompt, NonVerbalPrompt{benign_vec}, horizon, model, vocab);

    // Forced context tokens: benign outputs through step tau, targets after.
    std::vector<int> forced;
    forced.reserve(horizon);
    for (std::size_t k = 0; k < tau; ++k) forced.push_back(benign.verbal[k]);
    for (int id : spec.target) forced.push_back(id);

    // Full token line-up the sliding windows are cut from.
    std::vector<int> full;
    full.assign(c, vocab.bos());
    const std::size_t pad = c - spec.user_prompt.size();
    for (std::size_t i = 0; i < spec.user_prompt.size(); ++i) full[pad + i] = spec.user_prompt[i];
    for (int id : forced) full.push_back(id);

    // One fixed tape reused every epoch: only the crafted vector changes.
    Graph g;
    const LmNodes nodes = model.register_params(g, /*trainable=*/false);
    Rng init_rng(spec.seed);
    Tensor s0 = Tensor::zeros({1, v_dim});
    for (std::size_t j = 0; j < v_dim; ++j) s0.at(0, j) = benign_vec.values[j] + 0.01 * init_rng.normal(0.0, 1.0);
    const NodeId troj = g.param("troj.s", s0);

    NodeId agree_sum = 0, target_sum = 0;
    bool have_agree = false, have_target = false;
    for (std::size_t k = 1; k <= horizon; ++k) {
        std::vector<int> window(full.begin() + static_cast<std::ptrdiff_t>(k - 1),
                                full.begin() + static_cast<std::ptrdiff_t>(k - 1 + c));
        const NodeId window_rows = g.input(gather_rows(model.param("tok_emb"), window));
        const NodeId rows = g.concat_rows({troj, window_rows});
        const NodeId logits = model.logits_node(g, nodes, rows, /*pos_offset=*/0);
        const NodeId last = g.gather_rows(logits, {static_cast<int>(c)});
        if (k <= tau) {
            const NodeId ben_logits = g.input(Tensor::from({1, benign.mental[k - 1].numel()},
                                                           benign.mental[k - 1].values));
            const NodeId kl = g.kl_softmax_rows(last, ben_logits);
            agree_sum = have_agree ? g.add(agree_sum, kl) : kl;
            have_agree = true;
        } else {
            const NodeId nll =
                g.scale(g.sum(g.pick_rows(g.log_softmax_rows(last), {spec.target[k - tau - 1]})), -1.0);
            target_sum = have_target ? g.add(target_sum, nll) : nll;
            have_target = true;
        }
    }
    const NodeId loss = have_agree ? g.add(agree_sum, target_sum) : target_sum;

    OptimConfig opt;
    opt.lr = spec.lr;
    opt.total_steps = spec.epochs;
    AdamW adam(opt);
    Tensor s_current = s0;

    for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
        const double loss_value = g.value(loss).values[0];
        res.loss_curve.push_back(loss_value);
        res.agree_terms.push_back(have_agree ? g.value(agree_sum).values[0] : 0.0);
        res.target_terms.push_back(g.value(target_sum).values[0]);
        if (!std::isfinite(loss_value)) {
            res.aborted = true;
            break;
        }

        g.backward(loss);
        adam.update("troj.s", s_current, g.grad(troj));
        adam.advance();
        g.set_value(troj, s_current);
        g.recompute();
        res.epochs_run = epoch;

        if (spec.eval_every && epoch % spec.eval_every == 0) {
            Tensor flat = Tensor::from({v_dim}, s_current.values);
            const TrojanEval ev = evaluate_trojan(spec.user_prompt, benign_vec, flat, tau,
                                                  spec.target, model, vocab);
            if (ev.success) break;
        }
    }

    res.crafted = Tensor::from({v_dim}, s_current.values);
    res.eval = evaluate_trojan(spec.user_prompt, benign_vec, res.crafted, tau, spec.target, model,
                               vocab);
    return res;
}

namespace {

// Greedy argmax plus the runner-up gap of one logit row.
void top_and_margin(const Tensor& y, int& best, double& margin) {
    best = 0;
    for (std::size_t i = 1; i < y.numel(); ++i)
        if (y.values[i] > y.values[best]) best = static_cast<int>(i);
    double second = -1e300;
    for (std::size_t i = 0; i < y.numel(); ++i)
        if (static_cast<int>(i) != best && y.values[i] > second) second = y.values[i];
    margin = y.values[best] - second;
}

bool printable(int id) { return id >= 0x20 && id <= 0x7e; }

}  // namespace

TrojanSetup select_trojan_setup(const std::vector<std::vector<int>>& candidates,
                                std::size_t agreement, std::size_t target_len,
                                const TinyLm& model, const Vocabulary& vocab) {
    if (candidates.empty())
        raise(ErrorCode::invalid_parameter, "trojan: candidate prompt list must be nonempty");
    if (agreement < 1) raise(ErrorCode::invalid_parameter, "trojan: agreement must be >= 1");
    if (target_len < 1) raise(ErrorCode::invalid_parameter, "trojan: target_len must be >= 1");
    const std::size_t c = model.config().context;
    const std::size_t v_dim = vocab.embed_dim();
    const std::size_t horizon = agreement + target_len;
    const Tensor benign_vec = vocab.embed_one(kBosId);

    TrojanSetup best;
    double best_score = -1e300;
    bool found = false;
    for (const std::vector<int>& prompt : candidates) {
        if (prompt.size() > c) raise(ErrorCode::prompt_overflow, "trojan: candidate exceeds window");
        const Trajectory ben = rollout(prompt, NonVerbalPrompt{benign_vec}, horizon, model, vocab);
        if (ben.terminated) continue;  // padded tails make margins meaningless
        double min_margin = 1e300;
        for (std::size_t k = 0; k < agreement; ++k) {
            int top;
            double margin;
            top_and_margin(ben.mental[k], top, margin);
            if (margin < min_margin) min_margin = margin;
        }
        // Cheapest printable divergence at the first forced step.
        const Tensor& y_flip = ben.mental[agreement];
        int ben_top;
        double unused;
        top_and_margin(y_flip, ben_top, unused);
        double alt_logit = -1e300;
        int alt = -1;
        for (int i = 0x20; i <= 0x7e; ++i)
            if (i != ben_top && y_flip.values[i] > alt_logit) { alt_logit = y_flip.values[i]; alt = i; }
        if (alt < 0) continue;
        const double flip_gap = y_flip.values[ben_top] - alt_logit;
        const double score = min_margin - flip_gap;
        if (score <= best_score) continue;

        // Forced continuation the model is most willing to emit: teacher-forced
        // windows with the benign hidden slot, flipping only where required.
        std::vector<int> line(c, kBosId);
        const std::size_t pad = c - prompt.size();
        for (std::size_t i = 0; i < prompt.size(); ++i) line[pad + i] = prompt[i];
        for (std::size_t k = 0; k < agreement; ++k) line.push_back(ben.verbal[k]);
        std::vector<int> target;
        for (std::size_t j = 0; j < target_len; ++j) {
            Tensor rows = Tensor::zeros({c + 1, v_dim});
            for (std::size_t d = 0; d < v_dim; ++d) rows.at(0, d) = benign_vec.values[d];
            for (std::size_t r = 0; r < c; ++r) {
                const Tensor e = vocab.embed_one(line[line.size() - c + r]);
                for (std::size_t d = 0; d < v_dim; ++d) rows.at(r + 1, d) = e.values[d];
            }
            const Tensor y = model.logits_last(rows, 0);
            int top;
            double margin;
            top_and_margin(y, top, margin);
            int chosen = -1;
            double chosen_logit = -1e300;
            for (int i = 0x20; i <= 0x7e; ++i) {
                if (j == 0 && i == top) continue;  // the payload must diverge immediately
                if (y.values[i] > chosen_logit) { chosen_logit = y.values[i]; chosen = i; }
            }
            target.push_back(chosen);
            line.push_back(chosen);
        }
        best = TrojanSetup{prompt, target, min_margin, flip_gap};
        best_score = score;
        found = true;
    }
    if (!found) raise(ErrorCode::invalid_input, "trojan: no viable candidate prompt");
    return best;
}

void save_trojan_vector(const TrojanResult& result, const TrojanSpec& spec,
                        const std::string& path) {
    std::ostringstream header;
    header << "dim=" << result.crafted.numel() << "\n"
           << "agreement=" << spec.agreement << "\n"
           << "target_len=" << spec.target.size() << "\n"
           << "seed=" << spec.seed << "\n"
           << "epochs_run=" << result.epochs_run << "\n"
           << "success=" << (result.eval.success ? 1 : 0) << "\n"
           << "model_checksum=" << hex64(result.model_checksum) << "\n";
    const std::string head = header.str();

    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorCode::io, "trojan: cannot open " + path + " for writing");
    os.write("OBSTJ1\n", 7);
    os << head.size() << "\n";
    os.write(head.data(), static_cast<std::streamsize>(head.size()));
    detail::write_f32_le(os, result.crafted.values);
    if (!os) raise(ErrorCode::io, "trojan: write failed for " + path);
}

Tensor load_trojan_vector(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorCode::io, "trojan: cannot open " + path);
    char magic[7];
    is.read(magic, 7);
    if (is.gcount() != 7 || std::string(magic, 7) != "OBSTJ1\n")
        raise(ErrorCode::checkpoint_format, "trojan: bad magic in " + path);
    std::string len_line;
    if (!std::getline(is, len_line)) raise(ErrorCode::checkpoint_format, "trojan: missing header length");
    std::size_t head_len = 0;
    try {
        head_len = static_cast<std::size_t>(std::stoull(len_line));
    } catch (const std::exception&) {
        raise(ErrorCode::checkpoint_format, "trojan: bad header length line");
    }
    std::string head(head_len, '\0');
    is.read(head.data(), static_cast<std::streamsize>(head_len));
    if (is.gcount() != static_cast<std::streamsize>(head_len))
        raise(ErrorCode::checkpoint_format, "trojan: truncated header");
    std::size_t dim = 0;
    std::istringstream hs(head);
    std::string line;
    while (std::getline(hs, line))
        if (line.rfind("dim=", 0) == 0) dim = std::stoull(line.substr(4));
    if (dim == 0) raise(ErrorCode::checkpoint_format, "trojan: header missing dim");
    Tensor out = Tensor::zeros({dim});
    detail::read_f32_le(is, out.values);
    return out;
}

}  // namespace obslab
