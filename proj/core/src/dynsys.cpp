#include "obslab/dynsys.hpp"

#include <cmath>

#include "obslab/error.hpp"

namespace obslab {

const char* prompt_spec_name(const PromptSpec& spec) {
    struct Namer {
        const char* operator()(const Plain&) const { return "plain"; }
        const char* operator()(const VerbalPrompt&) const { return "verbal"; }
        const char* operator()(const NonVerbalPrompt&) const { return "nonverbal"; }
        const char* operator()(const FadingOnce&) const { return "fading_once"; }
        const char* operator()(const FadingInfinite&) const { return "fading_infinite"; }
    };
    return std::visit(Namer{}, spec);
}

void validate_spec(const PromptSpec& spec, const Vocabulary& vocab) {
    if (const auto* v = std::get_if<VerbalPrompt>(&spec)) {
        if (v->s < 0 || static_cast<std::size_t>(v->s) >= vocab.token_count())
            raise(ErrorCode::invalid_parameter, "spec: verbal prompt token out of range");
    } else if (const auto* nv = std::get_if<NonVerbalPrompt>(&spec)) {
        if (nv->s.rank() != 1 || nv->s.numel() != vocab.embed_dim())
            raise(ErrorCode::invalid_parameter, "spec: nonverbal prompt must be a {V} vector");
        ensure_finite(nv->s, "nonverbal prompt");
    } else if (const auto* fo = std::get_if<FadingOnce>(&spec)) {
        if (fo->m < 1) raise(ErrorCode::invalid_parameter, "spec: fading m must be >= 1");
    } else if (const auto* fi = std::get_if<FadingInfinite>(&spec)) {
        if (fi->m < 1) raise(ErrorCode::invalid_parameter, "spec: fading m must be >= 1");
        if (fi->lambda < 0.0 || fi->lambda > 1.0)
            raise(ErrorCode::invalid_parameter, "spec: lambda must lie in [0,1]");
    }
}

int verbalize_max(const Tensor& y) { return static_cast<int>(argmax_index(y)); }

int verbalize_sample(const Tensor& y, Rng& rng) {
    const Tensor probs = softmax(y);
    const double r = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.numel(); ++i) {
        acc += probs.values[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.numel() - 1);  // guard against rounding in acc
}

Tensor verbalize_linear(const Tensor& y, const Vocabulary& vocab) {
    if (y.rank() != 1 || y.numel() != vocab.token_count())
        raise(ErrorCode::invalid_input, "verbalize_linear: expected one logit per token");
    ensure_finite(y, "verbalize_linear input");
    return vocab.combination(y);
}

namespace {

Tensor initial_x0(const PromptSpec& spec, const Vocabulary& vocab) {
    struct Init {
        const Vocabulary& vocab;
        Tensor operator()(const Plain&) const { return vocab.embed_one(vocab.bos()); }
        Tensor operator()(const VerbalPrompt& v) const { return vocab.embed_one(v.s); }
        Tensor operator()(const NonVerbalPrompt& nv) const { return nv.s; }
        Tensor operator()(const FadingOnce&) const { return vocab.embed_one(vocab.bos()); }
        Tensor operator()(const FadingInfinite&) const { return vocab.embed_one(vocab.bos()); }
    };
    return std::visit(Init{vocab}, spec);
}

ExtendedState padded_state(std::size_t context, const PromptSpec& spec, const Vocabulary& vocab,
                           std::size_t prompt_len, const char* what) {
    if (prompt_len > context)
        raise(ErrorCode::prompt_overflow, std::string(what) + " of length " + std::to_string(prompt_len) +
                                              " exceeds the window length " + std::to_string(context));
    validate_spec(spec, vocab);
    ExtendedState st;
    st.window_ids.assign(context, vocab.bos());
    st.window.assign(context, vocab.embed_one(vocab.bos()));
    st.x0 = initial_x0(spec, vocab);
    return st;
}

}  // namespace

ExtendedState make_initial(const std::vector<int>& prompt, const PromptSpec& spec,
                           const Vocabulary& vocab, std::size_t context) {
    ExtendedState st = padded_state(context, spec, vocab, prompt.size(), "prompt");
    const std::size_t pad = context - prompt.size();
    for (std::size_t i = 0; i < prompt.size(); ++i) {
        st.window_ids[pad + i] = prompt[i];
        st.window[pad + i] = vocab.embed_one(prompt[i]);  // validates the id
    }
    return st;
}

ExtendedState make_initial_soft(const Tensor& prompt_rows, const PromptSpec& spec,
                                const Vocabulary& vocab, std::size_t context) {
    if (prompt_rows.rank() != 2 || prompt_rows.cols() != vocab.embed_dim())
        raise(ErrorCode::invalid_input, "soft prompt must be {n, V}, got " + shape_str(prompt_rows));
    ensure_finite(prompt_rows, "soft prompt");
    ExtendedState st = padded_state(context, spec, vocab, prompt_rows.rows(), "soft prompt");
    const std::size_t pad = context - prompt_rows.rows();
    for (std::size_t i = 0; i < prompt_rows.rows(); ++i) {
        st.window_ids[pad + i] = -1;
        Tensor row = Tensor::zeros({vocab.embed_dim()});
        for (std::size_t j = 0; j < vocab.embed_dim(); ++j) row.values[j] = prompt_rows.at(i, j);
        st.window[pad + i] = std::move(row);
    }
    return st;
}

StepResult step(const ExtendedState& state, const PromptSpec& spec, const TinyLm& model,
                const Vocabulary& vocab) {
    const std::size_t c = model.config().context;
    if (state.window.size() != c || state.window_ids.size() != c)
        raise(ErrorCode::invalid_input, "step: state window does not match the model's context");

    Tensor rows = Tensor::zeros({c + 1, vocab.embed_dim()});
    for (std::size_t j = 0; j < vocab.embed_dim(); ++j) rows.at(0, j) = state.x0.values[j];
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < vocab.embed_dim(); ++j) rows.at(i + 1, j) = state.window[i].values[j];

    StepResult out;
    out.y = model.logits_last(rows, /*pos_offset=*/0);
    out.u = verbalize_max(out.y);

    out.next.window_ids.assign(state.window_ids.begin() + 1, state.window_ids.end());
    out.next.window.assign(state.window.begin() + 1, state.window.end());
    out.next.window_ids.push_back(out.u);
    out.next.window.push_back(vocab.embed_one(out.u));

    struct NextX0 {
        const ExtendedState& state;
        const Tensor& y;
        const Vocabulary& vocab;
        Tensor operator()(const Plain&) const { return state.x0; }
        Tensor operator()(const VerbalPrompt&) const { return state.x0; }
        Tensor operator()(const NonVerbalPrompt&) const { return state.x0; }
        Tensor operator()(const FadingOnce& f) const {
            return vocab.combination(topm_softmax(y, f.m));
        }
        Tensor operator()(const FadingInfinite& f) const {
            const Tensor mix = vocab.combination(topm_softmax(y, f.m));
            Tensor x = Tensor::zeros({state.x0.numel()});
            for (std::size_t j = 0; j < x.numel(); ++j)
                x.values[j] = (1.0 - f.lambda) * state.x0.values[j] + f.lambda * mix.values[j];
            return x;
        }
    };
    out.next.x0 = std::visit(NextX0{state, out.y, vocab}, spec);
    return out;
}

Trajectory rollout_from(ExtendedState state, const PromptSpec& spec, std::size_t tau,
                        const TinyLm& model, const Vocabulary& vocab) {
    if (tau < 1) raise(ErrorCode::invalid_parameter, "rollout: horizon must be >= 1");
    Trajectory traj;
    traj.mental.reserve(tau);
    traj.verbal.reserve(tau);
    for (std::size_t t = 1; t <= tau; ++t) {
        StepResult r = step(state, spec, model, vocab);
        traj.mental.push_back(r.y);
        traj.verbal.push_back(r.u);
        if (r.u == vocab.eos()) {
            traj.eos_step = t;
            if (t < tau) {
                traj.terminated = true;
                while (traj.verbal.size() < tau) {
                    traj.mental.push_back(traj.mental.back());
                    traj.verbal.push_back(vocab.eos());
                }
            }
            break;
        }
        state = std::move(r.next);
    }
    return traj;
}

Trajectory rollout(const std::vector<int>& prompt, const PromptSpec& spec, std::size_t tau,
                   const TinyLm& model, const Vocabulary& vocab) {
    return rollout_from(make_initial(prompt, spec, vocab, model.config().context), spec, tau, model,
                        vocab);
}

Trajectory rollout_soft(const Tensor& prompt_rows, const PromptSpec& spec, std::size_t tau,
                        const TinyLm& model, const Vocabulary& vocab) {
    return rollout_from(make_initial_soft(prompt_rows, spec, vocab, model.config().context), spec,
                        tau, model, vocab);
}

}  // namespace obslab
