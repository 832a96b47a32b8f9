#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "obslab/lm.hpp"
#include "obslab/numerics.hpp"
#include "obslab/rng.hpp"
#include "obslab/tensor.hpp"
#include "obslab/vocab.hpp"

namespace obslab {

// The four hidden-system-prompt model families, plus the prompt-free loop.
// The x0 slot is constant for Plain/Verbal/NonVerbal; the fading-memory
// variants overwrite it each step with a projection of the current logits.
struct Plain {};
struct VerbalPrompt {
    int s = kBosId;  // token id whose embedding seeds x0
};
struct NonVerbalPrompt {
    Tensor s;  // arbitrary vector in R^V
};
struct FadingOnce {
    std::size_t m = 1;  // top-m mass kept when summarizing logits
};
struct FadingInfinite {
    std::size_t m = 1;
    double lambda = 0.5;  // exponential averaging rate
};
using PromptSpec = std::variant<Plain, VerbalPrompt, NonVerbalPrompt, FadingOnce, FadingInfinite>;

const char* prompt_spec_name(const PromptSpec& spec);
void validate_spec(const PromptSpec& spec, const Vocabulary& vocab);

// Sliding token window of length c plus the prepended soft slot x0.
// window_ids mirrors window row-for-row; -1 marks a soft (non-token) row.
struct ExtendedState {
    std::vector<int> window_ids;
    std::vector<Tensor> window;  // c rows, each {V}
    Tensor x0;                   // {V}
};

struct Trajectory {
    std::vector<Tensor> mental;  // logit vectors {M}, one per step
    std::vector<int> verbal;     // token ids, one per step
    bool terminated = false;     // eos fired before the horizon; tail is padding
    std::size_t eos_step = 0;    // 1-based step that emitted eos, 0 if none
};

struct StepResult {
    ExtendedState next;
    Tensor y;  // logits at this step
    int u;     // greedy token emitted
};

// Greedy verbalizer; ties go to the lowest token id.
int verbalize_max(const Tensor& y);
// Draws from softmax(y) by inverse CDF on the supplied RNG.
int verbalize_sample(const Tensor& y, Rng& rng);
// Linear verbalizer K·y (raw logits, not a distribution).
Tensor verbalize_linear(const Tensor& y, const Vocabulary& vocab);

// Builds the initial extended state: window = left-bos-padded prompt, x0 per
// spec. Prompts longer than c are rejected, never truncated.
ExtendedState make_initial(const std::vector<int>& prompt, const PromptSpec& spec,
                           const Vocabulary& vocab, std::size_t context);
// Same, but the prompt occupies the window's trailing rows as raw vectors
// (continuous prompts from the optimizer).
ExtendedState make_initial_soft(const Tensor& prompt_rows, const PromptSpec& spec,
                                const Vocabulary& vocab, std::size_t context);

// One closed-loop step: forward on [x0 ; window], greedy-verbalize, shift the
// window, update x0 per spec.
StepResult step(const ExtendedState& state, const PromptSpec& spec, const TinyLm& model,
                const Vocabulary& vocab);

// tau closed-loop steps from make_initial. If eos fires at step k < tau the
// verbal tail is padded with eos and the mental tail repeats step k's logits,
// with terminated set; this keeps all trajectories the same length.
Trajectory rollout(const std::vector<int>& prompt, const PromptSpec& spec, std::size_t tau,
                   const TinyLm& model, const Vocabulary& vocab);
Trajectory rollout_soft(const Tensor& prompt_rows, const PromptSpec& spec, std::size_t tau,
                        const TinyLm& model, const Vocabulary& vocab);
// Rollout from an already-built initial state.
Trajectory rollout_from(ExtendedState state, const PromptSpec& spec, std::size_t tau,
                        const TinyLm& model, const Vocabulary& vocab);

}  // namespace obslab
