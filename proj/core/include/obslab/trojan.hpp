#pragma once

// Crafting hidden prompt vectors that mimic a benign prompt's outputs for a
// fixed number of steps and then steer the model to attacker-chosen tokens.
// Model weights are never touched; only the injected vector is optimized.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "obslab/lm.hpp"
#include "obslab/tensor.hpp"
#include "obslab/vocab.hpp"

namespace obslab {

struct TrojanSpec {
    std::vector<int> user_prompt;
    int benign_token = kBosId;  // x0 reference: this token's embedding
    std::vector<int> target;    // tokens forced after the agreement window
    std::size_t agreement = 8;  // steps the outputs must match the benign run
    std::size_t epochs = 1000;
    double lr = 5e-2;
    std::uint64_t seed = 0;
    std::size_t eval_every = 25;  // closed-loop success check cadence (0 = never)

    void validate(const Vocabulary& vocab, std::size_t context) const;
};

struct TrojanEval {
    std::size_t agreement_len = 0;  // longest common verbal prefix vs benign
    std::size_t match_count = 0;    // forced positions that hit the target
    bool success = false;
};

struct TrojanResult {
    Tensor crafted;  // {V}
    std::vector<double> loss_curve;
    std::vector<double> agree_terms;   // first loss component per epoch
    std::vector<double> target_terms;  // second loss component per epoch
    TrojanEval eval;
    bool aborted = false;
    std::size_t epochs_run = 0;
    std::uint64_t model_checksum = 0;  // recorded before crafting
};

// Optimizes the injected vector with teacher-forced contexts: the first
// `agreement` steps feed the benign run's tokens, the next steps feed the
// targets. Stops early when the closed-loop evaluation succeeds.
TrojanResult craft_trojan(const TrojanSpec& spec, const TinyLm& model, const Vocabulary& vocab);

struct TrojanSetup {
    std::vector<int> user_prompt;
    std::vector<int> target;          // printable ascii, first token diverges
    double min_agreement_margin = 0;  // smallest top1-top2 logit gap on steps 1..agreement
    double flip_gap = 0;              // logit cost of the first forced divergence
};

// Attacker-side target selection: picks from `candidates` the user prompt
// whose benign rollout holds its greedy choices by the widest margins over the
// agreement window and diverges most cheaply right after, then derives the
// forced continuation the model is most willing to emit. Exact-match crafting
// is far easier against such prompts than against arbitrary text.
TrojanSetup select_trojan_setup(const std::vector<std::vector<int>>& candidates,
                                std::size_t agreement, std::size_t target_len,
                                const TinyLm& model, const Vocabulary& vocab);

// Pure closed-loop comparison: greedy rollouts with the benign and candidate
// vectors in the hidden slot, no teacher forcing.
TrojanEval evaluate_trojan(const std::vector<int>& user_prompt, const Tensor& benign,
                           const Tensor& candidate, std::size_t agreement,
                           const std::vector<int>& target, const TinyLm& model,
                           const Vocabulary& vocab);

// Raw artifact: text header (dims, seed, model checksum) + little-endian
// float32 vector block.
void save_trojan_vector(const TrojanResult& result, const TrojanSpec& spec,
                        const std::string& path);
Tensor load_trojan_vector(const std::string& path);

}  // namespace obslab
