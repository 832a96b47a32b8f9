#pragma once

// Gradient search for a continuous user prompt that makes hidden system
// prompts maximally distinguishable: minimizes the mean of -KL between the
// output distributions of distinct controls.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "obslab/lm.hpp"
#include "obslab/observability.hpp"
#include "obslab/tensor.hpp"

namespace obslab {

struct MppConfig {
    std::size_t n = 1;    // continuous prompt rows occupying the window tail
    std::size_t tau = 1;  // steps the objective looks ahead
    std::size_t epochs = 10;
    std::size_t batch_pairs = 10;  // sampled ordered pairs per step
    double lr = 1e-2;
    double weight_decay = 0.0;
    bool reparam = true;          // route the prompt through a tanh bottleneck net
    std::size_t hidden = 512;     // bottleneck width
    int init_token = '\n';        // prompt starts exactly at this embedding
    std::uint64_t seed = 0;
    std::size_t full_pairwise_limit = 128;  // exact loss per step when |domain| fits

    void validate() const;
};

struct MppResult {
    Tensor prompt;  // {n, V}
    std::vector<double> loss_curve;  // per optimization step (sampled batches)
    double initial_loss = 0.0;       // exact full-pairwise loss before training
    double final_loss = 0.0;         // exact full-pairwise loss after training
    bool aborted = false;            // stopped on a non-finite loss
    std::size_t steps_run = 0;
};

MppResult optimize_mpp(const TinyLm& model, const VerbalSet& domain, const MppConfig& cfg);

// Exact objective value of a fixed continuous prompt: mean over all ordered
// control pairs (s != s') of -KL(softmax(y_s) || softmax(y_s')), summed over
// the tau steps of soft-feedback rollouts.
double soft_prompt_loss(const TinyLm& model, const VerbalSet& domain, const Tensor& prompt_rows,
                        std::size_t tau);

// Fixed reference prompts the optimized prompt is compared against.
std::vector<std::vector<int>> handcrafted_baselines();

}  // namespace obslab
