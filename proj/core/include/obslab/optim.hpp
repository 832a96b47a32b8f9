#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "obslab/tensor.hpp"

namespace obslab {

struct OptimConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    // When > 0 the learning rate decays linearly from lr to 0 over this many
    // steps; step() keeps its own counter.
    std::size_t total_steps = 0;

    void validate() const;
};

// AdamW with decoupled weight decay. Moment buffers are keyed by parameter
// name so the surrounding graph may be rebuilt between steps.
class AdamW {
public:
    explicit AdamW(OptimConfig cfg);

    // Applies one update in place. Call once per parameter per step, then
    // advance(). Decay is not applied to parameters whose update is skipped.
    void update(const std::string& name, Tensor& param, const Tensor& grad);
    void advance() { ++step_; }

    std::size_t step() const { return step_; }
    double current_lr() const;
    const OptimConfig& config() const { return cfg_; }

private:
    struct Moments {
        Tensor m, v;
    };
    OptimConfig cfg_;
    std::size_t step_ = 1;  // 1-based, matching the bias-correction exponents
    std::map<std::string, Moments> state_;
};

}  // namespace obslab
