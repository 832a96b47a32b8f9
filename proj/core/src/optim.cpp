#include "obslab/optim.hpp"

#include <cmath>

#include "obslab/error.hpp"

namespace obslab {

void OptimConfig::validate() const {
    if (!(lr > 0.0)) raise(ErrorCode::invalid_parameter, "optimizer: lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) raise(ErrorCode::invalid_parameter, "optimizer: beta1 must be in [0,1)");
    if (beta2 < 0.0 || beta2 >= 1.0) raise(ErrorCode::invalid_parameter, "optimizer: beta2 must be in [0,1)");
    if (!(eps > 0.0)) raise(ErrorCode::invalid_parameter, "optimizer: eps must be > 0");
    if (weight_decay < 0.0) raise(ErrorCode::invalid_parameter, "optimizer: weight_decay must be >= 0");
}

AdamW::AdamW(OptimConfig cfg) : cfg_(cfg) { cfg_.validate(); }

double AdamW::current_lr() const {
    if (cfg_.total_steps == 0) return cfg_.lr;
    const double progress = static_cast<double>(step_ - 1) / static_cast<double>(cfg_.total_steps);
    return cfg_.lr * std::max(0.0, 1.0 - progress);
}

void AdamW::update(const std::string& name, Tensor& param, const Tensor& grad) {
    if (!param.same_shape(grad))
        raise(ErrorCode::invalid_input, "optimizer: parameter/gradient shape mismatch for " + name);
    ensure_finite(grad, ("gradient for " + name).c_str());

    auto it = state_.find(name);
    if (it == state_.end())
        it = state_.emplace(name, Moments{Tensor::zeros(param.shape), Tensor::zeros(param.shape)}).first;
    Moments& st = it->second;
    if (!st.m.same_shape(param))
        raise(ErrorCode::contract_violation, "optimizer: moment shape changed for " + name);

    const double lr = current_lr();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < param.numel(); ++i) {
        const double g = grad.values[i];
        st.m.values[i] = cfg_.beta1 * st.m.values[i] + (1.0 - cfg_.beta1) * g;
        st.v.values[i] = cfg_.beta2 * st.v.values[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = st.m.values[i] / bc1;
        const double vhat = st.v.values[i] / bc2;
        param.values[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * param.values[i]);
    }
}

}  // namespace obslab
