#pragma once

// A constructed system that is maximally unobservable: linear feedback keeps
// the state contracting inside a certified ball on which the verbalizer is
// constant, so every initial condition produces the same output sequence
// while the state trajectories all differ.

#include <cstddef>
#include <cstdint>

#include "obslab/dynsys.hpp"
#include "obslab/rng.hpp"
#include "obslab/tensor.hpp"

namespace obslab {

struct UnobservableSystem {
    Tensor feedback;     // H {M, cV}: state to logits
    Tensor projection;   // K {V, M}: logits to injected vector
    Tensor closed_loop;  // C {cV, cV}: shift + injection of K·H·x
    int constant_token = 0;   // the verbalizer's only output on the ball
    double certificate = 0.0;    // operator norm of C^context, must be < 1
    double amplification = 1.0;  // max operator norm of C^t for t < context
    std::size_t context = 0;
    std::size_t embed_dim = 0;
    std::size_t token_count = 0;
    std::size_t halvings = 0;  // times the feedback was scaled down by 0.5
};

// Draws random H, K and halves H until the window-length closed-loop map is
// a strict contraction. The one-step map always has operator norm >= 1 (the
// shift moves slots verbatim), so the certificate is taken over one full
// window turnover, which still bounds every longer horizon.
UnobservableSystem construct_unobservable_system(std::size_t context, std::size_t embed_dim,
                                                 std::size_t token_count, std::uint64_t seed);

// Closed-loop run: mental step t is H·x(t), verbal output is the constant
// token, state advances by the closed-loop matrix.
Trajectory unobservable_rollout(const UnobservableSystem& sys, const Tensor& x_init,
                                std::size_t tau);

// A state drawn uniformly at random on the sphere of the given radius.
Tensor random_state(const UnobservableSystem& sys, double radius, Rng& rng);

}  // namespace obslab
