#include "obslab/unobservable.hpp"

#include <cmath>

#include "obslab/error.hpp"
#include "obslab/numerics.hpp"

namespace obslab {

namespace {

// C = shift + injection: block-row k copies block k+1, the last block row
// applies K·H to the whole state.
Tensor build_closed_loop(const Tensor& feedback, const Tensor& projection, std::size_t context,
                         std::size_t embed_dim) {
    const std::size_t n = context * embed_dim;
    Tensor c = Tensor::zeros({n, n});
    for (std::size_t k = 0; k + 1 < context; ++k)
        for (std::size_t j = 0; j < embed_dim; ++j) c.at(k * embed_dim + j, (k + 1) * embed_dim + j) = 1.0;
    const Tensor kh = matmul(projection, feedback);  // {V, cV}
    for (std::size_t i = 0; i < embed_dim; ++i)
        for (std::size_t j = 0; j < n; ++j) c.at((context - 1) * embed_dim + i, j) = kh.at(i, j);
    return c;
}

Tensor matrix_power(const Tensor& m, std::size_t p) {
    Tensor acc = Tensor::zeros({m.rows(), m.rows()});
    for (std::size_t i = 0; i < m.rows(); ++i) acc.at(i, i) = 1.0;
    for (std::size_t k = 0; k < p; ++k) acc = matmul(acc, m);
    return acc;
}

}  // namespace

UnobservableSystem construct_unobservable_system(std::size_t context, std::size_t embed_dim,
                                                 std::size_t token_count, std::uint64_t seed) {
    if (context < 2 || embed_dim == 0 || token_count == 0)
        raise(ErrorCode::invalid_parameter, "unobservable system: need context >= 2 and positive dims");
    const std::size_t n = context * embed_dim;

    Rng rng(seed);
    UnobservableSystem sys;
    sys.context = context;
    sys.embed_dim = embed_dim;
    sys.token_count = token_count;
    sys.constant_token = static_cast<int>(rng.below(token_count));
    sys.feedback = Tensor::zeros({token_count, n});
    for (double& x : sys.feedback.values) x = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    sys.projection = Tensor::zeros({embed_dim, token_count});
    for (double& x : sys.projection.values)
        x = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(token_count)));

    constexpr std::size_t kMaxHalvings = 64;
    for (sys.halvings = 0;; ++sys.halvings) {
        if (sys.halvings > kMaxHalvings)
            raise(ErrorCode::construction, "unobservable system: no contraction after max rescaling");
        sys.closed_loop = build_closed_loop(sys.feedback, sys.projection, context, embed_dim);
        sys.certificate = spectral_radius(matrix_power(sys.closed_loop, context));
        if (sys.certificate < 1.0) break;
        for (double& x : sys.feedback.values) x *= 0.5;
    }

    sys.amplification = 1.0;
    for (std::size_t t = 1; t < context; ++t)
        sys.amplification = std::max(sys.amplification, spectral_radius(matrix_power(sys.closed_loop, t)));
    return sys;
}

Trajectory unobservable_rollout(const UnobservableSystem& sys, const Tensor& x_init,
                                std::size_t tau) {
    const std::size_t n = sys.context * sys.embed_dim;
    if (x_init.rank() != 1 || x_init.numel() != n)
        raise(ErrorCode::invalid_input, "unobservable rollout: state must have dimension c*V");
    if (tau < 1) raise(ErrorCode::invalid_parameter, "unobservable rollout: horizon must be >= 1");
    ensure_finite(x_init, "initial state");

    Tensor x = x_init;
    Trajectory traj;
    traj.mental.reserve(tau);
    traj.verbal.reserve(tau);
    for (std::size_t t = 0; t < tau; ++t) {
        Tensor y = Tensor::zeros({sys.token_count});
        for (std::size_t i = 0; i < sys.token_count; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sys.feedback.at(i, j) * x.values[j];
            y.values[i] = acc;
        }
        traj.mental.push_back(std::move(y));
        traj.verbal.push_back(sys.constant_token);
        Tensor next = Tensor::zeros({n});
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sys.closed_loop.at(i, j) * x.values[j];
            next.values[i] = acc;
        }
        x = std::move(next);
    }
    return traj;
}

Tensor random_state(const UnobservableSystem& sys, double radius, Rng& rng) {
    const std::size_t n = sys.context * sys.embed_dim;
    Tensor x = Tensor::zeros({n});
    double norm = 0.0;
    for (double& v : x.values) {
        v = rng.normal(0.0, 1.0);
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return random_state(sys, radius, rng);
    for (double& v : x.values) v *= radius / norm;
    return x;
}

}  // namespace obslab
