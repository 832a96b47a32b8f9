#include <benchmark/benchmark.h>

#include "obslab/lm.hpp"
#include "obslab/rng.hpp"

namespace {

obslab::TinyLm make_model(std::size_t embed, std::size_t context, std::size_t layers) {
    obslab::LmConfig cfg;
    cfg.embed_dim = embed;
    cfg.context = context;
    cfg.layers = layers;
    cfg.heads = 2;
    cfg.ff_dim = 2 * embed;
    obslab::TinyLm m(cfg);
    m.init_random(0);
    return m;
}

void bench_forward_full_window(benchmark::State& state) {
    const auto model = make_model(static_cast<std::size_t>(state.range(0)), 16,
                                  static_cast<std::size_t>(state.range(1)));
    obslab::Rng rng(1);
    std::vector<int> ids;
    for (std::size_t i = 0; i < model.config().context; ++i)
        ids.push_back(static_cast<int>(rng.below(obslab::kByteTokens)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward_ids(ids, 1));
    }
}
BENCHMARK(bench_forward_full_window)
    ->Args({32, 2})
    ->Args({32, 4})
    ->Args({64, 2})
    ->Args({128, 2});

void bench_next_token_logits(benchmark::State& state) {
    const auto model = make_model(32, 16, 2);
    const obslab::Vocabulary vocab = model.vocabulary();
    obslab::Rng rng(2);
    obslab::Tensor rows = obslab::Tensor::zeros({17, 32});
    for (double& v : rows.values) v = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.logits_last(rows, 0));
    }
}
BENCHMARK(bench_next_token_logits);

}  // namespace

BENCHMARK_MAIN();
