#include <benchmark/benchmark.h>

#include "obslab/graph.hpp"
#include "obslab/lm.hpp"
#include "obslab/rng.hpp"

namespace {

// One full differentiable forward plus reverse sweep, the unit of work that
// bounds every training and prompt-optimization step.
void bench_forward_backward(benchmark::State& state) {
    obslab::LmConfig cfg;
    cfg.embed_dim = static_cast<std::size_t>(state.range(0));
    cfg.context = 16;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.ff_dim = 2 * cfg.embed_dim;
    obslab::TinyLm model(cfg);
    model.init_random(0);

    obslab::Graph g;
    const obslab::LmNodes nodes = model.register_params(g, true);
    obslab::Rng rng(1);
    obslab::Tensor rows = obslab::Tensor::zeros({cfg.context + 1, cfg.embed_dim});
    for (double& v : rows.values) v = rng.normal();
    const obslab::NodeId input = g.param("rows", rows);
    const obslab::NodeId logits = model.logits_node(g, nodes, input, 0);
    std::vector<int> targets(cfg.context + 1, 'a');
    const obslab::NodeId loss = g.cross_entropy_mean(logits, targets);

    for (auto _ : state) {
        g.recompute();
        g.backward(loss);
        benchmark::DoNotOptimize(g.grad(input));
    }
}
BENCHMARK(bench_forward_backward)->Arg(32)->Arg(64);

void bench_tape_recompute(benchmark::State& state) {
    obslab::LmConfig cfg;
    cfg.embed_dim = 32;
    cfg.context = 16;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.ff_dim = 64;
    obslab::TinyLm model(cfg);
    model.init_random(0);

    obslab::Graph g;
    const obslab::LmNodes nodes = model.register_params(g, false);
    obslab::Rng rng(2);
    obslab::Tensor rows = obslab::Tensor::zeros({cfg.context + 1, cfg.embed_dim});
    for (double& v : rows.values) v = rng.normal();
    const obslab::NodeId input = g.param("rows", rows);
    const obslab::NodeId logits = model.logits_node(g, nodes, input, 0);

    for (auto _ : state) {
        g.set_value(input, rows);
        g.recompute();
        benchmark::DoNotOptimize(g.value(logits));
    }
}
BENCHMARK(bench_tape_recompute);

}  // namespace
