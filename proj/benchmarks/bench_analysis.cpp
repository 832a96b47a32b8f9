#include <benchmark/benchmark.h>

#include "obslab/lm.hpp"
#include "obslab/observability.hpp"
#include "obslab/rng.hpp"
#include "obslab/vocab.hpp"

namespace {

obslab::TinyLm default_model() {
    obslab::TinyLm m{obslab::LmConfig{}};
    m.init_random(0);
    return m;
}

// Fan-out of one prompt over a verbal control domain; dominated by the
// per-control closed-loop rollouts.
void bench_reachable_set(benchmark::State& state) {
    const auto model = default_model();
    const obslab::Vocabulary vocab = model.vocabulary();
    obslab::VerbalSet domain;
    obslab::Rng rng(3);
    for (std::size_t t : rng.sample_without_replacement(vocab.token_count(),
                                                        static_cast<std::size_t>(state.range(0))))
        domain.ids.push_back(static_cast<int>(t));
    const std::vector<int> prompt = obslab::tokenize("the ");
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            obslab::reachable_set(prompt, 8, obslab::ControlDomain{domain}, model, vocab, 1));
    }
}
BENCHMARK(bench_reachable_set)->Arg(16)->Arg(64);

// Grouping and counting distinct trajectories once the rollouts exist.
void bench_q_r_curves(benchmark::State& state) {
    const auto model = default_model();
    const obslab::Vocabulary vocab = model.vocabulary();
    obslab::VerbalSet domain;
    obslab::Rng rng(4);
    for (std::size_t t : rng.sample_without_replacement(vocab.token_count(), 64))
        domain.ids.push_back(static_cast<int>(t));
    const obslab::ReachableSet rs = obslab::reachable_set(
        obslab::tokenize("the "), 32, obslab::ControlDomain{domain}, model, vocab, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(obslab::q_r_curves(rs, 0.0));
    }
}
BENCHMARK(bench_q_r_curves);

}  // namespace
