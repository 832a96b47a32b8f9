#include <benchmark/benchmark.h>

#include "obslab/dynsys.hpp"
#include "obslab/lm.hpp"
#include "obslab/vocab.hpp"

namespace {

obslab::TinyLm default_model() {
    obslab::TinyLm m{obslab::LmConfig{}};
    m.init_random(0);
    return m;
}

void bench_rollout_plain(benchmark::State& state) {
    const auto model = default_model();
    const obslab::Vocabulary vocab = model.vocabulary();
    const std::vector<int> prompt = obslab::tokenize("the ");
    const auto tau = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            obslab::rollout(prompt, obslab::Plain{}, tau, model, vocab));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(tau));
}
BENCHMARK(bench_rollout_plain)->Arg(8)->Arg(32);

void bench_rollout_fading(benchmark::State& state) {
    const auto model = default_model();
    const obslab::Vocabulary vocab = model.vocabulary();
    const std::vector<int> prompt = obslab::tokenize("the ");
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            obslab::rollout(prompt, obslab::FadingInfinite{4, 0.5}, 32, model, vocab));
    }
}
BENCHMARK(bench_rollout_fading);

void bench_single_step(benchmark::State& state) {
    const auto model = default_model();
    const obslab::Vocabulary vocab = model.vocabulary();
    const obslab::ExtendedState st =
        obslab::make_initial(obslab::tokenize("abcdef"), obslab::Plain{}, vocab,
                             model.config().context);
    for (auto _ : state) {
        benchmark::DoNotOptimize(obslab::step(st, obslab::Plain{}, model, vocab));
    }
}
BENCHMARK(bench_single_step);

}  // namespace
