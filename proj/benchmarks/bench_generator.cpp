#include <benchmark/benchmark.h>

#include "posr/generator.hpp"
#include "posr/losses.hpp"

using namespace posr;

namespace {

Tensor randn(Shape s, Rng& rng, double scale = 1.0) {
    Tensor t(s);
    for (real_t& v : t.mutable_data()) {
        v = static_cast<real_t>(rng.normal() * scale);
    }
    return t;
}

void BM_GeneratorForward(benchmark::State& state) {
    const int blocks = static_cast<int>(state.range(0));
    const int channels = static_cast<int>(state.range(1));
    const auto spec = GeneratorSpec::make(blocks, channels, 4);
    ParameterStore store = build_generator(spec, 1);
    Rng rng(2);
    Tensor x = randn({1, 3, 24, 24}, rng, 0.2);
    for (auto _ : state) {
        Tape tape;
        Tensor y = gposr_forward(tape, spec, store, x, /*frozen=*/true);
        benchmark::DoNotOptimize(y.data().data());
    }
}

void BM_GeneratorTrainStep(benchmark::State& state) {
    const int blocks = static_cast<int>(state.range(0));
    const int channels = static_cast<int>(state.range(1));
    const auto spec = GeneratorSpec::make(blocks, channels, 4);
    ParameterStore store = build_generator(spec, 1);
    Rng rng(2);
    Tensor lr = randn({8, 3, 24, 24}, rng, 0.2);
    Tensor hr = randn({8, 3, 96, 96}, rng, 0.2);
    for (auto _ : state) {
        Tape tape;
        Tensor sr = gposr_forward(tape, spec, store, lr);
        Tensor loss = charbonnier_loss(tape, sr, hr);
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad(store.get("head.w")).data());
    }
}

} // namespace

BENCHMARK(BM_GeneratorForward)->Args({4, 16})->Args({16, 32});
BENCHMARK(BM_GeneratorTrainStep)->Args({4, 16})->Unit(benchmark::kMillisecond);
