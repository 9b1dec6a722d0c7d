#include <benchmark/benchmark.h>

#include "posr/ops.hpp"
#include "posr/rng.hpp"

using namespace posr;

namespace {

Tensor randn(Shape s, Rng& rng) {
    Tensor t(s);
    for (real_t& v : t.mutable_data()) {
        v = static_cast<real_t>(rng.normal());
    }
    return t;
}

void conv_forward(benchmark::State& state, ConvAlgo algo) {
    const auto channels = static_cast<std::int64_t>(state.range(0));
    const auto side = static_cast<std::int64_t>(state.range(1));
    Rng rng(1);
    Tensor x = randn({4, channels, side, side}, rng);
    Tensor w = randn({channels, channels, 3, 3}, rng);
    Tensor b = randn({channels, 1, 1, 1}, rng);
    for (auto _ : state) {
        Tape tape;
        Tensor y = conv2d(tape, x, w, b, 1, 1, algo);
        benchmark::DoNotOptimize(y.data().data());
    }
    state.SetItemsProcessed(state.iterations() * 4 * channels * channels * 9 * side * side);
}

void BM_ConvDirect(benchmark::State& state) {
    conv_forward(state, ConvAlgo::direct);
}
void BM_ConvIm2col(benchmark::State& state) {
    conv_forward(state, ConvAlgo::im2col);
}

void BM_ConvTrainStep(benchmark::State& state) {
    const auto channels = static_cast<std::int64_t>(state.range(0));
    const auto side = static_cast<std::int64_t>(state.range(1));
    Rng rng(2);
    Tensor x = randn({4, channels, side, side}, rng);
    Tensor w = randn({channels, channels, 3, 3}, rng);
    w.set_requires_grad(true);
    for (auto _ : state) {
        Tape tape;
        Tensor loss = mean_all(tape, square(tape, conv2d(tape, x, w, {}, 1, 1)));
        tape.backward(loss);
        benchmark::DoNotOptimize(tape.grad(w).data());
    }
}

} // namespace

BENCHMARK(BM_ConvDirect)->Args({16, 24})->Args({64, 24});
BENCHMARK(BM_ConvIm2col)->Args({16, 24})->Args({64, 24})->Args({64, 96});
BENCHMARK(BM_ConvTrainStep)->Args({16, 24})->Args({64, 24});

BENCHMARK_MAIN();
