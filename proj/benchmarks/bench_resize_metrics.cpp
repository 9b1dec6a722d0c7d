#include <benchmark/benchmark.h>

#include "posr/bicubic.hpp"
#include "posr/metrics.hpp"
#include "posr/rng.hpp"

using namespace posr;

namespace {

ImagePlane random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    ImagePlane img = ImagePlane::rgb(w, h, ValueRange::byte);
    for (auto& v : img.data) {
        v = static_cast<double>(rng.below(256));
    }
    return img;
}

void BM_BicubicDown4(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ImagePlane img = random_image(side, side, 1);
    for (auto _ : state) {
        ImagePlane small = bicubic_resize(img, 0.25, true);
        benchmark::DoNotOptimize(small.data.data());
    }
}

void BM_PsnrY(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ImagePlane a = random_image(side, side, 2);
    ImagePlane b = random_image(side, side, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(psnr(a, b, 4, true));
    }
}

void BM_SsimY(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ImagePlane a = random_image(side, side, 4);
    ImagePlane b = random_image(side, side, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(a, b, 4, true));
    }
}

} // namespace

BENCHMARK(BM_BicubicDown4)->Arg(96)->Arg(480);
BENCHMARK(BM_PsnrY)->Arg(96)->Arg(480);
BENCHMARK(BM_SsimY)->Arg(96)->Arg(480)->Unit(benchmark::kMillisecond);
