#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "posr/bicubic.hpp"
#include "posr/error.hpp"
#include "test_util.hpp"

using namespace posr;

namespace {

// Independent replica of the imresize contribution rule, kept as a dense
// out x in matrix. Built straight from the kernel formula; the library is
// checked against this, not the other way round.
std::vector<double> oracle_matrix(int in_len, int out_len, double scale, bool antialias) {
    auto kernel = [](double x) {
        const double ax = std::abs(x);
        if (ax <= 1.0) {
            return 1.5 * ax * ax * ax - 2.5 * ax * ax + 1.0;
        }
        if (ax < 2.0) {
            return -0.5 * ax * ax * ax + 2.5 * ax * ax - 4.0 * ax + 2.0;
        }
        return 0.0;
    };
    const bool widen = scale < 1.0 && antialias;
    const double kw = widen ? 4.0 / scale : 4.0;
    const int taps = static_cast<int>(std::ceil(kw)) + 2;
    std::vector<double> m(static_cast<std::size_t>(out_len) * in_len, 0.0);
    for (int i = 0; i < out_len; ++i) {
        const double u = (i + 1) / scale + 0.5 * (1.0 - 1.0 / scale); // 1-based center
        const int left = static_cast<int>(std::floor(u - kw / 2.0));
        std::vector<double> w(static_cast<std::size_t>(taps));
        std::vector<int> idx(static_cast<std::size_t>(taps));
        double sum = 0;
        for (int t = 0; t < taps; ++t) {
            const int raw = left + t; // 1-based
            const double x = u - raw;
            w[static_cast<std::size_t>(t)] = widen ? scale * kernel(scale * x) : kernel(x);
            sum += w[static_cast<std::size_t>(t)];
            // mirror: aux = [1..n, n..1]
            int p = ((raw - 1) % (2 * in_len) + 2 * in_len) % (2 * in_len);
            idx[static_cast<std::size_t>(t)] = p < in_len ? p : 2 * in_len - 1 - p;
        }
        for (int t = 0; t < taps; ++t) {
            m[static_cast<std::size_t>(i) * in_len + idx[static_cast<std::size_t>(t)]] +=
                w[static_cast<std::size_t>(t)] / sum;
        }
    }
    return m;
}

} // namespace

TEST_CASE("cubic kernel values") {
    CHECK(cubic_kernel(0.0) == doctest::Approx(1.0));
    CHECK(cubic_kernel(1.0) == doctest::Approx(0.0));
    CHECK(cubic_kernel(2.0) == doctest::Approx(0.0));
    CHECK(cubic_kernel(-0.5) == doctest::Approx(cubic_kernel(0.5)));
    CHECK(cubic_kernel(0.5) == doctest::Approx(1.5 * 0.125 - 2.5 * 0.25 + 1.0));
    CHECK(cubic_kernel(2.5) == 0.0);
}

TEST_CASE("weights form a partition of unity at the protocol scales") {
    for (double scale : {0.25, 0.5, 2.0, 4.0}) {
        for (bool aa : {true, false}) {
            for (int in_len : {8, 17, 32}) {
                const int out_len = static_cast<int>(std::ceil(in_len * scale));
                const auto rw = compute_resample_weights(in_len, out_len, scale, aa);
                for (int i = 0; i < rw.out_length; ++i) {
                    double sum = 0;
                    for (int t = 0; t < rw.taps; ++t) {
                        sum += rw.weights[static_cast<std::size_t>(i) * rw.taps + t];
                    }
                    CHECK(std::abs(sum - 1.0) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("scale 1 is the identity") {
    Rng rng(1);
    ImagePlane img = tutil::synth_image(13, 9, 5);
    ImagePlane same = bicubic_resize(img, 1.0, true);
    CHECK(same.width == img.width);
    CHECK(same.height == img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        CHECK(same.data[i] == doctest::Approx(img.data[i]).epsilon(1e-15));
    }
}

TEST_CASE("constant images stay constant at every scale") {
    ImagePlane img = ImagePlane::rgb(12, 16, ValueRange::byte);
    for (auto& v : img.data) {
        v = 123.0;
    }
    for (double scale : {0.25, 0.5, 2.0, 4.0}) {
        for (bool aa : {true, false}) {
            ImagePlane out = bicubic_resize(img, scale, aa);
            CHECK(out.width == static_cast<int>(std::ceil(12 * scale)));
            CHECK(out.height == static_cast<int>(std::ceil(16 * scale)));
            for (double v : out.data) {
                CHECK(std::abs(v - 123.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("impulse responses match the dense weight-matrix oracle") {
    // every unit impulse at once: resampling each axis must equal the
    // oracle matrix product M_rows * img * M_cols^T
    const int n = 8;
    for (double scale : {0.25, 0.5, 2.0}) {
        for (bool aa : {true, false}) {
            const int out = static_cast<int>(std::ceil(n * scale));
            const auto m = oracle_matrix(n, out, scale, aa);
            for (int iy = 0; iy < n; ++iy) {
                for (int ix = 0; ix < n; ++ix) {
                    ImagePlane img = ImagePlane::gray(n, n, ValueRange::unit);
                    img.at(0, iy, ix) = 1.0;
                    ImagePlane small = bicubic_resize(img, scale, aa);
                    REQUIRE(small.width == out);
                    REQUIRE(small.height == out);
                    for (int oy = 0; oy < out; ++oy) {
                        for (int ox = 0; ox < out; ++ox) {
                            const double expect =
                                m[static_cast<std::size_t>(oy) * n + iy] *
                                m[static_cast<std::size_t>(ox) * n + ix];
                            CHECK(std::abs(small.at(0, oy, ox) - expect) < 1e-9);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("degradation is deterministic") {
    ImagePlane img = tutil::synth_image(32, 32, 9);
    ImagePlane a = bicubic_resize(img, 0.25, true);
    ImagePlane b = bicubic_resize(img, 0.25, true);
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(a.data[i] == b.data[i]);
    }
}

TEST_CASE("invalid scales are rejected") {
    ImagePlane img = ImagePlane::rgb(4, 4, ValueRange::byte);
    CHECK_THROWS_AS(bicubic_resize(img, 0.0, true), ContractError);
    CHECK_THROWS_AS(bicubic_resize(img, -1.0, true), ContractError);
    CHECK_THROWS_AS(compute_resample_weights(0, 4, 1.0, true), ContractError);
}
