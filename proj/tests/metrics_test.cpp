#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "posr/error.hpp"
#include "posr/metrics.hpp"
#include "test_util.hpp"

using namespace posr;

TEST_CASE("ycbcr conversion anchors") {
    ImagePlane img = ImagePlane::rgb(2, 1, ValueRange::byte);
    img.at(0, 0, 0) = 255;
    img.at(1, 0, 0) = 255;
    img.at(2, 0, 0) = 255; // white
    // (0,0,0) black at x=1 already
    ImagePlane y = extract_y(img);
    CHECK(y.at(0, 0, 0) == doctest::Approx(235.0).epsilon(1e-12));
    CHECK(y.at(0, 0, 1) == doctest::Approx(16.0).epsilon(1e-12));

    SUBCASE("luma is monotone in gray level") {
        double prev = -1;
        for (int g = 0; g <= 255; g += 5) {
            ImagePlane gray = ImagePlane::rgb(1, 1, ValueRange::byte);
            gray.at(0, 0, 0) = gray.at(1, 0, 0) = gray.at(2, 0, 0) = g;
            const double yy = extract_y(gray).at(0, 0, 0);
            CHECK(yy > prev);
            prev = yy;
        }
    }
    SUBCASE("full-swing variant spans 0..255") {
        ImagePlane white = ImagePlane::rgb(1, 1, ValueRange::byte);
        white.at(0, 0, 0) = white.at(1, 0, 0) = white.at(2, 0, 0) = 255;
        CHECK(extract_y(white, Swing::full).at(0, 0, 0) == doctest::Approx(255.0));
    }
    SUBCASE("non-RGB input is rejected") {
        ImagePlane gray = ImagePlane::gray(2, 2, ValueRange::byte);
        CHECK_THROWS_AS(rgb_to_ycbcr(gray), ContractError);
    }
}

TEST_CASE("psnr") {
    SUBCASE("identical images return the documented cap") {
        ImagePlane a = tutil::synth_image(24, 24, 1);
        CHECK(psnr(a, a, 4, true) == kPsnrCap);
        CHECK(psnr(a, a, 0, false) == kPsnrCap);
    }
    SUBCASE("all-zero vs all-255 is exactly 0 dB") {
        ImagePlane a = ImagePlane::rgb(16, 16, ValueRange::byte);
        ImagePlane b = ImagePlane::rgb(16, 16, ValueRange::byte);
        for (auto& v : b.data) {
            v = 255.0;
        }
        CHECK(psnr(a, b, 4, false) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("border content cannot change the value") {
        ImagePlane a = tutil::synth_image(32, 32, 2);
        ImagePlane b = a;
        for (auto& v : b.data) {
            v = std::min(255.0, v + 3.0);
        }
        const double base = psnr(a, b, 4, true);
        ImagePlane b2 = b;
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < 32; ++y) {
                for (int x = 0; x < 32; ++x) {
                    if (y < 4 || y >= 28 || x < 4 || x >= 28) {
                        b2.at(c, y, x) = 0.0; // trash the border
                    }
                }
            }
        }
        CHECK(psnr(a, b2, 4, true) == base);
    }
    SUBCASE("dimension mismatch raises") {
        ImagePlane a = ImagePlane::rgb(8, 8, ValueRange::byte);
        ImagePlane b = ImagePlane::rgb(8, 9, ValueRange::byte);
        CHECK_THROWS_AS(psnr(a, b, 0, false), DimensionError);
    }
    SUBCASE("mixed value ranges are a contract error, not a silent guess") {
        ImagePlane a = ImagePlane::rgb(8, 8, ValueRange::byte);
        ImagePlane b = ImagePlane::rgb(8, 8, ValueRange::unit);
        CHECK_THROWS_AS(psnr(a, b, 0, false), ContractError);
    }
}

TEST_CASE("ssim") {
    SUBCASE("identical images give exactly 1") {
        ImagePlane a = tutil::synth_image(24, 24, 3);
        CHECK(ssim(a, a, 0, true) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant planes differ only in the luminance term") {
        const double mu1 = 100.0, offset = 5.0;
        ImagePlane a = ImagePlane::gray(16, 16, ValueRange::byte);
        ImagePlane b = ImagePlane::gray(16, 16, ValueRange::byte);
        for (auto& v : a.data) {
            v = mu1;
        }
        for (auto& v : b.data) {
            v = mu1 + offset;
        }
        const double c1 = (0.01 * 255) * (0.01 * 255);
        const double mu2 = mu1 + offset;
        const double expect = (2 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1);
        CHECK(ssim(a, b, 0, false) == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("symmetric in its arguments") {
        ImagePlane a = tutil::synth_image(24, 24, 4);
        ImagePlane b = tutil::synth_image(24, 24, 5);
        CHECK(ssim(a, b, 0, true) == doctest::Approx(ssim(b, a, 0, true)).epsilon(1e-12));
    }
    SUBCASE("value stays in [-1, 1]") {
        ImagePlane a = tutil::synth_image(20, 20, 6);
        ImagePlane b = tutil::synth_image(20, 20, 7);
        const double v = ssim(a, b, 0, false);
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
}

TEST_CASE("rmse and region classification") {
    SUBCASE("identical images: rmse 0, region 1") {
        ImagePlane a = tutil::synth_image(16, 16, 8);
        CHECK(rmse_pirm(a, a) == 0.0);
        CHECK(classify_region(rmse_pirm(a, a)) == PirmRegion::region1);
    }
    SUBCASE("constant offset images pin the rmse exactly") {
        for (double d : {11.48, 12.50, 15.02, 16.5}) {
            ImagePlane a = ImagePlane::rgb(16, 16, ValueRange::byte);
            ImagePlane b = ImagePlane::rgb(16, 16, ValueRange::byte);
            for (auto& v : b.data) {
                v = d;
            }
            CHECK(rmse_pirm(a, b) == doctest::Approx(d).epsilon(1e-12));
        }
    }
    SUBCASE("table anchor points") {
        CHECK(classify_region(15.02) == PirmRegion::region3);
        CHECK(classify_region(12.50) == PirmRegion::region2);
        CHECK(classify_region(11.48) == PirmRegion::region1);
        CHECK(classify_region(11.5) == PirmRegion::region1);
        CHECK(classify_region(16.0) == PirmRegion::region3);
        CHECK(classify_region(16.0001) == PirmRegion::out_of_range);
        CHECK(std::string(to_string(PirmRegion::out_of_range)) == "out_of_range");
    }
    SUBCASE("border content is cropped before the rmse") {
        ImagePlane a = tutil::synth_image(20, 20, 9);
        ImagePlane b = a;
        const double base = rmse_pirm(a, b);
        for (int c = 0; c < 3; ++c) {
            for (int x = 0; x < 20; ++x) {
                b.at(c, 0, x) = 255.0 - b.at(c, 0, x);
            }
        }
        CHECK(rmse_pirm(a, b) == base);
    }
}

TEST_CASE("metrics match brute-force recomputation on random pairs") {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 20 + static_cast<int>(rng.below(13));
        const int h = 20 + static_cast<int>(rng.below(13));
        ImagePlane a = ImagePlane::rgb(w, h, ValueRange::byte);
        ImagePlane b = ImagePlane::rgb(w, h, ValueRange::byte);
        for (auto& v : a.data) {
            v = static_cast<double>(rng.below(256));
        }
        for (auto& v : b.data) {
            v = static_cast<double>(rng.below(256));
        }
        // rmse oracle
        {
            double se = 0;
            std::int64_t n = 0;
            for (int c = 0; c < 3; ++c) {
                for (int y = 4; y < h - 4; ++y) {
                    for (int x = 4; x < w - 4; ++x) {
                        const double d = a.at(c, y, x) - b.at(c, y, x);
                        se += d * d;
                        ++n;
                    }
                }
            }
            const double expect = std::sqrt(se / n);
            CHECK(rmse_pirm(a, b) ==
                  doctest::Approx(expect).epsilon(1e-10));
        }
        // psnr oracle on Y
        {
            ImagePlane ya = extract_y(a);
            ImagePlane yb = extract_y(b);
            double se = 0;
            std::int64_t n = 0;
            for (int y = 4; y < h - 4; ++y) {
                for (int x = 4; x < w - 4; ++x) {
                    const double d = ya.at(0, y, x) - yb.at(0, y, x);
                    se += d * d;
                    ++n;
                }
            }
            const double expect = 10.0 * std::log10(255.0 * 255.0 / (se / n));
            CHECK(psnr(a, b, 4, true) == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("ssim matches a direct 2-D window recomputation") {
    // direct (non-separable) Gaussian-window SSIM, valid positions
    ImagePlane a = tutil::synth_image(20, 20, 11);
    ImagePlane b = tutil::synth_image(20, 20, 12);
    ImagePlane ya = extract_y(a);
    ImagePlane yb = extract_y(b);

    const int k = 11;
    const double sigma = 1.5;
    double win[11][11];
    double wsum = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double dy = i - 5.0, dx = j - 5.0;
            win[i][j] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            wsum += win[i][j];
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            win[i][j] /= wsum;
        }
    }
    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);
    double acc = 0;
    int count = 0;
    for (int y = 0; y + k <= 20; ++y) {
        for (int x = 0; x + k <= 20; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < k; ++i) {
                for (int j = 0; j < k; ++j) {
                    const double va = ya.at(0, y + i, x + j);
                    const double vb = yb.at(0, y + i, x + j);
                    ma += win[i][j] * va;
                    mb += win[i][j] * vb;
                    saa += win[i][j] * va * va;
                    sbb += win[i][j] * vb * vb;
                    sab += win[i][j] * va * vb;
                }
            }
            const double va = saa - ma * ma;
            const double vb = sbb - mb * mb;
            const double cov = sab - ma * mb;
            acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    CHECK(ssim(a, b, 0, true) == doctest::Approx(acc / count).epsilon(1e-10));
}
