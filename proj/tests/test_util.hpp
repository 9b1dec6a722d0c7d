#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "posr/image.hpp"
#include "posr/rng.hpp"
#include "posr/tensor.hpp"

namespace tutil {

inline posr::Tensor random_tensor(posr::Shape s, posr::Rng& rng, double scale = 1.0) {
    posr::Tensor t(s);
    for (posr::real_t& v : t.mutable_data()) {
        v = static_cast<posr::real_t>(rng.normal() * scale);
    }
    return t;
}

inline double max_rel_diff(std::span<const posr::real_t> a, std::span<const posr::real_t> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = static_cast<double>(a[i]);
        const double db = static_cast<double>(b[i]);
        const double denom = std::max({std::abs(da), std::abs(db), 1e-12});
        worst = std::max(worst, std::abs(da - db) / denom);
    }
    return worst;
}

inline double max_abs_diff(std::span<const posr::real_t> a, std::span<const posr::real_t> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
    return worst;
}

inline bool bitwise_equal(std::span<const posr::real_t> a, std::span<const posr::real_t> b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            return false;
        }
    }
    return true;
}

// Fresh scratch directory under the system temp root.
inline std::string temp_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("posr_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir.string();
}

// Smooth synthetic content (mixed low-frequency waves): downscaling keeps it
// mostly recoverable, so small networks can actually learn it.
inline posr::ImagePlane synth_image(int w, int h, std::uint64_t seed) {
    posr::Rng rng(seed);
    double fx[3], fy[3], ph[3], amp[3];
    for (int k = 0; k < 3; ++k) {
        fx[k] = 0.5 + rng.uniform() * 2.5;
        fy[k] = 0.5 + rng.uniform() * 2.5;
        ph[k] = rng.uniform() * 6.28318;
        amp[k] = 0.5 + rng.uniform();
    }
    posr::ImagePlane img = posr::ImagePlane::rgb(w, h, posr::ValueRange::byte);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double u = static_cast<double>(x) / w;
                const double v = static_cast<double>(y) / h;
                double s = 0.0;
                for (int k = 0; k < 3; ++k) {
                    s += amp[k] * std::sin(6.28318 * (fx[k] * u + fy[k] * v) + ph[k] +
                                           1.7 * c);
                }
                img.at(c, y, x) = std::round(127.5 + 127.5 * std::tanh(0.6 * s));
            }
        }
    }
    return img;
}

} // namespace tutil
