#include "posr/bicubic.hpp"

#include <cmath>

#include "posr/error.hpp"

namespace posr {

double cubic_kernel(double x) {
    const double ax = std::abs(x);
    if (ax <= 1.0) {
        return (1.5 * ax - 2.5) * ax * ax + 1.0;
    }
    if (ax < 2.0) {
        return ((-0.5 * ax + 2.5) * ax - 4.0) * ax + 2.0;
    }
    return 0.0;
}

ResampleWeights compute_resample_weights(int in_length, int out_length, double scale,
                                         bool antialias) {
    if (in_length < 1 || out_length < 1 || !(scale > 0)) {
        throw ContractError("compute_resample_weights: extents and scale must be positive");
    }
    const bool widen = scale < 1.0 && antialias;
    const double kernel_width = widen ? 4.0 / scale : 4.0;
    const int taps = static_cast<int>(std::ceil(kernel_width)) + 2;

    ResampleWeights rw;
    rw.in_length = in_length;
    rw.out_length = out_length;
    rw.taps = taps;
    rw.indices.resize(static_cast<std::size_t>(out_length) * taps);
    rw.weights.resize(static_cast<std::size_t>(out_length) * taps);

    for (int i = 0; i < out_length; ++i) {
        // Center of output sample i in input coordinates (0-based).
        const double u = (i + 0.5) / scale - 0.5;
        const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
        double sum = 0.0;
        for (int t = 0; t < taps; ++t) {
            const int raw = left + t;
            const double x = u - raw;
            const double w = widen ? scale * cubic_kernel(scale * x) : cubic_kernel(x);
            rw.weights[static_cast<std::size_t>(i) * taps + t] = w;
            sum += w;

            // Symmetric (mirror) boundary: indices walk 0..n-1, n-1..0, ...
            int idx = raw;
            const int period = 2 * in_length;
            idx = ((idx % period) + period) % period;
            if (idx >= in_length) {
                idx = period - 1 - idx;
            }
            rw.indices[static_cast<std::size_t>(i) * taps + t] = idx;
        }
        for (int t = 0; t < taps; ++t) {
            rw.weights[static_cast<std::size_t>(i) * taps + t] /= sum;
        }
    }
    return rw;
}

namespace {

// Resamples along the row axis (height); width and channels untouched.
ImagePlane resample_rows(const ImagePlane& src, const ResampleWeights& rw) {
    ImagePlane out = src;
    out.height = rw.out_length;
    out.data.assign(static_cast<std::size_t>(src.width) * rw.out_length * src.channels, 0.0);
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < rw.out_length; ++y) {
            const int* idx = rw.indices.data() + static_cast<std::size_t>(y) * rw.taps;
            const double* w = rw.weights.data() + static_cast<std::size_t>(y) * rw.taps;
            for (int x = 0; x < src.width; ++x) {
                double acc = 0.0;
                for (int t = 0; t < rw.taps; ++t) {
                    acc += w[t] * src.at(c, idx[t], x);
                }
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

ImagePlane resample_cols(const ImagePlane& src, const ResampleWeights& rw) {
    ImagePlane out = src;
    out.width = rw.out_length;
    out.data.assign(static_cast<std::size_t>(rw.out_length) * src.height * src.channels, 0.0);
    for (int c = 0; c < src.channels; ++c) {
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < rw.out_length; ++x) {
                const int* idx = rw.indices.data() + static_cast<std::size_t>(x) * rw.taps;
                const double* w = rw.weights.data() + static_cast<std::size_t>(x) * rw.taps;
                double acc = 0.0;
                for (int t = 0; t < rw.taps; ++t) {
                    acc += w[t] * src.at(c, y, idx[t]);
                }
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

} // namespace

ImagePlane bicubic_resize(const ImagePlane& img, double scale, bool antialias) {
    if (!(scale > 0)) {
        throw ContractError("bicubic_resize: scale must be positive");
    }
    const int out_h = static_cast<int>(std::ceil(img.height * scale));
    const int out_w = static_cast<int>(std::ceil(img.width * scale));
    if (out_h < 1 || out_w < 1) {
        throw ContractError("bicubic_resize: target size must be positive");
    }
    ImagePlane result = img;
    if (out_h != img.height) {
        result = resample_rows(result, compute_resample_weights(img.height, out_h, scale, antialias));
    }
    if (out_w != img.width) {
        result = resample_cols(result, compute_resample_weights(img.width, out_w, scale, antialias));
    }
    return result;
}

} // namespace posr
