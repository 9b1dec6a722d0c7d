#include "posr/metrics.hpp"

#include <cmath>
#include <vector>

#include "posr/error.hpp"

namespace posr {

namespace {

void check_pair(const char* op, const ImagePlane& a, const ImagePlane& b, int border) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        throw DimensionError(std::string(op) + ": image dimensions differ (" +
                             std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                             std::to_string(a.channels) + " vs " + std::to_string(b.width) +
                             "x" + std::to_string(b.height) + "x" +
                             std::to_string(b.channels) + ")");
    }
    if (a.range != b.range) {
        throw ContractError(std::string(op) + ": images use different value ranges");
    }
    if (border < 0 || 2 * border >= a.width || 2 * border >= a.height) {
        throw ContractError(std::string(op) + ": border " + std::to_string(border) +
                            " leaves no pixels in " + std::to_string(a.width) + "x" +
                            std::to_string(a.height));
    }
}

ImagePlane crop(const ImagePlane& img, int border) {
    if (border == 0) {
        return img;
    }
    const int w = img.width - 2 * border;
    const int h = img.height - 2 * border;
    ImagePlane out = img;
    out.width = w;
    out.height = h;
    out.data.assign(static_cast<std::size_t>(w) * h * img.channels, 0.0);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out.at(c, y, x) = img.at(c, y + border, x + border);
            }
        }
    }
    return out;
}

} // namespace

double psnr(const ImagePlane& a_in, const ImagePlane& b_in, int border, bool y_only) {
    ImagePlane a = y_only ? extract_y(a_in) : a_in;
    ImagePlane b = y_only ? extract_y(b_in) : b_in;
    check_pair("psnr", a, b, border);
    a = crop(a, border);
    b = crop(b, border);

    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse == 0.0) {
        return kPsnrCap;
    }
    const double peak = a.peak();
    const double value = 10.0 * std::log10(peak * peak / mse);
    return value > kPsnrCap ? kPsnrCap : value;
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(size));
    const double center = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - center;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (double& v : w) {
        v /= sum;
    }
    return w;
}

// Separable valid-mode Gaussian filter of one channel plane.
std::vector<double> filter_valid(const ImagePlane& img, int c, const std::vector<double>& win,
                                 int& out_w, int& out_h) {
    const int k = static_cast<int>(win.size());
    const int mid_w = img.width - k + 1;
    out_w = mid_w;
    out_h = img.height - k + 1;
    // Horizontal pass.
    std::vector<double> mid(static_cast<std::size_t>(mid_w) * img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < mid_w; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += win[static_cast<std::size_t>(t)] * img.at(c, y, x + t);
            }
            mid[static_cast<std::size_t>(y) * mid_w + x] = acc;
        }
    }
    // Vertical pass.
    std::vector<double> out(static_cast<std::size_t>(mid_w) * out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < mid_w; ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) {
                acc += win[static_cast<std::size_t>(t)] *
                       mid[static_cast<std::size_t>(y + t) * mid_w + x];
            }
            out[static_cast<std::size_t>(y) * mid_w + x] = acc;
        }
    }
    return out;
}

} // namespace

double ssim(const ImagePlane& a_in, const ImagePlane& b_in, int border, bool y_only) {
    ImagePlane a = y_only ? extract_y(a_in) : a_in;
    ImagePlane b = y_only ? extract_y(b_in) : b_in;
    check_pair("ssim", a, b, border);
    a = crop(a, border);
    b = crop(b, border);

    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    if (a.width < kWindow || a.height < kWindow) {
        throw ContractError("ssim: cropped image smaller than the 11x11 window");
    }
    const double L = a.peak();
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);
    const auto win = gaussian_window(kWindow, kSigma);

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        int ow = 0, oh = 0;
        // Window statistics via filtered moment maps.
        ImagePlane aa = a, bb = b, ab = a;
        for (std::size_t i = 0; i < a.data.size(); ++i) {
            aa.data[i] = a.data[i] * a.data[i];
            bb.data[i] = b.data[i] * b.data[i];
            ab.data[i] = a.data[i] * b.data[i];
        }
        const auto mu_a = filter_valid(a, c, win, ow, oh);
        const auto mu_b = filter_valid(b, c, win, ow, oh);
        const auto m_aa = filter_valid(aa, c, win, ow, oh);
        const auto m_bb = filter_valid(bb, c, win, ow, oh);
        const auto m_ab = filter_valid(ab, c, win, ow, oh);

        double acc = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double va = m_aa[i] - ma * ma;
            const double vb = m_bb[i] - mb * mb;
            const double cov = m_ab[i] - ma * mb;
            const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            acc += num / den;
        }
        total += acc / static_cast<double>(mu_a.size());
    }
    return total / a.channels;
}

double rmse_pirm(const ImagePlane& a_in, const ImagePlane& b_in) {
    ImagePlane a = to_range(a_in, ValueRange::byte);
    ImagePlane b = to_range(b_in, ValueRange::byte);
    constexpr int kBorder = 4;
    check_pair("rmse_pirm", a, b, kBorder);
    a = crop(a, kBorder);
    b = crop(b, kBorder);
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    return std::sqrt(se / static_cast<double>(a.data.size()));
}

PirmRegion classify_region(double rmse) {
    if (rmse < 0) {
        throw ContractError("classify_region: negative rmse");
    }
    if (rmse <= 11.5) {
        return PirmRegion::region1;
    }
    if (rmse <= 12.5) {
        return PirmRegion::region2;
    }
    if (rmse <= 16.0) {
        return PirmRegion::region3;
    }
    return PirmRegion::out_of_range;
}

const char* to_string(PirmRegion r) {
    switch (r) {
    case PirmRegion::region1:
        return "1";
    case PirmRegion::region2:
        return "2";
    case PirmRegion::region3:
        return "3";
    default:
        return "out_of_range";
    }
}

} // namespace posr
