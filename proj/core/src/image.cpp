#include "posr/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "posr/error.hpp"

namespace posr {

ImagePlane ImagePlane::rgb(int w, int h, ValueRange r) {
    ImagePlane img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.range = r;
    img.space = ColorSpace::rgb;
    img.data.assign(static_cast<std::size_t>(w) * h * 3, 0.0);
    return img;
}

ImagePlane ImagePlane::gray(int w, int h, ValueRange r) {
    ImagePlane img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.range = r;
    img.space = ColorSpace::y_only;
    img.data.assign(static_cast<std::size_t>(w) * h, 0.0);
    return img;
}

namespace {

// BT.601 studio-swing coefficients for [0,1] RGB, byte-range output.
constexpr double kY[3] = {65.481, 128.553, 24.966};
constexpr double kCb[3] = {-37.797, -74.203, 112.0};
constexpr double kCr[3] = {112.0, -93.786, -18.214};

double unit_value(const ImagePlane& img, int c, int y, int x) {
    const double v = img.at(c, y, x);
    return img.range == ValueRange::byte ? v / 255.0 : v;
}

} // namespace

ImagePlane rgb_to_ycbcr(const ImagePlane& img, Swing swing) {
    if (img.channels != 3 || img.space != ColorSpace::rgb) {
        throw ContractError("rgb_to_ycbcr requires a 3-channel RGB image");
    }
    ImagePlane out = ImagePlane::rgb(img.width, img.height, ValueRange::byte);
    out.space = ColorSpace::ycbcr;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double r = unit_value(img, 0, y, x);
            const double g = unit_value(img, 1, y, x);
            const double b = unit_value(img, 2, y, x);
            if (swing == Swing::studio) {
                out.at(0, y, x) = 16.0 + kY[0] * r + kY[1] * g + kY[2] * b;
                out.at(1, y, x) = 128.0 + kCb[0] * r + kCb[1] * g + kCb[2] * b;
                out.at(2, y, x) = 128.0 + kCr[0] * r + kCr[1] * g + kCr[2] * b;
            } else {
                out.at(0, y, x) = 255.0 * (0.299 * r + 0.587 * g + 0.114 * b);
                out.at(1, y, x) = 128.0 + 255.0 * (-0.168736 * r - 0.331264 * g + 0.5 * b);
                out.at(2, y, x) = 128.0 + 255.0 * (0.5 * r - 0.418688 * g - 0.081312 * b);
            }
        }
    }
    return out;
}

ImagePlane extract_y(const ImagePlane& img, Swing swing) {
    if (img.space == ColorSpace::y_only) {
        return img;
    }
    ImagePlane src = img.space == ColorSpace::rgb ? rgb_to_ycbcr(img, swing) : img;
    ImagePlane out = ImagePlane::gray(src.width, src.height, src.range);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            out.at(0, y, x) = src.at(0, y, x);
        }
    }
    return out;
}

ImagePlane to_range(const ImagePlane& img, ValueRange target) {
    if (img.range == target) {
        return img;
    }
    ImagePlane out = img;
    out.range = target;
    const double factor = target == ValueRange::byte ? 255.0 : 1.0 / 255.0;
    for (double& v : out.data) {
        v *= factor;
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImagePlane load_image(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) {
        throw IoError("cannot open image '" + path + "'");
    }
    png_byte header[8] = {};
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw IoError("'" + path + "' is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed for '" + path + "'");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    const auto width = static_cast<int>(png_get_image_width(png, info));
    const auto height = static_cast<int>(png_get_image_height(png, info));
    const int color_type = png_get_color_type(png, info);
    const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    pixels.resize(stride * static_cast<std::size_t>(height));
    row_ptrs.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] = pixels.data() + stride * static_cast<std::size_t>(y);
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImagePlane img = channels == 3 ? ImagePlane::rgb(width, height, ValueRange::byte)
                                   : ImagePlane::gray(width, height, ValueRange::byte);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                img.at(c, y, x) = pixels[stride * static_cast<std::size_t>(y) +
                                         static_cast<std::size_t>(x) * channels +
                                         static_cast<std::size_t>(c)];
            }
        }
    }
    return img;
}

void save_image(const ImagePlane& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw ContractError("save_image supports 1 or 3 channels, got " +
                            std::to_string(img.channels));
    }
    if (img.width < 1 || img.height < 1) {
        throw ContractError("save_image: empty image");
    }
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) {
        throw IoError("cannot create image '" + path + "'");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const double scale = img.range == ValueRange::byte ? 1.0 : 255.0;
    std::vector<png_byte> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::round(img.at(c, y, x) * scale);
                row[static_cast<std::size_t>(x) * img.channels + static_cast<std::size_t>(c)] =
                    static_cast<png_byte>(std::clamp(v, 0.0, 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const ImagePlane& img) {
    Tensor t({1, img.channels, img.height, img.width});
    auto out = t.mutable_data();
    const double scale = img.range == ValueRange::byte ? 1.0 / 255.0 : 1.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        out[i] = static_cast<real_t>(img.data[i] * scale);
    }
    return t;
}

ImagePlane tensor_to_image(const Tensor& t, std::int64_t batch_index, ValueRange range,
                           bool clip) {
    const Shape& s = t.shape();
    if (batch_index < 0 || batch_index >= s.n) {
        throw ContractError("tensor_to_image: batch index out of range");
    }
    if (s.c != 1 && s.c != 3) {
        throw ContractError("tensor_to_image supports 1 or 3 channels, got " + s.str());
    }
    ImagePlane img = s.c == 3 ? ImagePlane::rgb(static_cast<int>(s.w), static_cast<int>(s.h), range)
                              : ImagePlane::gray(static_cast<int>(s.w), static_cast<int>(s.h), range);
    const double scale = range == ValueRange::byte ? 255.0 : 1.0;
    auto src = t.data();
    const std::size_t offset = static_cast<std::size_t>(batch_index * s.c * s.h * s.w);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        double v = static_cast<double>(src[offset + i]);
        if (clip) {
            v = std::clamp(v, 0.0, 1.0);
        }
        img.data[i] = v * scale;
    }
    return img;
}

} // namespace posr
