#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posr/tensor.hpp"

namespace posr {

enum class ValueRange { unit, byte };
enum class ColorSpace { rgb, ycbcr, y_only };
enum class Swing { studio, full };

// Floating-point image, planar channel-major layout (all of channel 0, then
// channel 1, ...). Range and color space are explicit metadata; conversions
// are explicit operations, never implicit.
struct ImagePlane {
    int width = 0;
    int height = 0;
    int channels = 0;
    ValueRange range = ValueRange::unit;
    ColorSpace space = ColorSpace::rgb;
    std::vector<double> data;

    static ImagePlane rgb(int w, int h, ValueRange r = ValueRange::byte);
    static ImagePlane gray(int w, int h, ValueRange r = ValueRange::byte);

    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::int64_t pixel_count() const { return static_cast<std::int64_t>(width) * height; }
    double peak() const { return range == ValueRange::byte ? 255.0 : 1.0; }
};

// BT.601 conversion. Studio swing (the rgb2ycbcr convention, Y in [16,235]
// for byte data) is the default used by the evaluation protocol; full swing
// sits behind the flag. Output is always byte-range.
ImagePlane rgb_to_ycbcr(const ImagePlane& img, Swing swing = Swing::studio);

// Luma plane per the same convention. Accepts RGB (converts) or YCbCr
// (slices); a y_only image passes through.
ImagePlane extract_y(const ImagePlane& img, Swing swing = Swing::studio);

ImagePlane to_range(const ImagePlane& img, ValueRange target);

// 8-bit PNG, RGB or grayscale. Loaded images are byte-range; saving clips to
// the image's declared range and rounds.
ImagePlane load_image(const std::string& path);
void save_image(const ImagePlane& img, const std::string& path);

// [1,3,H,W] (or [1,1,H,W]) unit-range tensor for the networks.
Tensor image_to_tensor(const ImagePlane& img);
// Batch item -> image; clips into [0,1] when `clip` is set.
ImagePlane tensor_to_image(const Tensor& t, std::int64_t batch_index, ValueRange range,
                           bool clip);

} // namespace posr
