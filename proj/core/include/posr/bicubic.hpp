#pragma once

#include <vector>

#include "posr/image.hpp"

namespace posr {

// Cubic interpolation kernel with a = -0.5, support [-2, 2].
double cubic_kernel(double x);

// Precomputed contribution of input samples to each output position along
// one axis: for output index i, taps indices[i*taps .. i*taps+taps-1] with
// weights[..] summing to 1. Indices are already reflected into range.
struct ResampleWeights {
    int in_length = 0;
    int out_length = 0;
    int taps = 0;
    std::vector<int> indices;
    std::vector<double> weights;
};

// imresize-convention contributions: sample positions follow
// u = (i + 0.5)/scale - 0.5; when downscaling with antialias the kernel is
// stretched by 1/scale; weights are renormalized; boundaries reflect
// symmetrically.
ResampleWeights compute_resample_weights(int in_length, int out_length, double scale,
                                         bool antialias);

// Separable resize by `scale` (output extents ceil(in * scale)), applied to
// every channel. Metadata (range, space) carries over.
ImagePlane bicubic_resize(const ImagePlane& img, double scale, bool antialias);

} // namespace posr
