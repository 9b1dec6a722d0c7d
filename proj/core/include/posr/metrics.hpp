#pragma once

#include "posr/image.hpp"

namespace posr {

// Reported PSNR is capped here; identical images return exactly the cap
// (mathematically the value is +infinity).
inline constexpr double kPsnrCap = 100.0;

// 10*log10(peak^2 / MSE) over the region left after cropping `border` pixels
// on every side. With y_only, both images are reduced to the BT.601
// studio-swing luma first.
double psnr(const ImagePlane& a, const ImagePlane& b, int border = 0, bool y_only = false);

// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// valid-window positions only, averaged over channels.
double ssim(const ImagePlane& a, const ImagePlane& b, int border = 0, bool y_only = false);

// RMSE on byte-range RGB after a 4-pixel border crop (the distortion measure
// the region bands are defined over).
double rmse_pirm(const ImagePlane& a, const ImagePlane& b);

enum class PirmRegion { out_of_range = 0, region1 = 1, region2 = 2, region3 = 3 };

// Band thresholds: region 1 at rmse <= 11.5, region 2 at <= 12.5 and
// region 3 at <= 16, boundaries inclusive.
PirmRegion classify_region(double rmse);
const char* to_string(PirmRegion r);

} // namespace posr
