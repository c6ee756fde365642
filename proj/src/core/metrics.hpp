#pragma once

#include "image.hpp"

namespace ginr {

// mean squared difference over all H*W*C entries
double mse(const ImageGrid& a, const ImageGrid& b);

// -10*log10(mse) for unit dynamic range; +infinity when mse == 0
double psnr(const ImageGrid& a, const ImageGrid& b);

// mean local SSIM, 11x11 Gaussian window (sigma 1.5), c1=(0.01)^2,
// c2=(0.03)^2, dynamic range 1, averaged over channels; needs H,W >= 11
double ssim(const ImageGrid& a, const ImageGrid& b);

struct QualityReport {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

QualityReport quality_report(const ImageGrid& a, const ImageGrid& b);

}  // namespace ginr
