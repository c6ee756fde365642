#pragma once

#include <cstdint>
#include <vector>

namespace ginr {

// Row-major H x W x C pixel grid, values in [0, 1]. C is 3 (RGB) or 1.
struct ImageGrid {
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;
  std::vector<double> pixels;

  int64_t size() const { return height * width * channels; }
  double& at(int64_t y, int64_t x, int64_t c) { return pixels[(y * width + x) * channels + c]; }
  double at(int64_t y, int64_t x, int64_t c) const { return pixels[(y * width + x) * channels + c]; }
};

ImageGrid make_image(int64_t h, int64_t w, int64_t c, double fill = 0.0);
void validate_image(const ImageGrid& img);

// round(v*255) bytes; dequantize maps byte/255, so a round trip moves any
// pixel by at most 1/510
std::vector<uint8_t> quantize8(const ImageGrid& img);
ImageGrid dequantize8(int64_t h, int64_t w, int64_t c, const std::vector<uint8_t>& bytes);
ImageGrid quantize_roundtrip(const ImageGrid& img);

// integer-factor box average (H, W divisible by factor)
ImageGrid box_downsample(const ImageGrid& img, int64_t factor);

}  // namespace ginr
