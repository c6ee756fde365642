#include "image.hpp"

#include <cmath>

#include "error.hpp"

namespace ginr {

ImageGrid make_image(int64_t h, int64_t w, int64_t c, double fill) {
  if (h < 1 || w < 1 || (c != 1 && c != 3)) fail(Errc::invalid_argument, "make_image: bad dimensions");
  ImageGrid img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.pixels.assign(static_cast<size_t>(h * w * c), fill);
  return img;
}

void validate_image(const ImageGrid& img) {
  if (img.height < 1 || img.width < 1 || (img.channels != 1 && img.channels != 3))
    fail(Errc::invalid_argument, "image: bad dimensions");
  if (static_cast<int64_t>(img.pixels.size()) != img.size())
    fail(Errc::shape_mismatch, "image: pixel count does not match dimensions");
  for (double v : img.pixels)
    if (!(v >= 0.0 && v <= 1.0)) fail(Errc::invalid_argument, "image: pixel outside [0,1]");
}

std::vector<uint8_t> quantize8(const ImageGrid& img) {
  std::vector<uint8_t> out(img.pixels.size());
  for (size_t i = 0; i < out.size(); ++i) {
    long q = std::lround(img.pixels[i] * 255.0);
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    out[i] = static_cast<uint8_t>(q);
  }
  return out;
}

ImageGrid dequantize8(int64_t h, int64_t w, int64_t c, const std::vector<uint8_t>& bytes) {
  if (static_cast<int64_t>(bytes.size()) != h * w * c)
    fail(Errc::shape_mismatch, "dequantize8: byte count does not match dimensions");
  ImageGrid img = make_image(h, w, c);
  for (size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<double>(bytes[i]) / 255.0;
  return img;
}

ImageGrid quantize_roundtrip(const ImageGrid& img) {
  return dequantize8(img.height, img.width, img.channels, quantize8(img));
}

ImageGrid box_downsample(const ImageGrid& img, int64_t factor) {
  if (factor < 1 || img.height % factor != 0 || img.width % factor != 0)
    fail(Errc::invalid_argument, "box_downsample: dimensions not divisible by factor");
  ImageGrid out = make_image(img.height / factor, img.width / factor, img.channels);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (int64_t y = 0; y < out.height; ++y)
    for (int64_t x = 0; x < out.width; ++x)
      for (int64_t c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int64_t dy = 0; dy < factor; ++dy)
          for (int64_t dx = 0; dx < factor; ++dx) acc += img.at(y * factor + dy, x * factor + dx, c);
        out.at(y, x, c) = acc * inv;
      }
  return out;
}

}  // namespace ginr
