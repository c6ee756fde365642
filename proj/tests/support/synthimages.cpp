#include "synthimages.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ginr::testsupport {

ImageGrid two_blob_image(Rng& rng, int64_t h, int64_t w) {
  ImageGrid img = make_image(h, w, 3, 0.0);
  const double base = 0.05 + 0.1 * rng.next_double();
  struct Blob {
    double cy, cx, sigma, r, g, b;
  };
  Blob blobs[2];
  for (Blob& bl : blobs) {
    bl.cy = h * (0.2 + 0.6 * rng.next_double());
    bl.cx = w * (0.2 + 0.6 * rng.next_double());
    bl.sigma = 0.1 * h + 0.15 * h * rng.next_double();
    bl.r = 0.4 + 0.55 * rng.next_double();
    bl.g = 0.4 + 0.55 * rng.next_double();
    bl.b = 0.4 + 0.55 * rng.next_double();
  }
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double r = base, g = base, b = base;
      for (const Blob& bl : blobs) {
        const double d2 = (y - bl.cy) * (y - bl.cy) + (x - bl.cx) * (x - bl.cx);
        const double k = std::exp(-d2 / (2.0 * bl.sigma * bl.sigma));
        r += k * bl.r;
        g += k * bl.g;
        b += k * bl.b;
      }
      img.at(y, x, 0) = std::clamp(r, 0.0, 1.0);
      img.at(y, x, 1) = std::clamp(g, 0.0, 1.0);
      img.at(y, x, 2) = std::clamp(b, 0.0, 1.0);
    }
  return img;
}

namespace {

// bilinear value-noise octave from a small random lattice
std::vector<double> noise_octave(Rng& rng, int64_t h, int64_t w, int64_t cells) {
  std::vector<double> lattice(static_cast<size_t>((cells + 1) * (cells + 1)));
  for (double& v : lattice) v = rng.next_double();
  std::vector<double> out(static_cast<size_t>(h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const double fy = static_cast<double>(y) / static_cast<double>(h) * cells;
      const double fx = static_cast<double>(x) / static_cast<double>(w) * cells;
      const int64_t y0 = static_cast<int64_t>(fy), x0 = static_cast<int64_t>(fx);
      const double ty = fy - y0, tx = fx - x0;
      auto at = [&](int64_t yy, int64_t xx) { return lattice[static_cast<size_t>(yy * (cells + 1) + xx)]; };
      const double a = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
      const double b = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
      out[static_cast<size_t>(y * w + x)] = a * (1 - ty) + b * ty;
    }
  return out;
}

}  // namespace

ImageGrid photo_like_image(uint64_t seed, int64_t h, int64_t w) {
  Rng rng(seed);
  ImageGrid img = make_image(h, w, 3, 0.0);
  // luminance: sky gradient + octaves at 1/f amplitudes
  std::vector<double> luma(static_cast<size_t>(h * w), 0.0);
  double amp = 0.5;
  for (int64_t cells = 2; cells <= std::min<int64_t>(32, w / 2); cells *= 2) {
    const auto oct = noise_octave(rng, h, w, cells);
    for (size_t i = 0; i < luma.size(); ++i) luma[i] += amp * (oct[i] - 0.5);
    amp *= 0.55;
  }
  const double horizon = 0.35 + 0.3 * rng.next_double();
  const double warm = rng.next_double();  // color cast
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const double v = static_cast<double>(y) / static_cast<double>(h);
      const double sky = v < horizon ? 0.75 - 0.25 * (v / horizon) : 0.35 - 0.15 * (v - horizon);
      const double l = std::clamp(sky + luma[static_cast<size_t>(y * w + x)], 0.03, 0.97);
      img.at(y, x, 0) = std::clamp(l * (0.9 + 0.2 * warm), 0.0, 1.0);
      img.at(y, x, 1) = std::clamp(l, 0.0, 1.0);
      img.at(y, x, 2) = std::clamp(l * (1.1 - 0.2 * warm), 0.0, 1.0);
    }
  return img;
}

ImageGrid random_image(Rng& rng, int64_t h, int64_t w, int64_t c) {
  ImageGrid img = make_image(h, w, c);
  for (double& v : img.pixels) v = rng.next_double();
  return img;
}

}  // namespace ginr::testsupport
