#include "metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace ginr {

namespace {

void require_same_dims(const ImageGrid& a, const ImageGrid& b, const char* op) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    fail(Errc::shape_mismatch, std::string(op) + ": image dimensions differ");
}

constexpr int kWin = 11;

std::array<double, kWin> gaussian_window() {
  std::array<double, kWin> w{};
  const double sigma = 1.5;
  double total = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

// separable valid-region Gaussian filter of one channel plane
std::vector<double> filter_valid(const std::vector<double>& plane, int64_t h, int64_t w) {
  static const std::array<double, kWin> g = gaussian_window();
  const int64_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> tmp(static_cast<size_t>(h * ow));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += g[i] * plane[static_cast<size_t>(y * w + x + i)];
      tmp[static_cast<size_t>(y * ow + x)] = acc;
    }
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int64_t y = 0; y < oh; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += g[i] * tmp[static_cast<size_t>((y + i) * ow + x)];
      out[static_cast<size_t>(y * ow + x)] = acc;
    }
  return out;
}

}  // namespace

double mse(const ImageGrid& a, const ImageGrid& b) {
  require_same_dims(a, b, "mse");
  double acc = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

double psnr(const ImageGrid& a, const ImageGrid& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

double ssim(const ImageGrid& a, const ImageGrid& b) {
  require_same_dims(a, b, "ssim");
  if (a.height < kWin || a.width < kWin) fail(Errc::invalid_argument, "ssim: image smaller than 11x11 window");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int64_t h = a.height, w = a.width;
  double total = 0.0;
  for (int64_t c = 0; c < a.channels; ++c) {
    std::vector<double> pa(static_cast<size_t>(h * w)), pb(pa.size()), paa(pa.size()), pbb(pa.size()),
        pab(pa.size());
    for (int64_t i = 0; i < h * w; ++i) {
      const double va = a.pixels[static_cast<size_t>(i * a.channels + c)];
      const double vb = b.pixels[static_cast<size_t>(i * a.channels + c)];
      pa[static_cast<size_t>(i)] = va;
      pb[static_cast<size_t>(i)] = vb;
      paa[static_cast<size_t>(i)] = va * va;
      pbb[static_cast<size_t>(i)] = vb * vb;
      pab[static_cast<size_t>(i)] = va * vb;
    }
    auto mu_a = filter_valid(pa, h, w), mu_b = filter_valid(pb, h, w);
    auto m_aa = filter_valid(paa, h, w), m_bb = filter_valid(pbb, h, w), m_ab = filter_valid(pab, h, w);
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = m_aa[i] - ma * ma;
      const double vb = m_bb[i] - mb * mb;
      const double cov = m_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(a.channels);
}

QualityReport quality_report(const ImageGrid& a, const ImageGrid& b) {
  QualityReport r;
  r.mse = mse(a, b);
  r.psnr = psnr(a, b);
  r.ssim = ssim(a, b);
  return r;
}

}  // namespace ginr
