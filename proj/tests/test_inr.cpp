#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/inr.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "support/synthimages.hpp"

using namespace ginr;

TEST_CASE("make_grid endpoints and degenerate axes") {
  const CoordGrid g2 = make_grid(2, 2);
  const double expect[8] = {-1, -1, -1, 1, 1, -1, 1, 1};
  for (int i = 0; i < 8; ++i) CHECK(g2.coords.values()[static_cast<size_t>(i)] == expect[i]);

  const CoordGrid g1 = make_grid(1, 1);
  CHECK(g1.coords.values()[0] == 0.0);
  CHECK(g1.coords.values()[1] == 0.0);

  const CoordGrid g3 = make_grid(3, 1);
  CHECK(g3.coords.values()[0] == -1.0);
  CHECK(g3.coords.values()[2] == 0.0);
  CHECK(g3.coords.values()[4] == 1.0);

  CHECK_THROWS_AS(make_grid(0, 4), Error);
}

TEST_CASE("eval_function: zero weights give a flat 0.5 image") {
  InrArchitecture arch;
  FunctionRep rep;
  rep.arch = arch;
  rep.embedding = FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma, 7);
  rep.theta.assign(static_cast<size_t>(parameter_count(arch)), 0.0);
  const ImageGrid img = eval_function(rep, make_grid(5, 4));
  CHECK(img.height == 5);
  CHECK(img.width == 4);
  CHECK(img.channels == 3);
  for (double v : img.pixels) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("eval_function is deterministic and resolution-independent") {
  InrArchitecture arch;
  arch.fourier_features = 16;
  arch.hidden_width = 32;
  Rng rng(8);
  FunctionRep rep;
  rep.arch = arch;
  rep.embedding = FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma, 3);
  rep.theta.resize(static_cast<size_t>(parameter_count(arch)));
  for (double& v : rep.theta) v = 0.05 * rng.next_gaussian();

  const ImageGrid a = eval_function(rep, make_grid(8, 8));
  const ImageGrid b = eval_function(rep, make_grid(8, 8));
  CHECK(a.pixels == b.pixels);  // bit-identical

  const ImageGrid big = eval_function(rep, make_grid(32, 32));  // same rep, any resolution
  CHECK(big.height == 32);
  for (double v : big.pixels) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("fit_inr: constant image to 50 dB in 200 steps") {
  const ImageGrid target = make_image(8, 8, 3, 0.5);
  FitOptions opt;
  opt.steps = 200;
  opt.lr = 1e-2;
  InrArchitecture arch;
  arch.fourier_features = 16;
  arch.hidden_width = 32;
  const FunctionRep rep = fit_inr(target, opt, arch);
  CHECK(psnr(eval_function(rep, make_grid(8, 8)), target) >= 50.0);
}

TEST_CASE("fit_inr: refitting a render loses less than 3 dB") {
  Rng blob_rng(77);
  const ImageGrid target = testsupport::two_blob_image(blob_rng, 16, 16);
  InrArchitecture arch;
  arch.fourier_features = 24;
  arch.hidden_width = 48;
  FitOptions opt;
  opt.steps = 600;
  opt.lr = 3e-3;
  const FunctionRep rep1 = fit_inr(target, opt, arch);
  const ImageGrid render1 = eval_function(rep1, make_grid(16, 16));
  const double psnr1 = psnr(render1, target);

  opt.seed ^= 0x5555;
  const FunctionRep rep2 = fit_inr(render1, opt, arch);
  const double psnr2 = psnr(eval_function(rep2, make_grid(16, 16)), render1);
  CHECK(psnr2 >= psnr1 - 3.0);
}

TEST_CASE("fit loss gradient passes grad_check on a 4x4 image (small arch)") {
  Rng rng(9);
  const ImageGrid target = testsupport::random_image(rng, 4, 4, 3);
  InrArchitecture arch;
  arch.fourier_features = 8;
  arch.hidden_width = 12;
  const FourierEmbedding embedding = FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma, 5);
  const Tensor embedded = embedding.embed(make_grid(4, 4).coords);
  const Tensor target_t = Tensor::leaf({16, 3}, target.pixels);

  std::vector<double> theta0(static_cast<size_t>(parameter_count(arch)));
  for (double& v : theta0) v = 0.3 * rng.next_gaussian();
  const Tensor t0 = Tensor::leaf({1, static_cast<int64_t>(theta0.size())}, theta0);
  const double err = grad_check(
      [&](const Tensor& th) {
        Tensor diff = sub(render_theta(th, arch, embedded), target_t);
        return mean(mul(diff, diff));
      },
      t0, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("theta length must match the architecture") {
  InrArchitecture arch;
  FunctionRep rep;
  rep.arch = arch;
  rep.embedding = FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma, 7);
  rep.theta.assign(10, 0.0);
  CHECK_THROWS_AS(eval_function(rep, make_grid(2, 2)), Error);
}
