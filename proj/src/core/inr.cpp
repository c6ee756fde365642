#include "inr.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"
#include "optim.hpp"
#include "rng.hpp"

namespace ginr {

CoordGrid make_grid(int64_t h, int64_t w) {
  if (h < 1 || w < 1) fail(Errc::invalid_argument, "make_grid: dimensions must be positive");
  auto axis = [](int64_t n, int64_t i) {
    return n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<double> coords;
  coords.reserve(static_cast<size_t>(h * w * 2));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      coords.push_back(axis(h, y));
      coords.push_back(axis(w, x));
    }
  CoordGrid g;
  g.height = h;
  g.width = w;
  g.coords = Tensor::leaf({h * w, 2}, std::move(coords));
  return g;
}

FourierEmbedding FourierEmbedding::create(int64_t features, double sigma, uint64_t seed) {
  if (features < 1 || sigma <= 0.0) fail(Errc::invalid_argument, "fourier embedding: bad parameters");
  Rng rng(seed);
  std::vector<double> b(static_cast<size_t>(features * 2));
  for (double& v : b) v = sigma * rng.next_gaussian();
  FourierEmbedding e;
  e.b_matrix = Tensor::leaf({features, 2}, std::move(b));
  e.sigma = sigma;
  return e;
}

FourierEmbedding FourierEmbedding::from_matrix(Tensor b, double sigma) {
  if (b.shape().size() != 2 || b.dim(1) != 2) fail(Errc::shape_mismatch, "fourier embedding: B must be [F x 2]");
  FourierEmbedding e;
  e.b_matrix = std::move(b);
  e.sigma = sigma;
  return e;
}

Tensor FourierEmbedding::embed(const Tensor& coords) const {
  NoGradGuard ng;  // coordinates and B are frozen
  Tensor proj = scale(matmul(coords, transpose(b_matrix)), 2.0 * M_PI);  // [n x F]
  return concat_cols(sin(proj), cos(proj));
}

int64_t parameter_count(const InrArchitecture& arch) {
  const int64_t in = 2 * arch.fourier_features, w = arch.hidden_width, c = arch.channels;
  return (in * w + w) + 2 * (w * w + w) + (w * c + c);
}

namespace {

struct Segment {
  int64_t offset, rows, cols;
};

// theta layout: W1,b1,W2,b2,W3,b3,Wout,bout; each matrix row-major, biases
// as [1 x n] rows
std::vector<Segment> theta_layout(const InrArchitecture& arch) {
  const int64_t in = 2 * arch.fourier_features, w = arch.hidden_width, c = arch.channels;
  std::vector<Segment> segs;
  int64_t off = 0;
  auto push = [&](int64_t r, int64_t cc) {
    segs.push_back({off, r, cc});
    off += r * cc;
  };
  push(in, w);
  push(1, w);
  push(w, w);
  push(1, w);
  push(w, w);
  push(1, w);
  push(w, c);
  push(1, c);
  return segs;
}

}  // namespace

Tensor render_theta(const Tensor& theta_row, const InrArchitecture& arch, const Tensor& embedded) {
  if (theta_row.shape().size() != 2 || theta_row.dim(0) != 1 ||
      theta_row.dim(1) != parameter_count(arch))
    fail(Errc::shape_mismatch, "render_theta: theta length does not match architecture");
  if (embedded.dim(1) != 2 * arch.fourier_features)
    fail(Errc::shape_mismatch, "render_theta: embedding width does not match architecture");
  const auto segs = theta_layout(arch);
  auto seg = [&](size_t i) {
    const Segment& s = segs[i];
    return reshape(slice_cols(theta_row, s.offset, s.offset + s.rows * s.cols), {s.rows, s.cols});
  };
  Tensor h = relu(add_rowvec(matmul(embedded, seg(0)), seg(1)));
  h = relu(add_rowvec(matmul(h, seg(2)), seg(3)));
  h = relu(add_rowvec(matmul(h, seg(4)), seg(5)));
  return sigmoid(add_rowvec(matmul(h, seg(6)), seg(7)));
}

ImageGrid eval_function(const FunctionRep& rep, const CoordGrid& grid) {
  if (grid.height < 1 || grid.width < 1) fail(Errc::invalid_argument, "eval_function: empty grid");
  if (static_cast<int64_t>(rep.theta.size()) != parameter_count(rep.arch))
    fail(Errc::shape_mismatch, "eval_function: theta length does not match architecture");
  NoGradGuard ng;
  Tensor theta = Tensor::leaf({1, static_cast<int64_t>(rep.theta.size())}, rep.theta);
  Tensor out = render_theta(theta, rep.arch, rep.embedding.embed(grid.coords));
  ImageGrid img = make_image(grid.height, grid.width, rep.arch.channels);
  auto v = out.values();
  img.pixels.assign(v.begin(), v.end());
  return img;
}

FunctionRep fit_inr(const ImageGrid& target, const FitOptions& opt, InrArchitecture arch) {
  validate_image(target);
  if (opt.steps < 1) fail(Errc::invalid_argument, "fit_inr: steps must be >= 1");
  arch.channels = target.channels;

  FunctionRep rep;
  rep.arch = arch;
  rep.embedding = FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma,
                                           Rng::mix(opt.seed, 0xE0BEDD));

  // He-style init on the hidden layers, small final layer, zero biases
  const auto segs = theta_layout(arch);
  std::vector<double> theta(static_cast<size_t>(parameter_count(arch)), 0.0);
  Rng rng(Rng::mix(opt.seed, 0x7E7A));
  for (size_t i = 0; i + 1 < segs.size(); i += 2) {
    const Segment& s = segs[i];
    const double std = i + 2 == segs.size() ? 1.0 / std::sqrt(static_cast<double>(s.rows))
                                            : std::sqrt(2.0 / static_cast<double>(s.rows));
    for (int64_t j = 0; j < s.rows * s.cols; ++j)
      theta[static_cast<size_t>(s.offset + j)] = std * rng.next_gaussian();
  }

  CoordGrid grid = make_grid(target.height, target.width);
  Tensor embedded = rep.embedding.embed(grid.coords);
  Tensor target_t = Tensor::leaf({target.height * target.width, target.channels}, target.pixels);

  AdamState adam;
  adam.lr = opt.lr;
  std::vector<double> best = theta;
  double best_loss = std::numeric_limits<double>::infinity();
  EnableGradGuard eg;
  for (int64_t step = 0; step < opt.steps; ++step) {
    Tensor theta_t = Tensor::leaf({1, static_cast<int64_t>(theta.size())}, theta, true);
    Tensor pred = render_theta(theta_t, arch, embedded);
    Tensor diff = sub(pred, target_t);
    Tensor loss = mean(mul(diff, diff));
    if (!std::isfinite(loss.item())) fail(Errc::numeric, "fit_inr: non-finite loss");
    if (loss.item() < best_loss) {
      best_loss = loss.item();
      best = theta;
    }
    backward(loss);
    adam_step(theta, theta_t.grad(), adam);
  }
  // score the final iterate too
  {
    NoGradGuard ng;
    Tensor theta_t = Tensor::leaf({1, static_cast<int64_t>(theta.size())}, theta);
    Tensor diff = sub(render_theta(theta_t, arch, embedded), target_t);
    if (mean(mul(diff, diff)).item() < best_loss) best = theta;
  }
  rep.theta = std::move(best);
  return rep;
}

}  // namespace ginr
