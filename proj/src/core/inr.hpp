#pragma once

#include <cstdint>

#include "image.hpp"
#include "tensor.hpp"

namespace ginr {

// Normalized pixel-center coordinates: the tensor product of two inclusive
// linspaces over [-1, 1], row-major, each entry (y, x). A length-1 axis
// degenerates to the single coordinate 0.
struct CoordGrid {
  int64_t height = 0;
  int64_t width = 0;
  Tensor coords;  // [H*W x 2]
};

CoordGrid make_grid(int64_t h, int64_t w);

// Frozen random Fourier features: embed(x) = [sin(2*pi*B*x); cos(2*pi*B*x)],
// B is [F x 2] with entries N(0, sigma^2) drawn from a fixed seed.
struct FourierEmbedding {
  Tensor b_matrix;  // [F x 2]
  double sigma = 10.0;

  static FourierEmbedding create(int64_t features, double sigma, uint64_t seed);
  static FourierEmbedding from_matrix(Tensor b, double sigma);
  int64_t features() const { return b_matrix.dim(0); }
  int64_t embed_dim() const { return 2 * features(); }
  Tensor embed(const Tensor& coords) const;  // [n x 2] -> [n x 2F]
};

// Coordinate MLP f: embed(x) -> width -> width -> width -> channels, ReLU
// hidden layers, sigmoid output.
struct InrArchitecture {
  int64_t fourier_features = 64;
  double fourier_sigma = 10.0;
  int64_t hidden_width = 128;
  int64_t channels = 3;
};

int64_t parameter_count(const InrArchitecture& arch);

// Evaluate the MLP given its flat weight row [1 x L] at pre-embedded
// coordinates [n x 2F]. Differentiable through theta; output in (0, 1).
Tensor render_theta(const Tensor& theta_row, const InrArchitecture& arch, const Tensor& embedded);

// The continuous image: flat weights plus the frozen embedding they assume.
struct FunctionRep {
  InrArchitecture arch;
  FourierEmbedding embedding;
  std::vector<double> theta;
};

ImageGrid eval_function(const FunctionRep& rep, const CoordGrid& grid);

struct FitOptions {
  int64_t steps = 2000;
  double lr = 1e-3;
  uint64_t seed = 0x1D872B41C8E5F3A7ULL;
};

// Adam on mean squared error over all coordinate-feature pairs; keeps the
// best-loss weights seen.
FunctionRep fit_inr(const ImageGrid& target, const FitOptions& opt, InrArchitecture arch = {});

}  // namespace ginr
