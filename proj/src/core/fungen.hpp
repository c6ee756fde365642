#pragma once

#include <functional>
#include <span>

#include "inr.hpp"
#include "optim.hpp"
#include "rng.hpp"

namespace ginr {

// A learned parameter: raw storage plus its Adam moments. Leaf tensors are
// minted from it per step, so the tape never aliases optimizer state.
struct Param {
  Shape shape;
  std::vector<double> value;
  AdamState adam;

  Tensor leaf(bool requires_grad) const { return Tensor::leaf(shape, value, requires_grad); }
  int64_t size() const { return static_cast<int64_t>(value.size()); }
};

// g: latent -> hidden -> theta, ReLU hidden. The output layer is down-scaled
// at init so freshly generated functions render near-constant images.
struct Hypernetwork {
  int64_t latent_dim = 64;
  int64_t hidden = 64;
  Param w1, b1, w2, b2;
};

// Per-point MLP on [coordinate embedding | feature], mean pool over the
// cloud, MLP head to a single logit.
struct Discriminator {
  Param w1, b1, w2, b2, w3, b3, w4, b4;
};

struct GeneratorModel {
  InrArchitecture arch;
  FourierEmbedding embedding;
  Hypernetwork hyper;
  Discriminator disc;
};

GeneratorModel init_generator(const InrArchitecture& arch, uint64_t seed, int64_t latent_dim = 64);

// theta rows for a batch of latents; differentiable through the leaves
Tensor hypernetwork_forward(const Tensor& w1, const Tensor& b1, const Tensor& w2, const Tensor& b2,
                            const Tensor& z);

FunctionRep generate_weights(const GeneratorModel& model, std::span<const double> z);

// z ~ N(0, I) drawn from `seed`; any resolution is legal regardless of the
// grids the model was trained on
ImageGrid sample_cover(const GeneratorModel& model, uint64_t seed, int64_t h, int64_t w);

// Same-grid point clouds stacked for batched evaluation.
struct PointCloudBatch {
  Tensor embedded;        // [n x 2F] shared grid embedding
  Tensor embedded_tiled;  // [clouds*n x 2F]
  Tensor features;        // [clouds*n x C], values in [0,1]
  int64_t clouds = 0;
  int64_t points = 0;
};

struct DiscriminatorLeaves {
  Tensor w1, b1, w2, b2, w3, b3, w4, b4;
};

DiscriminatorLeaves discriminator_leaves(const Discriminator& d, bool requires_grad);

// one logit per cloud: [clouds x 1]
Tensor discriminator_logits(const DiscriminatorLeaves& d, const Tensor& embedded_tiled,
                            const Tensor& features, int64_t clouds);

// (l/2) * sum over points of ||d logit / d feature||^2, averaged over the
// batch; differentiable w.r.t. whatever parameters logit_fn closes over.
Tensor r1_penalty(const std::function<Tensor(const Tensor& features)>& logit_fn,
                  const Tensor& features_leaf, double l, int64_t clouds);

struct GaspConfig {
  double r1_coeff = 10.0;
  double lr_hyper = 1e-4;
  double lr_disc = 4e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int64_t batch = 64;
  int64_t subset_points = 0;  // 0 = the full grid
};

struct GaspStepStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double r1 = 0.0;
};

// One discriminator update (non-saturating logistic loss + R1 on the real
// clouds only), then one hypernetwork update. Latents come from `rng`.
GaspStepStats gasp_train_step(GeneratorModel& model, const PointCloudBatch& real,
                              const GaspConfig& cfg, Rng& rng);

struct TrainStepInfo {
  int64_t step = 0;
  GaspStepStats stats;
};

using TrainCallback = std::function<void(const TrainStepInfo&)>;

// Shuffled-batch GASP loop; deterministic given (model, dataset, cfg, seed).
// steps == 0 returns the model unchanged. A non-finite loss aborts with the
// failing step index in the message.
void train_gasp(GeneratorModel& model, const std::vector<ImageGrid>& dataset, const GaspConfig& cfg,
                int64_t steps, uint64_t seed, const TrainCallback& callback = {});

// batched render of per-sample weights at shared embedded coordinates
Tensor render_batch(const Tensor& theta_rows, const InrArchitecture& arch, const Tensor& embedded);

}  // namespace ginr
