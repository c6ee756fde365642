#include "fungen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "error.hpp"

namespace ginr {

namespace {

constexpr double kHyperOutputGain = 0.02;

Param gaussian_param(Shape shape, double std, Rng& rng) {
  Param p;
  p.shape = std::move(shape);
  p.value.resize(static_cast<size_t>(numel(p.shape)));
  for (double& v : p.value) v = std * rng.next_gaussian();
  return p;
}

Param zero_param(Shape shape) {
  Param p;
  p.shape = std::move(shape);
  p.value.assign(static_cast<size_t>(numel(p.shape)), 0.0);
  return p;
}

Tensor draw_latents(Rng& rng, int64_t count, int64_t dim) {
  std::vector<double> z(static_cast<size_t>(count * dim));
  for (double& v : z) v = rng.next_gaussian();
  return Tensor::leaf({count, dim}, std::move(z));
}

void apply_adam(Param& p, const Tensor& leaf, double lr, const GaspConfig& cfg) {
  p.adam.lr = lr;
  p.adam.beta1 = cfg.beta1;
  p.adam.beta2 = cfg.beta2;
  const std::vector<double>& g = leaf.grad();
  if (g.empty()) return;  // parameter unused by this loss
  adam_step(p.value, g, p.adam);
}

}  // namespace

GeneratorModel init_generator(const InrArchitecture& arch, uint64_t seed, int64_t latent_dim) {
  if (latent_dim < 1) fail(Errc::invalid_argument, "init_generator: bad latent dimension");
  GeneratorModel m;
  m.arch = arch;
  m.embedding =
      FourierEmbedding::create(arch.fourier_features, arch.fourier_sigma, Rng::mix(seed, 1));

  const int64_t L = parameter_count(arch);
  const int64_t hidden = 64;
  Rng hr(Rng::mix(seed, 2));
  m.hyper.latent_dim = latent_dim;
  m.hyper.hidden = hidden;
  m.hyper.w1 = gaussian_param({latent_dim, hidden}, std::sqrt(2.0 / static_cast<double>(latent_dim)), hr);
  m.hyper.b1 = zero_param({1, hidden});
  m.hyper.w2 =
      gaussian_param({hidden, L}, kHyperOutputGain / std::sqrt(static_cast<double>(hidden)), hr);
  m.hyper.b2 = zero_param({1, L});

  Rng dr(Rng::mix(seed, 3));
  const int64_t din = 2 * arch.fourier_features + arch.channels;
  m.disc.w1 = gaussian_param({din, 128}, std::sqrt(2.0 / static_cast<double>(din)), dr);
  m.disc.b1 = zero_param({1, 128});
  m.disc.w2 = gaussian_param({128, 128}, std::sqrt(2.0 / 128.0), dr);
  m.disc.b2 = zero_param({1, 128});
  m.disc.w3 = gaussian_param({128, 128}, std::sqrt(2.0 / 128.0), dr);
  m.disc.b3 = zero_param({1, 128});
  m.disc.w4 = gaussian_param({128, 1}, 1.0 / std::sqrt(128.0), dr);
  m.disc.b4 = zero_param({1, 1});
  return m;
}

Tensor hypernetwork_forward(const Tensor& w1, const Tensor& b1, const Tensor& w2, const Tensor& b2,
                            const Tensor& z) {
  Tensor h = relu(add_rowvec(matmul(z, w1), b1));
  return add_rowvec(matmul(h, w2), b2);
}

Tensor render_batch(const Tensor& theta_rows, const InrArchitecture& arch, const Tensor& embedded) {
  const int64_t clouds = theta_rows.dim(0);
  std::vector<Tensor> outs;
  outs.reserve(static_cast<size_t>(clouds));
  for (int64_t b = 0; b < clouds; ++b)
    outs.push_back(render_theta(slice_rows(theta_rows, b, b + 1), arch, embedded));
  return clouds == 1 ? outs[0] : concat_rows(outs);
}

FunctionRep generate_weights(const GeneratorModel& model, std::span<const double> z) {
  if (static_cast<int64_t>(z.size()) != model.hyper.latent_dim)
    fail(Errc::shape_mismatch, "generate_weights: latent length mismatch");
  NoGradGuard ng;
  Tensor zt = Tensor::leaf({1, model.hyper.latent_dim}, {z.begin(), z.end()});
  Tensor theta = hypernetwork_forward(model.hyper.w1.leaf(false), model.hyper.b1.leaf(false),
                                      model.hyper.w2.leaf(false), model.hyper.b2.leaf(false), zt);
  FunctionRep rep;
  rep.arch = model.arch;
  rep.embedding = model.embedding;
  rep.theta.assign(theta.values().begin(), theta.values().end());
  return rep;
}

ImageGrid sample_cover(const GeneratorModel& model, uint64_t seed, int64_t h, int64_t w) {
  Rng rng(seed);
  std::vector<double> z(static_cast<size_t>(model.hyper.latent_dim));
  for (double& v : z) v = rng.next_gaussian();
  return eval_function(generate_weights(model, z), make_grid(h, w));
}

DiscriminatorLeaves discriminator_leaves(const Discriminator& d, bool requires_grad) {
  return {d.w1.leaf(requires_grad), d.b1.leaf(requires_grad), d.w2.leaf(requires_grad),
          d.b2.leaf(requires_grad), d.w3.leaf(requires_grad), d.b3.leaf(requires_grad),
          d.w4.leaf(requires_grad), d.b4.leaf(requires_grad)};
}

Tensor discriminator_logits(const DiscriminatorLeaves& d, const Tensor& embedded_tiled,
                            const Tensor& features, int64_t clouds) {
  if (embedded_tiled.dim(0) != features.dim(0))
    fail(Errc::shape_mismatch, "discriminator: embedding/feature row mismatch");
  Tensor x = concat_cols(embedded_tiled, features);
  Tensor h = relu(add_rowvec(matmul(x, d.w1), d.b1));
  h = relu(add_rowvec(matmul(h, d.w2), d.b2));
  Tensor pooled = block_mean_rows(h, clouds);
  Tensor head = relu(add_rowvec(matmul(pooled, d.w3), d.b3));
  return add_rowvec(matmul(head, d.w4), d.b4);
}

Tensor r1_penalty(const std::function<Tensor(const Tensor& features)>& logit_fn,
                  const Tensor& features_leaf, double l, int64_t clouds) {
  if (l < 0.0) fail(Errc::invalid_argument, "r1_penalty: coefficient must be >= 0");
  if (!features_leaf.requires_grad())
    fail(Errc::invalid_argument, "r1_penalty: features must require gradients");
  Tensor logits = logit_fn(features_leaf);
  Tensor feat_grad = grad(sum(logits), std::array<Tensor, 1>{features_leaf}, /*create_graph=*/true)[0];
  return scale(sum(mul(feat_grad, feat_grad)), l / (2.0 * static_cast<double>(clouds)));
}

GaspStepStats gasp_train_step(GeneratorModel& model, const PointCloudBatch& real,
                              const GaspConfig& cfg, Rng& rng) {
  EnableGradGuard eg;
  const int64_t clouds = real.clouds;
  if (clouds < 1 || real.features.dim(0) != clouds * real.points)
    fail(Errc::invalid_argument, "gasp_train_step: malformed batch");

  // ---- discriminator update (generator frozen) ----
  Tensor fake_features;
  {
    NoGradGuard ng;
    Tensor z = draw_latents(rng, clouds, model.hyper.latent_dim);
    Tensor theta = hypernetwork_forward(model.hyper.w1.leaf(false), model.hyper.b1.leaf(false),
                                        model.hyper.w2.leaf(false), model.hyper.b2.leaf(false), z);
    fake_features = render_batch(theta, model.arch, real.embedded);
  }
  GaspStepStats stats;
  {
    DiscriminatorLeaves d = discriminator_leaves(model.disc, true);
    Tensor real_feat =
        Tensor::leaf(real.features.shape(), {real.features.values().begin(), real.features.values().end()},
                     /*requires_grad=*/true);
    Tensor logit_real = discriminator_logits(d, real.embedded_tiled, real_feat, clouds);
    Tensor logit_fake = discriminator_logits(d, real.embedded_tiled, fake_features, clouds);
    Tensor adversarial = add(mean(softplus(neg(logit_real))), mean(softplus(logit_fake)));
    // R1 on the real clouds only; reuses the real forward pass
    Tensor feat_grad =
        grad(sum(logit_real), std::array<Tensor, 1>{real_feat}, /*create_graph=*/true)[0];
    Tensor r1 = scale(sum(mul(feat_grad, feat_grad)), cfg.r1_coeff / (2.0 * static_cast<double>(clouds)));
    Tensor d_loss = add(adversarial, r1);
    backward(d_loss);
    apply_adam(model.disc.w1, d.w1, cfg.lr_disc, cfg);
    apply_adam(model.disc.b1, d.b1, cfg.lr_disc, cfg);
    apply_adam(model.disc.w2, d.w2, cfg.lr_disc, cfg);
    apply_adam(model.disc.b2, d.b2, cfg.lr_disc, cfg);
    apply_adam(model.disc.w3, d.w3, cfg.lr_disc, cfg);
    apply_adam(model.disc.b3, d.b3, cfg.lr_disc, cfg);
    apply_adam(model.disc.w4, d.w4, cfg.lr_disc, cfg);
    apply_adam(model.disc.b4, d.b4, cfg.lr_disc, cfg);
    stats.d_loss = d_loss.item();
    stats.r1 = r1.item();
  }

  // ---- hypernetwork update (discriminator frozen at its new values) ----
  {
    Tensor z = draw_latents(rng, clouds, model.hyper.latent_dim);
    Tensor w1 = model.hyper.w1.leaf(true), b1 = model.hyper.b1.leaf(true);
    Tensor w2 = model.hyper.w2.leaf(true), b2 = model.hyper.b2.leaf(true);
    Tensor theta = hypernetwork_forward(w1, b1, w2, b2, z);
    Tensor gen_features = render_batch(theta, model.arch, real.embedded);
    DiscriminatorLeaves d = discriminator_leaves(model.disc, false);
    Tensor logit_gen = discriminator_logits(d, real.embedded_tiled, gen_features, clouds);
    Tensor g_loss = mean(softplus(neg(logit_gen)));
    backward(g_loss);
    apply_adam(model.hyper.w1, w1, cfg.lr_hyper, cfg);
    apply_adam(model.hyper.b1, b1, cfg.lr_hyper, cfg);
    apply_adam(model.hyper.w2, w2, cfg.lr_hyper, cfg);
    apply_adam(model.hyper.b2, b2, cfg.lr_hyper, cfg);
    stats.g_loss = g_loss.item();
  }
  return stats;
}

namespace {

Tensor tile_rows(const Tensor& t, int64_t copies) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(t.size() * copies));
  for (int64_t i = 0; i < copies; ++i) out.insert(out.end(), t.values().begin(), t.values().end());
  return Tensor::leaf({t.dim(0) * copies, t.dim(1)}, std::move(out));
}

Tensor gather_rows(const Tensor& t, const std::vector<int64_t>& rows) {
  const int64_t n = t.dim(1);
  std::vector<double> out(rows.size() * static_cast<size_t>(n));
  auto v = t.values();
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(v.begin() + rows[i] * n, n, out.begin() + static_cast<int64_t>(i) * n);
  return Tensor::leaf({static_cast<int64_t>(rows.size()), n}, std::move(out));
}

}  // namespace

void train_gasp(GeneratorModel& model, const std::vector<ImageGrid>& dataset, const GaspConfig& cfg,
                int64_t steps, uint64_t seed, const TrainCallback& callback) {
  if (dataset.empty()) fail(Errc::invalid_argument, "train_gasp: empty dataset");
  const ImageGrid& first = dataset.front();
  for (const ImageGrid& img : dataset) {
    validate_image(img);
    if (img.height != first.height || img.width != first.width || img.channels != first.channels)
      fail(Errc::invalid_argument, "train_gasp: dataset images must share one resolution");
  }
  if (first.channels != model.arch.channels)
    fail(Errc::invalid_argument, "train_gasp: dataset channels do not match the model");
  if (cfg.batch < 1) fail(Errc::invalid_argument, "train_gasp: batch must be >= 1");

  const CoordGrid grid = make_grid(first.height, first.width);
  const Tensor embedded_full = model.embedding.embed(grid.coords);
  const int64_t full_points = first.height * first.width;
  const int64_t n_points =
      cfg.subset_points > 0 ? std::min(cfg.subset_points, full_points) : full_points;

  Tensor embedded = embedded_full;
  Tensor embedded_tiled = tile_rows(embedded_full, cfg.batch);

  Rng rng(Rng::mix(seed, 0x6A5));
  std::vector<int64_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  size_t cursor = order.size();  // forces an initial shuffle

  std::vector<int64_t> subset(static_cast<size_t>(n_points));
  std::vector<int64_t> all_points(static_cast<size_t>(full_points));
  for (int64_t i = 0; i < full_points; ++i) all_points[static_cast<size_t>(i)] = i;

  for (int64_t step = 0; step < steps; ++step) {
    // next batch of image indices, reshuffling between epochs
    std::vector<int64_t> batch(static_cast<size_t>(cfg.batch));
    for (int64_t b = 0; b < cfg.batch; ++b) {
      if (cursor >= order.size()) {
        for (size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[rng.next_u64() % i]);
        cursor = 0;
      }
      batch[static_cast<size_t>(b)] = order[cursor++];
    }

    if (cfg.subset_points > 0) {
      // partial Fisher-Yates for this step's shared coordinate subset
      std::vector<int64_t> pool = all_points;
      for (int64_t i = 0; i < n_points; ++i) {
        const int64_t j = i + static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(full_points - i));
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
      }
      subset.assign(pool.begin(), pool.begin() + n_points);
      embedded = gather_rows(embedded_full, subset);
      embedded_tiled = tile_rows(embedded, cfg.batch);
    }

    PointCloudBatch real;
    real.clouds = cfg.batch;
    real.points = n_points;
    real.embedded = embedded;
    real.embedded_tiled = embedded_tiled;
    {
      std::vector<double> feats(static_cast<size_t>(cfg.batch * n_points * first.channels));
      size_t w = 0;
      for (int64_t b = 0; b < cfg.batch; ++b) {
        const ImageGrid& img = dataset[static_cast<size_t>(batch[static_cast<size_t>(b)])];
        if (cfg.subset_points > 0) {
          for (int64_t p : subset)
            for (int64_t c = 0; c < first.channels; ++c)
              feats[w++] = img.pixels[static_cast<size_t>(p * first.channels + c)];
        } else {
          std::copy(img.pixels.begin(), img.pixels.end(), feats.begin() + static_cast<int64_t>(w));
          w += img.pixels.size();
        }
      }
      real.features = Tensor::leaf({cfg.batch * n_points, first.channels}, std::move(feats));
    }

    GaspStepStats stats;
    try {
      stats = gasp_train_step(model, real, cfg, rng);
    } catch (const Error& e) {
      if (e.code() == Errc::numeric)
        fail(Errc::numeric, "train_gasp: aborted at step " + std::to_string(step) + ": " + e.what());
      throw;
    }
    if (callback) callback({step, stats});
  }
}

}  // namespace ginr
