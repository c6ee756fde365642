// extern-C surface over the core library: opaque handles in, status codes out.

#include "ginr/ginr.h"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/fnns.hpp"
#include "core/fungen.hpp"
#include "core/image_io.hpp"
#include "core/metrics.hpp"
#include "core/payload.hpp"

struct ginr_image {
  ginr::ImageGrid grid;
};

struct ginr_model {
  ginr::GeneratorModel model;
};

struct ginr_stego {
  ginr::StegoResult result;
  ginr_image image;  // view of result.stego for the accessor
};

namespace {

thread_local std::string g_last_error;

ginr_status status_of(ginr::Errc c) {
  switch (c) {
    case ginr::Errc::invalid_argument: return GINR_ERR_INVALID_ARGUMENT;
    case ginr::Errc::shape_mismatch: return GINR_ERR_SHAPE_MISMATCH;
    case ginr::Errc::io: return GINR_ERR_IO;
    case ginr::Errc::format: return GINR_ERR_FORMAT;
    case ginr::Errc::crc: return GINR_ERR_CRC;
    case ginr::Errc::capacity: return GINR_ERR_CAPACITY;
    case ginr::Errc::numeric: return GINR_ERR_NUMERIC;
    case ginr::Errc::checksum: return GINR_ERR_CHECKSUM;
    case ginr::Errc::unsupported: return GINR_ERR_UNSUPPORTED;
  }
  return GINR_ERR_INVALID_ARGUMENT;
}

template <typename Fn>
ginr_status wrap(Fn&& fn) {
  try {
    fn();
    return GINR_OK;
  } catch (const ginr::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GINR_ERR_INVALID_ARGUMENT;
  }
}

ginr_status arg_error(const char* msg) {
  g_last_error = msg;
  return GINR_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* ginr_status_name(ginr_status status) {
  switch (status) {
    case GINR_OK: return "ok";
    case GINR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GINR_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case GINR_ERR_IO: return "i/o error";
    case GINR_ERR_FORMAT: return "format error";
    case GINR_ERR_CRC: return "crc mismatch";
    case GINR_ERR_CAPACITY: return "capacity exceeded";
    case GINR_ERR_NUMERIC: return "numeric error";
    case GINR_ERR_CHECKSUM: return "checksum failure";
    case GINR_ERR_UNSUPPORTED: return "unsupported";
  }
  return "unknown";
}

const char* ginr_last_error(void) { return g_last_error.c_str(); }

const char* ginr_version_string(void) { return "ginr 1.0.0"; }

/* ---- images ---- */

ginr_status ginr_image_create(int32_t height, int32_t width, int32_t channels,
                              const double* pixels, ginr_image** out) {
  if (!out) return arg_error("image_create: out is null");
  return wrap([&] {
    ginr::ImageGrid g = ginr::make_image(height, width, channels, 0.5);
    if (pixels) {
      std::copy(pixels, pixels + g.pixels.size(), g.pixels.begin());
      ginr::validate_image(g);
    }
    *out = new ginr_image{std::move(g)};
  });
}

ginr_status ginr_image_read(const char* path, ginr_image** out) {
  if (!path || !out) return arg_error("image_read: null argument");
  return wrap([&] { *out = new ginr_image{ginr::read_image(path)}; });
}

ginr_status ginr_image_write(const ginr_image* img, const char* path) {
  if (!img || !path) return arg_error("image_write: null argument");
  return wrap([&] { ginr::write_image(img->grid, path); });
}

int32_t ginr_image_height(const ginr_image* img) { return img ? static_cast<int32_t>(img->grid.height) : 0; }
int32_t ginr_image_width(const ginr_image* img) { return img ? static_cast<int32_t>(img->grid.width) : 0; }
int32_t ginr_image_channels(const ginr_image* img) { return img ? static_cast<int32_t>(img->grid.channels) : 0; }

ginr_status ginr_image_pixels(const ginr_image* img, double* buffer, size_t buffer_len) {
  if (!img || !buffer) return arg_error("image_pixels: null argument");
  if (buffer_len < img->grid.pixels.size()) return arg_error("image_pixels: buffer too small");
  std::copy(img->grid.pixels.begin(), img->grid.pixels.end(), buffer);
  return GINR_OK;
}

void ginr_image_free(ginr_image* img) { delete img; }

/* ---- metrics ---- */

ginr_status ginr_mse(const ginr_image* a, const ginr_image* b, double* out) {
  if (!a || !b || !out) return arg_error("mse: null argument");
  return wrap([&] { *out = ginr::mse(a->grid, b->grid); });
}

ginr_status ginr_psnr(const ginr_image* a, const ginr_image* b, double* out) {
  if (!a || !b || !out) return arg_error("psnr: null argument");
  return wrap([&] { *out = ginr::psnr(a->grid, b->grid); });
}

ginr_status ginr_ssim(const ginr_image* a, const ginr_image* b, double* out) {
  if (!a || !b || !out) return arg_error("ssim: null argument");
  return wrap([&] { *out = ginr::ssim(a->grid, b->grid); });
}

/* ---- model ---- */

ginr_status ginr_model_init(int32_t channels, uint64_t seed, ginr_model** out) {
  if (!out) return arg_error("model_init: out is null");
  return wrap([&] {
    ginr::InrArchitecture arch;
    arch.channels = channels;
    if (channels != 1 && channels != 3)
      ginr::fail(ginr::Errc::invalid_argument, "model_init: channels must be 1 or 3");
    *out = new ginr_model{ginr::init_generator(arch, seed)};
  });
}

ginr_status ginr_model_load(const char* path, ginr_model** out) {
  if (!path || !out) return arg_error("model_load: null argument");
  return wrap([&] { *out = new ginr_model{ginr::load_generator(path)}; });
}

ginr_status ginr_model_save(const ginr_model* model, const char* path) {
  if (!model || !path) return arg_error("model_save: null argument");
  return wrap([&] { ginr::save_generator(path, model->model); });
}

void ginr_model_free(ginr_model* model) { delete model; }

void ginr_gasp_config_default(ginr_gasp_config* cfg) {
  if (!cfg) return;
  ginr::GaspConfig d;
  cfg->r1_coeff = d.r1_coeff;
  cfg->lr_hyper = d.lr_hyper;
  cfg->lr_disc = d.lr_disc;
  cfg->beta1 = d.beta1;
  cfg->beta2 = d.beta2;
  cfg->batch = static_cast<int32_t>(d.batch);
  cfg->subset_points = static_cast<int32_t>(d.subset_points);
}

ginr_status ginr_model_train(ginr_model* model, const ginr_image* const* images,
                             size_t image_count, const ginr_gasp_config* cfg, int32_t steps,
                             uint64_t seed, ginr_train_callback callback, void* user) {
  if (!model || !images) return arg_error("model_train: null argument");
  if (steps < 0) return arg_error("model_train: negative step count");
  return wrap([&] {
    std::vector<ginr::ImageGrid> dataset;
    dataset.reserve(image_count);
    for (size_t i = 0; i < image_count; ++i) {
      if (!images[i]) ginr::fail(ginr::Errc::invalid_argument, "model_train: null image in dataset");
      dataset.push_back(images[i]->grid);
    }
    ginr::GaspConfig c;
    if (cfg) {
      c.r1_coeff = cfg->r1_coeff;
      c.lr_hyper = cfg->lr_hyper;
      c.lr_disc = cfg->lr_disc;
      c.beta1 = cfg->beta1;
      c.beta2 = cfg->beta2;
      c.batch = cfg->batch;
      c.subset_points = cfg->subset_points;
    }
    ginr::TrainCallback cb;
    if (callback)
      cb = [&](const ginr::TrainStepInfo& info) {
        callback(static_cast<int32_t>(info.step), info.stats.d_loss, info.stats.g_loss,
                 info.stats.r1, user);
      };
    ginr::train_gasp(model->model, dataset, c, steps, seed, cb);
  });
}

ginr_status ginr_model_sample(const ginr_model* model, uint64_t seed, int32_t height,
                              int32_t width, ginr_image** out) {
  if (!model || !out) return arg_error("model_sample: null argument");
  return wrap([&] { *out = new ginr_image{ginr::sample_cover(model->model, seed, height, width)}; });
}

/* ---- steganography ---- */

ginr_status ginr_decoder_spec_format(const ginr_decoder_spec* spec, char* buffer,
                                     size_t buffer_len) {
  if (!spec || !buffer) return arg_error("decoder_spec_format: null argument");
  return wrap([&] {
    ginr::DecoderSpec s{spec->seed, spec->height, spec->width, spec->channels,
                        spec->bits_per_pixel};
    const std::string text = ginr::format_decoder_spec(s);
    if (buffer_len < text.size() + 1)
      ginr::fail(ginr::Errc::invalid_argument, "decoder_spec_format: buffer too small");
    std::memcpy(buffer, text.c_str(), text.size() + 1);
  });
}

ginr_status ginr_decoder_spec_parse(const char* text, ginr_decoder_spec* out) {
  if (!text || !out) return arg_error("decoder_spec_parse: null argument");
  return wrap([&] {
    const ginr::DecoderSpec s = ginr::parse_decoder_spec(text);
    out->seed = s.seed;
    out->height = static_cast<int32_t>(s.height);
    out->width = static_cast<int32_t>(s.width);
    out->channels = static_cast<int32_t>(s.channels);
    out->bits_per_pixel = static_cast<int32_t>(s.bits_per_pixel);
  });
}

void ginr_hide_config_default(ginr_hide_config* cfg) {
  if (!cfg) return;
  ginr::HideConfig d;
  cfg->epsilon = d.epsilon;
  cfg->outer_rounds = static_cast<int32_t>(d.outer_rounds);
  cfg->inner_iterations = static_cast<int32_t>(d.inner_iterations);
  cfg->step_size = d.step_size;
  cfg->psnr_floor = d.psnr_floor;
  cfg->bits_per_pixel = static_cast<int32_t>(d.bits_per_pixel);
  for (size_t i = 0; i < d.seed_pool.size(); ++i) cfg->seed_pool[i] = d.seed_pool[i];
  cfg->stall_rounds = static_cast<int32_t>(d.stall_rounds);
}

ginr_status ginr_hide(const ginr_image* cover, const uint8_t* bits, size_t bit_count,
                      const ginr_hide_config* cfg, ginr_stego** out) {
  if (!cover || !bits || !out) return arg_error("hide: null argument");
  return wrap([&] {
    ginr::HideConfig c;
    if (cfg) {
      c.epsilon = cfg->epsilon;
      c.outer_rounds = cfg->outer_rounds;
      c.inner_iterations = cfg->inner_iterations;
      c.step_size = cfg->step_size;
      c.psnr_floor = cfg->psnr_floor;
      c.bits_per_pixel = cfg->bits_per_pixel;
      for (size_t i = 0; i < c.seed_pool.size(); ++i) c.seed_pool[i] = cfg->seed_pool[i];
      c.stall_rounds = cfg->stall_rounds;
    }
    ginr::StegoResult r = ginr::hide(cover->grid, {bits, bit_count}, c);
    auto* s = new ginr_stego;
    s->result = std::move(r);
    s->image.grid = s->result.stego;
    *out = s;
  });
}

const ginr_image* ginr_stego_image(const ginr_stego* s) { return s ? &s->image : nullptr; }
double ginr_stego_ber(const ginr_stego* s) { return s ? s->result.ber : 1.0; }
double ginr_stego_psnr(const ginr_stego* s) { return s ? s->result.psnr : 0.0; }
double ginr_stego_ssim(const ginr_stego* s) { return s ? s->result.ssim : 0.0; }
uint64_t ginr_stego_seed(const ginr_stego* s) { return s ? s->result.seed_used : 0; }
int32_t ginr_stego_rounds(const ginr_stego* s) {
  return s ? static_cast<int32_t>(s->result.outer_rounds_used) : 0;
}
int32_t ginr_stego_early_stopped(const ginr_stego* s) { return s && s->result.early_stopped ? 1 : 0; }
int32_t ginr_stego_psnr_flagged(const ginr_stego* s) { return s && s->result.psnr_flagged ? 1 : 0; }

ginr_status ginr_stego_bits(const ginr_stego* s, uint8_t* buffer, size_t bit_count) {
  if (!s || !buffer) return arg_error("stego_bits: null argument");
  if (bit_count != s->result.extracted.size()) return arg_error("stego_bits: wrong bit count");
  std::copy(s->result.extracted.begin(), s->result.extracted.end(), buffer);
  return GINR_OK;
}

void ginr_stego_free(ginr_stego* s) { delete s; }

ginr_status ginr_reveal(const ginr_decoder_spec* spec, const ginr_image* stego, uint8_t* bits,
                        size_t bit_count) {
  if (!spec || !stego || !bits) return arg_error("reveal: null argument");
  return wrap([&] {
    ginr::DecoderSpec s{spec->seed, spec->height, spec->width, spec->channels,
                        spec->bits_per_pixel};
    const std::vector<uint8_t> extracted = ginr::reveal(s, stego->grid);
    if (extracted.size() != bit_count)
      ginr::fail(ginr::Errc::shape_mismatch, "reveal: bit buffer does not match H*W*D");
    std::copy(extracted.begin(), extracted.end(), bits);
  });
}

ginr_status ginr_ber(const uint8_t* a, const uint8_t* b, size_t bit_count, double* out) {
  if (!a || !b || !out) return arg_error("ber: null argument");
  return wrap([&] { *out = ginr::ber({a, bit_count}, {b, bit_count}); });
}

/* ---- payload framing ---- */

ginr_status ginr_payload_bits_needed(size_t payload_len, size_t* out_bits) {
  if (!out_bits) return arg_error("payload_bits_needed: out is null");
  return wrap([&] {
    *out_bits = static_cast<size_t>(ginr::payload_bits_needed(static_cast<int64_t>(payload_len)));
  });
}

ginr_status ginr_payload_encode(const uint8_t* payload, size_t payload_len, uint64_t pad_seed,
                                uint8_t* bits, size_t capacity_bits) {
  if ((!payload && payload_len > 0) || !bits) return arg_error("payload_encode: null argument");
  return wrap([&] {
    const std::vector<uint8_t> encoded =
        ginr::payload_to_bits({payload, payload_len}, pad_seed, static_cast<int64_t>(capacity_bits));
    std::copy(encoded.begin(), encoded.end(), bits);
  });
}

ginr_status ginr_payload_decode(const uint8_t* bits, size_t bit_count, uint8_t* buffer,
                                size_t buffer_len, size_t* out_len, int32_t* checksum_ok) {
  if (!bits || !buffer || !out_len || !checksum_ok) return arg_error("payload_decode: null argument");
  return wrap([&] {
    const ginr::PayloadDecodeResult r = ginr::payload_from_bits({bits, bit_count});
    if (r.bytes.size() > buffer_len)
      ginr::fail(ginr::Errc::invalid_argument, "payload_decode: buffer too small");
    std::copy(r.bytes.begin(), r.bytes.end(), buffer);
    *out_len = r.bytes.size();
    *checksum_ok = r.checksum_ok ? 1 : 0;
  });
}

} /* extern "C" */
