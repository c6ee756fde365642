// Exercises the shared-library surface the CLI builds on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ginr/ginr.h"
#include "support/synthimages.hpp"

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ginr_image* to_capi(const ginr::ImageGrid& g) {
  ginr_image* img = nullptr;
  REQUIRE(ginr_image_create(static_cast<int32_t>(g.height), static_cast<int32_t>(g.width),
                            static_cast<int32_t>(g.channels), g.pixels.data(), &img) == GINR_OK);
  return img;
}

}  // namespace

TEST_CASE("status names and error reporting") {
  CHECK(std::string(ginr_status_name(GINR_OK)) == "ok");
  CHECK(std::string(ginr_status_name(GINR_ERR_CAPACITY)) == "capacity exceeded");
  CHECK(ginr_image_read(nullptr, nullptr) == GINR_ERR_INVALID_ARGUMENT);
  ginr_image* img = nullptr;
  CHECK(ginr_image_read("/definitely/not/here.png", &img) == GINR_ERR_IO);
  CHECK(std::string(ginr_last_error()).find("cannot open") != std::string::npos);
}

TEST_CASE("image create/read/write round trip") {
  ginr::Rng rng(40);
  const ginr::ImageGrid grid = ginr::testsupport::random_image(rng, 9, 11, 3);
  ginr_image* img = to_capi(grid);
  CHECK(ginr_image_height(img) == 9);
  CHECK(ginr_image_width(img) == 11);
  CHECK(ginr_image_channels(img) == 3);

  const std::string path = temp_path("ginr_capi_img.png");
  REQUIRE(ginr_image_write(img, path.c_str()) == GINR_OK);
  ginr_image* back = nullptr;
  REQUIRE(ginr_image_read(path.c_str(), &back) == GINR_OK);
  std::vector<double> pix(9 * 11 * 3);
  REQUIRE(ginr_image_pixels(back, pix.data(), pix.size()) == GINR_OK);
  double worst = 0.0;
  for (size_t i = 0; i < pix.size(); ++i) worst = std::max(worst, std::abs(pix[i] - grid.pixels[i]));
  CHECK(worst <= 1.0 / 510.0 + 1e-12);

  double out = 0.0;
  CHECK(ginr_psnr(back, back, &out) == GINR_OK);
  CHECK(std::isinf(out));
  CHECK(ginr_ssim(img, back, &out) == GINR_OK);
  CHECK(out > 0.99);

  // bad pixel range is rejected
  std::vector<double> bad(4, 2.0);
  ginr_image* nope = nullptr;
  CHECK(ginr_image_create(2, 2, 1, bad.data(), &nope) == GINR_ERR_INVALID_ARGUMENT);

  ginr_image_free(img);
  ginr_image_free(back);
  std::remove(path.c_str());
}

TEST_CASE("decoder spec text round trip") {
  ginr_decoder_spec spec{};
  spec.seed = 123456789ULL;
  spec.height = 32;
  spec.width = 48;
  spec.channels = 3;
  spec.bits_per_pixel = 2;
  char buf[256];
  REQUIRE(ginr_decoder_spec_format(&spec, buf, sizeof(buf)) == GINR_OK);
  ginr_decoder_spec back{};
  REQUIRE(ginr_decoder_spec_parse(buf, &back) == GINR_OK);
  CHECK(back.seed == spec.seed);
  CHECK(back.height == 32);
  CHECK(back.width == 48);
  CHECK(back.bits_per_pixel == 2);
  CHECK(ginr_decoder_spec_parse("garbage", &back) == GINR_ERR_FORMAT);
}

TEST_CASE("hide-reveal round trip through the C surface") {
  ginr::Rng rng(41);
  const ginr::ImageGrid cover_grid =
      ginr::quantize_roundtrip(ginr::testsupport::two_blob_image(rng, 16, 16));
  ginr_image* cover = to_capi(cover_grid);

  const size_t nbits = 16 * 16;
  std::vector<uint8_t> bits(nbits);
  for (size_t i = 0; i < nbits; ++i) bits[i] = static_cast<uint8_t>((i * 2654435761u >> 7) & 1);

  ginr_hide_config cfg;
  ginr_hide_config_default(&cfg);
  CHECK(cfg.epsilon == 0.3);
  CHECK(cfg.outer_rounds == 100);
  CHECK(cfg.inner_iterations == 10);
  CHECK(cfg.step_size == 0.1);
  CHECK(cfg.psnr_floor == 20.0);
  cfg.outer_rounds = 30;

  ginr_stego* stego = nullptr;
  REQUIRE(ginr_hide(cover, bits.data(), nbits, &cfg, &stego) == GINR_OK);
  CHECK(ginr_stego_ber(stego) == 0.0);
  CHECK(ginr_stego_psnr(stego) >= 20.0);
  CHECK(ginr_stego_early_stopped(stego) == 1);

  std::vector<uint8_t> extracted(nbits);
  REQUIRE(ginr_stego_bits(stego, extracted.data(), nbits) == GINR_OK);
  CHECK(extracted == bits);

  ginr_decoder_spec spec{};
  spec.seed = ginr_stego_seed(stego);
  spec.height = 16;
  spec.width = 16;
  spec.channels = 3;
  spec.bits_per_pixel = 1;
  std::vector<uint8_t> revealed(nbits);
  REQUIRE(ginr_reveal(&spec, ginr_stego_image(stego), revealed.data(), nbits) == GINR_OK);
  CHECK(revealed == bits);

  double agreement = 0.0;
  REQUIRE(ginr_ber(bits.data(), revealed.data(), nbits, &agreement) == GINR_OK);
  CHECK(agreement == 0.0);

  ginr_stego_free(stego);
  ginr_image_free(cover);
}

TEST_CASE("payload helpers behave and report capacity") {
  const std::string secret = "covert";
  size_t needed = 0;
  REQUIRE(ginr_payload_bits_needed(secret.size(), &needed) == GINR_OK);
  CHECK(needed == 8 * (secret.size() + 8));

  std::vector<uint8_t> bits(256);
  REQUIRE(ginr_payload_encode(reinterpret_cast<const uint8_t*>(secret.data()), secret.size(), 5,
                              bits.data(), bits.size()) == GINR_OK);
  std::vector<uint8_t> buf(64);
  size_t out_len = 0;
  int32_t ok = 0;
  REQUIRE(ginr_payload_decode(bits.data(), bits.size(), buf.data(), buf.size(), &out_len, &ok) ==
          GINR_OK);
  CHECK(ok == 1);
  CHECK(std::string(buf.begin(), buf.begin() + static_cast<int64_t>(out_len)) == secret);

  CHECK(ginr_payload_encode(reinterpret_cast<const uint8_t*>(secret.data()), secret.size(), 5,
                            bits.data(), 16) == GINR_ERR_CAPACITY);
}

TEST_CASE("model init/save/load/sample through the C surface") {
  ginr_model* model = nullptr;
  REQUIRE(ginr_model_init(3, 2024, &model) == GINR_OK);
  const std::string path = temp_path("ginr_capi_model.ckpt");
  REQUIRE(ginr_model_save(model, path.c_str()) == GINR_OK);
  ginr_model* loaded = nullptr;
  REQUIRE(ginr_model_load(path.c_str(), &loaded) == GINR_OK);

  ginr_image* a = nullptr;
  ginr_image* b = nullptr;
  REQUIRE(ginr_model_sample(loaded, 9, 12, 12, &a) == GINR_OK);
  REQUIRE(ginr_model_sample(loaded, 9, 12, 12, &b) == GINR_OK);
  std::vector<double> pa(12 * 12 * 3), pb(pa.size());
  REQUIRE(ginr_image_pixels(a, pa.data(), pa.size()) == GINR_OK);
  REQUIRE(ginr_image_pixels(b, pb.data(), pb.size()) == GINR_OK);
  CHECK(pa == pb);

  ginr_model* bad = nullptr;
  CHECK(ginr_model_load("/nope/nothing.ckpt", &bad) == GINR_ERR_IO);
  CHECK(ginr_model_init(2, 1, &bad) == GINR_ERR_INVALID_ARGUMENT);

  ginr_image_free(a);
  ginr_image_free(b);
  ginr_model_free(model);
  ginr_model_free(loaded);
  std::remove(path.c_str());
}

TEST_CASE("tiny training run through the C surface logs finite losses") {
  ginr::Rng rng(50);
  std::vector<ginr::ImageGrid> grids;
  std::vector<ginr_image*> imgs;
  for (int i = 0; i < 8; ++i) {
    grids.push_back(ginr::testsupport::two_blob_image(rng, 8, 8));
    imgs.push_back(to_capi(grids.back()));
  }
  ginr_model* model = nullptr;
  REQUIRE(ginr_model_init(3, 7, &model) == GINR_OK);
  ginr_gasp_config cfg;
  ginr_gasp_config_default(&cfg);
  CHECK(cfg.lr_hyper == 1e-4);
  CHECK(cfg.lr_disc == 4e-4);
  CHECK(cfg.beta1 == 0.5);
  CHECK(cfg.beta2 == 0.999);
  CHECK(cfg.batch == 64);
  cfg.batch = 4;

  struct Log {
    int32_t steps = 0;
    bool finite = true;
  } log;
  auto cb = [](int32_t, double d, double g, double r1, void* user) {
    auto* l = static_cast<Log*>(user);
    l->steps += 1;
    l->finite = l->finite && std::isfinite(d) && std::isfinite(g) && std::isfinite(r1);
  };
  REQUIRE(ginr_model_train(model, imgs.data(), imgs.size(), &cfg, 4, 3, cb, &log) == GINR_OK);
  CHECK(log.steps == 4);
  CHECK(log.finite);

  for (ginr_image* im : imgs) ginr_image_free(im);
  ginr_model_free(model);
}
