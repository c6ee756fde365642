#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/fnns.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "support/synthimages.hpp"

using namespace ginr;

namespace {

DecoderSpec small_spec(uint64_t seed, int64_t hw = 16, int64_t d = 1) {
  DecoderSpec s;
  s.seed = seed;
  s.height = hw;
  s.width = hw;
  s.channels = 3;
  s.bits_per_pixel = d;
  return s;
}

std::vector<uint8_t> random_message(uint64_t seed, size_t n) {
  Rng rng(seed);
  std::vector<uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<uint8_t>(rng.next_u64() & 1);
  return bits;
}

HideConfig quick_cfg(int64_t bpp = 1) {
  HideConfig cfg;
  cfg.bits_per_pixel = bpp;
  cfg.outer_rounds = 30;
  return cfg;
}

}  // namespace

TEST_CASE("build_decoder: seed-determined weights, distinct across seeds") {
  const DecoderSpec s = small_spec(kDefaultSeedPool[0]);
  const DecoderWeights a = build_decoder(s);
  const DecoderWeights b = build_decoder(s);
  CHECK(std::equal(a.k1.values().begin(), a.k1.values().end(), b.k1.values().begin()));
  CHECK(std::equal(a.k4.values().begin(), a.k4.values().end(), b.k4.values().begin()));

  const DecoderWeights c = build_decoder(small_spec(kDefaultSeedPool[1]));
  CHECK(!std::equal(a.k1.values().begin(), a.k1.values().end(), c.k1.values().begin()));

  DecoderSpec bad = s;
  bad.bits_per_pixel = 5;
  CHECK_THROWS_AS(build_decoder(bad), Error);
}

TEST_CASE("decoder output shape is H x W x D") {
  for (int64_t d = 1; d <= 4; ++d) {
    const DecoderSpec s = small_spec(7, 8, d);
    const DecoderWeights w = build_decoder(s);
    Rng rng(3);
    const ImageGrid img = testsupport::random_image(rng, 8, 8, 3);
    NoGradGuard ng;
    const Tensor logits = decoder_logits(w, Tensor::leaf({8, 8, 3}, img.pixels));
    CHECK(logits.shape() == Shape{8, 8, d});
  }
}

TEST_CASE("reveal: deterministic, dimension-checked, ~50% on random pairs") {
  const DecoderSpec s = small_spec(11);
  Rng rng(4);
  const ImageGrid img = testsupport::random_image(rng, 16, 16, 3);
  CHECK(reveal(s, img) == reveal(s, img));

  ImageGrid wrong = testsupport::random_image(rng, 8, 8, 3);
  CHECK_THROWS_AS(reveal(s, wrong), Error);

  // random image vs random message: mean BER near one half over 20 trials
  double total = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ImageGrid im = testsupport::random_image(rng, 16, 16, 3);
    const auto extracted = reveal(small_spec(1000 + static_cast<uint64_t>(trial)), im);
    const auto msg = random_message(77 + static_cast<uint64_t>(trial), extracted.size());
    total += ber(msg, extracted);
  }
  const double mean_ber = total / 20.0;
  CHECK(mean_ber >= 0.45);
  CHECK(mean_ber <= 0.55);
}

TEST_CASE("ber counts differing bits") {
  const std::vector<uint8_t> a{0, 1, 1, 0, 1, 0, 0, 1};
  CHECK(ber(a, a) == 0.0);
  std::vector<uint8_t> inv(a.size());
  for (size_t i = 0; i < a.size(); ++i) inv[i] = a[i] ^ 1;
  CHECK(ber(a, inv) == 1.0);
  auto one_off = a;
  one_off[3] ^= 1;
  CHECK(ber(a, one_off) == doctest::Approx(0.125));
  CHECK_THROWS_AS(ber(a, std::vector<uint8_t>{0, 1}), Error);
}

TEST_CASE("hide reaches zero BER on a small cover and respects the budget") {
  Rng rng(9);
  const ImageGrid cover = quantize_roundtrip(testsupport::two_blob_image(rng, 16, 16));
  const auto message = random_message(31, 16 * 16);
  const HideConfig cfg = quick_cfg();
  const StegoResult r = hide(cover, message, cfg);

  CHECK(r.ber == 0.0);
  CHECK(r.extracted == message);
  CHECK(r.early_stopped);
  CHECK(r.psnr >= cfg.psnr_floor);
  CHECK(!r.psnr_flagged);

  // Eq. 2 feasible set, quantization slack included
  for (size_t i = 0; i < cover.pixels.size(); ++i) {
    CHECK(r.stego.pixels[i] >= 0.0);
    CHECK(r.stego.pixels[i] <= 1.0);
    CHECK(std::abs(r.stego.pixels[i] - cover.pixels[i]) <= cfg.epsilon + 1.0 / 510.0 + 1e-12);
  }

  // reveal from the result equals the reported extraction (write/read safe)
  DecoderSpec spec = small_spec(r.seed_used);
  CHECK(reveal(spec, r.stego) == r.extracted);
}

TEST_CASE("hide is deterministic") {
  Rng rng(10);
  const ImageGrid cover = quantize_roundtrip(testsupport::two_blob_image(rng, 16, 16));
  const auto message = random_message(5, 16 * 16);
  const HideConfig cfg = quick_cfg();
  const StegoResult a = hide(cover, message, cfg);
  const StegoResult b = hide(cover, message, cfg);
  CHECK(a.stego.pixels == b.stego.pixels);
  CHECK(a.seed_used == b.seed_used);
  CHECK(a.outer_rounds_used == b.outer_rounds_used);
}

TEST_CASE("hide with epsilon 0 returns the cover and its baseline BER") {
  Rng rng(12);
  const ImageGrid cover = quantize_roundtrip(testsupport::two_blob_image(rng, 16, 16));
  const auto message = random_message(8, 16 * 16);
  HideConfig cfg = quick_cfg();
  cfg.epsilon = 0.0;
  cfg.seed_pool.fill(kDefaultSeedPool[0]);  // single effective seed
  const StegoResult r = hide(cover, message, cfg);
  CHECK(r.stego.pixels == cover.pixels);
  DecoderSpec spec = small_spec(kDefaultSeedPool[0]);
  CHECK(r.ber == doctest::Approx(ber(message, reveal(spec, cover))));
}

TEST_CASE("hide validates message length and bit values") {
  Rng rng(13);
  const ImageGrid cover = testsupport::two_blob_image(rng, 16, 16);
  CHECK_THROWS_AS(hide(cover, random_message(1, 100), quick_cfg()), Error);
  std::vector<uint8_t> bad(16 * 16, 2);
  CHECK_THROWS_AS(hide(cover, bad, quick_cfg()), Error);
}

TEST_CASE("decoder spec text round-trips") {
  const DecoderSpec s = small_spec(0xDEADBEEFCAFEF00DULL, 64, 3);
  const std::string text = format_decoder_spec(s);
  const DecoderSpec back = parse_decoder_spec(text);
  CHECK(back.seed == s.seed);
  CHECK(back.height == s.height);
  CHECK(back.width == s.width);
  CHECK(back.channels == s.channels);
  CHECK(back.bits_per_pixel == s.bits_per_pixel);

  CHECK_THROWS_AS(parse_decoder_spec("not a spec"), Error);
  CHECK_THROWS_AS(parse_decoder_spec("GINR-DECODER v1\nseed=1\n"), Error);
}

TEST_CASE("bce gradient w.r.t. the image passes grad_check at 8x8") {
  const DecoderSpec s = small_spec(kDefaultSeedPool[2], 8);
  const DecoderWeights w = build_decoder(s);
  const auto message = random_message(17, 8 * 8);
  std::vector<double> tv(message.begin(), message.end());
  const Tensor targets = Tensor::leaf({8, 8, 1}, std::move(tv));
  Rng rng(14);
  const ImageGrid img = testsupport::random_image(rng, 8, 8, 3);
  const Tensor x0 = Tensor::leaf({8, 8, 3}, img.pixels);
  const double err = grad_check(
      [&](const Tensor& x) { return bce_with_logits(decoder_logits(w, x), targets); }, x0, 1e-5);
  CHECK(err < 1e-4);
}
