#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "image.hpp"
#include "tensor.hpp"

namespace ginr {

// Everything both parties need to rebuild the extractor bit-exactly: the
// weights themselves are never exchanged.
struct DecoderSpec {
  uint64_t seed = 0;
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 3;
  int64_t bits_per_pixel = 1;  // D in 1..4
};

void validate_decoder_spec(const DecoderSpec& spec);

// tiny text descriptor exchanged instead of the network itself
std::string format_decoder_spec(const DecoderSpec& spec);
DecoderSpec parse_decoder_spec(const std::string& text);

// 4-layer conv net: C->128 -> 128->128 -> 128->128 -> 128->D, 3x3 kernels,
// stride 1, same padding; each hidden conv is followed by per-image channel
// standardization then ReLU, and the output layer emits raw logits.
struct DecoderWeights {
  Tensor k1, b1, k2, b2, k3, b3, k4, b4;
};

// He-style init drawn from Rng(spec.seed); deterministic across processes.
DecoderWeights build_decoder(const DecoderSpec& spec);

// logits [H x W x D] for an [H x W x C] image tensor
Tensor decoder_logits(const DecoderWeights& w, const Tensor& image);

// threshold logits at zero on the image exactly as stored (8-bit quantized)
std::vector<uint8_t> reveal(const DecoderSpec& spec, const ImageGrid& image);

double ber(std::span<const uint8_t> a, std::span<const uint8_t> b);

inline constexpr std::array<uint64_t, 10> kDefaultSeedPool = {
    0x9C35F8B61E42D701ULL, 0x51B6E2A9D0C47F13ULL, 0x2E8A1C5F9B36D7E5ULL, 0x7D40B92C615EA803ULL,
    0xC1593E7A82D6F04BULL, 0x36F7A0D14B89C2E7ULL, 0x88213C56E9F4A7D9ULL, 0x4AD5F1683C07B92FULL,
    0xE3B08D247A5C61F1ULL, 0x1F6C49E5D2803B57ULL};

struct HideConfig {
  double epsilon = 0.3;
  int64_t outer_rounds = 100;      // n
  int64_t inner_iterations = 10;   // k
  double step_size = 0.1;          // alpha
  double psnr_floor = 20.0;
  int64_t bits_per_pixel = 1;      // D
  std::array<uint64_t, 10> seed_pool = kDefaultSeedPool;
  // Stop after this many outer rounds without any best-loss/BER improvement
  // (0 disables). A round that leaves the iterate bit-identical always stops:
  // every later round would repeat it exactly.
  int64_t stall_rounds = 8;
};

struct StegoResult {
  ImageGrid stego;                  // 8-bit quantized
  std::vector<uint8_t> extracted;   // M' read back from the quantized image
  double ber = 1.0;
  double psnr = 0.0;
  double ssim = 0.0;
  uint64_t seed_used = 0;
  int64_t outer_rounds_used = 0;
  bool early_stopped = false;
  bool psnr_flagged = false;  // every pool seed landed below the floor
};

// Optimize the image itself: up to n outer rounds of k projected L-BFGS
// iterations on BCE(M, F(x)) inside {|x - cover|_inf <= eps} * [0,1],
// stopping early once the quantized extraction is exact; reseeds from the
// pool while PSNR stays under the floor. Deterministic.
StegoResult hide(const ImageGrid& cover, std::span<const uint8_t> message, const HideConfig& cfg);

}  // namespace ginr
