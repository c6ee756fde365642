// ginr command line: cover generation, hiding, revealing, metrics, benchmarks.
// Talks to the library exclusively through the public C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include "ginr/ginr.h"

namespace {

using json = nlohmann::json;

constexpr int kExitError = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitChecksum = 3;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

[[noreturn]] void die(ginr_status st, const std::string& what) {
  std::cerr << "error: " << what << ": " << ginr_status_name(st) << " (" << ginr_last_error()
            << ")\n";
  std::exit(st == GINR_ERR_CAPACITY ? kExitCapacity : kExitError);
}

void check(ginr_status st, const std::string& what) {
  if (st != GINR_OK) die(st, what);
}

struct ImageHandle {
  ginr_image* ptr = nullptr;
  ~ImageHandle() { ginr_image_free(ptr); }
};

struct ModelHandle {
  ginr_model* ptr = nullptr;
  ~ModelHandle() { ginr_model_free(ptr); }
};

struct StegoHandle {
  ginr_stego* ptr = nullptr;
  ~StegoHandle() { ginr_stego_free(ptr); }
};

bool parse_size(const std::string& text, int32_t& h, int32_t& w) {
  const size_t x = text.find_first_of("xX");
  if (x == std::string::npos) return false;
  try {
    h = std::stoi(text.substr(0, x));
    w = std::stoi(text.substr(x + 1));
  } catch (const std::exception&) {
    return false;
  }
  return h > 0 && w > 0;
}

std::vector<uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(GINR_ERR_IO, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(GINR_ERR_IO, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) die(GINR_ERR_IO, "write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) die(GINR_ERR_IO, "cannot create " + path);
  out << text;
}

std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") files.push_back(entry.path().string());
  }
  if (ec) die(GINR_ERR_IO, "cannot list " + dir);
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<uint8_t> random_bits(uint64_t seed, size_t count) {
  // splitmix64, same scheme the library uses for its own streams
  std::vector<uint8_t> bits(count);
  uint64_t state = seed;
  for (size_t i = 0; i < count; ++i) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    bits[i] = static_cast<uint8_t>((z ^ (z >> 31)) & 1);
  }
  return bits;
}

std::vector<uint8_t> pack_bits(const std::vector<uint8_t>& bits) {
  std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] |= static_cast<uint8_t>(0x80 >> (i % 8));
  return bytes;
}

// ---- subcommand payload structs ----

struct TrainArgs {
  std::string data_dir, out_ckpt, log_csv;
  int32_t steps = 2000;
  uint64_t seed = 1;
  double r1 = 10.0;
  int32_t batch = 64;
  int32_t channels = 3;
  int32_t ckpt_every = 500;
};

struct TrainLogSink {
  std::ofstream csv;
  ginr_model* model = nullptr;
  std::string ckpt_path;
  int32_t ckpt_every = 0;
};

int cmd_train_gasp(const TrainArgs& a) {
  const auto files = list_images(a.data_dir);
  if (files.empty()) die(GINR_ERR_INVALID_ARGUMENT, "no PNG/PGM/PPM images in " + a.data_dir);
  std::vector<ImageHandle> images(files.size());
  std::vector<const ginr_image*> ptrs(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    check(ginr_image_read(files[i].c_str(), &images[i].ptr), "reading " + files[i]);
    ptrs[i] = images[i].ptr;
  }

  ModelHandle model;
  check(ginr_model_init(a.channels, a.seed, &model.ptr), "initializing model");

  ginr_gasp_config cfg;
  ginr_gasp_config_default(&cfg);
  cfg.r1_coeff = a.r1;
  cfg.batch = a.batch;

  TrainLogSink sink;
  sink.csv.open(a.log_csv, std::ios::trunc);
  if (!sink.csv) die(GINR_ERR_IO, "cannot create " + a.log_csv);
  sink.csv << "step,d_loss,g_loss,r1\n";
  sink.model = model.ptr;
  sink.ckpt_path = a.out_ckpt;
  sink.ckpt_every = a.ckpt_every;

  auto callback = [](int32_t step, double d_loss, double g_loss, double r1, void* user) {
    auto* s = static_cast<TrainLogSink*>(user);
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", step, d_loss, g_loss, r1);
    s->csv << line;
    if (s->ckpt_every > 0 && (step + 1) % s->ckpt_every == 0)
      check(ginr_model_save(s->model, s->ckpt_path.c_str()), "periodic checkpoint");
  };

  check(ginr_model_train(model.ptr, ptrs.data(), ptrs.size(), &cfg, a.steps, a.seed, callback,
                         &sink),
        "training");
  check(ginr_model_save(model.ptr, a.out_ckpt.c_str()), "saving checkpoint");
  std::cout << "trained " << a.steps << " steps on " << files.size() << " images -> " << a.out_ckpt
            << "\n";
  return 0;
}

struct SampleArgs {
  std::string ckpt, out_png, size_text = "64x64";
  uint64_t seed = 1;
};

int cmd_sample(const SampleArgs& a) {
  int32_t h = 0, w = 0;
  if (!parse_size(a.size_text, h, w)) die(GINR_ERR_INVALID_ARGUMENT, "malformed --size " + a.size_text);
  ModelHandle model;
  check(ginr_model_load(a.ckpt.c_str(), &model.ptr), "loading checkpoint");
  ImageHandle img;
  check(ginr_model_sample(model.ptr, a.seed, h, w, &img.ptr), "sampling");
  check(ginr_image_write(img.ptr, a.out_png.c_str()), "writing " + a.out_png);
  std::cout << "sampled " << h << "x" << w << " cover -> " << a.out_png << "\n";
  return 0;
}

struct HideArgs {
  std::string cover, payload, out_png, report_json, seed_pool_file, spec_out, bits_out;
  bool random_bits = false;
  int32_t bpp = 1;
  uint64_t seed = 1;
  double epsilon = 0.3;
  int32_t rounds = 100;
  int32_t iters = 10;
  double alpha = 0.1;
  double psnr_floor = 20.0;
  int32_t stall_rounds = 8;
};

std::vector<uint64_t> load_seed_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) die(GINR_ERR_IO, "cannot open seed pool " + path);
  std::vector<uint64_t> seeds;
  std::string tok;
  while (in >> tok) seeds.push_back(std::stoull(tok, nullptr, 0));
  if (seeds.size() != 10) die(GINR_ERR_INVALID_ARGUMENT, "seed pool must hold exactly 10 seeds");
  return seeds;
}

int cmd_hide(const HideArgs& a) {
  ImageHandle cover;
  check(ginr_image_read(a.cover.c_str(), &cover.ptr), "reading cover");
  const int32_t h = ginr_image_height(cover.ptr), w = ginr_image_width(cover.ptr);
  const size_t capacity = static_cast<size_t>(h) * static_cast<size_t>(w) * static_cast<size_t>(a.bpp);

  std::vector<uint8_t> bits;
  if (a.random_bits) {
    bits = random_bits(a.seed, capacity);
  } else {
    const std::vector<uint8_t> payload = read_binary(a.payload);
    size_t needed = 0;
    check(ginr_payload_bits_needed(payload.size(), &needed), "sizing payload");
    if (needed > capacity) {
      std::cerr << "error: payload needs " << needed << " bits but the cover holds " << capacity
                << " at " << a.bpp << " bpp\n";
      return kExitCapacity;
    }
    bits.resize(capacity);
    check(ginr_payload_encode(payload.data(), payload.size(), a.seed, bits.data(), capacity),
          "framing payload");
  }

  ginr_hide_config cfg;
  ginr_hide_config_default(&cfg);
  cfg.epsilon = a.epsilon;
  cfg.outer_rounds = a.rounds;
  cfg.inner_iterations = a.iters;
  cfg.step_size = a.alpha;
  cfg.psnr_floor = a.psnr_floor;
  cfg.bits_per_pixel = a.bpp;
  cfg.stall_rounds = a.stall_rounds;
  if (!a.seed_pool_file.empty()) {
    const auto seeds = load_seed_pool(a.seed_pool_file);
    for (size_t i = 0; i < 10; ++i) cfg.seed_pool[i] = seeds[i];
  }

  const double t0 = now_seconds();
  StegoHandle stego;
  check(ginr_hide(cover.ptr, bits.data(), bits.size(), &cfg, &stego.ptr), "hiding");
  const double t_hide = now_seconds() - t0;

  check(ginr_image_write(ginr_stego_image(stego.ptr), a.out_png.c_str()), "writing " + a.out_png);

  ginr_decoder_spec spec;
  spec.seed = ginr_stego_seed(stego.ptr);
  spec.height = h;
  spec.width = w;
  spec.channels = ginr_image_channels(cover.ptr);
  spec.bits_per_pixel = a.bpp;
  if (!a.spec_out.empty()) {
    char buf[256];
    check(ginr_decoder_spec_format(&spec, buf, sizeof(buf)), "formatting decoder spec");
    write_text(a.spec_out, buf);
  }
  if (!a.bits_out.empty()) write_binary(a.bits_out, pack_bits(bits));

  json report;
  report["ber"] = ginr_stego_ber(stego.ptr);
  report["psnr"] = ginr_stego_psnr(stego.ptr);
  report["ssim"] = ginr_stego_ssim(stego.ptr);
  report["seed_used"] = ginr_stego_seed(stego.ptr);
  report["rounds"] = ginr_stego_rounds(stego.ptr);
  report["early_stopped"] = ginr_stego_early_stopped(stego.ptr) != 0;
  report["psnr_flagged"] = ginr_stego_psnr_flagged(stego.ptr) != 0;
  report["t_gen_s"] = 0.0;  // cover came from disk
  report["t_hide_s"] = t_hide;
  if (!a.report_json.empty()) write_text(a.report_json, report.dump(2) + "\n");
  std::cout << report.dump() << "\n";
  return 0;
}

struct RevealArgs {
  std::string stego, spec_file, out_file;
};

int cmd_reveal(const RevealArgs& a) {
  ImageHandle stego;
  check(ginr_image_read(a.stego.c_str(), &stego.ptr), "reading stego image");
  const std::vector<uint8_t> spec_bytes = read_binary(a.spec_file);
  ginr_decoder_spec spec;
  check(ginr_decoder_spec_parse(std::string(spec_bytes.begin(), spec_bytes.end()).c_str(), &spec),
        "parsing decoder spec");
  const size_t nbits = static_cast<size_t>(spec.height) * static_cast<size_t>(spec.width) *
                       static_cast<size_t>(spec.bits_per_pixel);
  std::vector<uint8_t> bits(nbits);
  check(ginr_reveal(&spec, stego.ptr, bits.data(), nbits), "revealing");

  std::vector<uint8_t> payload(nbits / 8 + 16);
  size_t out_len = 0;
  int32_t checksum_ok = 0;
  check(ginr_payload_decode(bits.data(), nbits, payload.data(), payload.size(), &out_len,
                            &checksum_ok),
        "unframing payload");
  payload.resize(out_len);
  write_binary(a.out_file, payload);
  if (!checksum_ok) {
    std::cerr << "payload checksum failed; wrote " << out_len << " bytes anyway\n";
    return kExitChecksum;
  }
  std::cout << "recovered " << out_len << " bytes -> " << a.out_file << "\n";
  return 0;
}

struct BenchArgs {
  std::string ckpt, out_csv, bpps_text = "1,2,3,4", size_text = "64x64";
  int32_t trials = 3;
  uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a) {
  int32_t h = 0, w = 0;
  if (!parse_size(a.size_text, h, w)) die(GINR_ERR_INVALID_ARGUMENT, "malformed --size " + a.size_text);
  std::vector<int32_t> bpps;
  {
    std::stringstream ss(a.bpps_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) bpps.push_back(std::stoi(tok));
    if (bpps.empty()) die(GINR_ERR_INVALID_ARGUMENT, "empty --bpps list");
  }
  ModelHandle model;
  check(ginr_model_load(a.ckpt.c_str(), &model.ptr), "loading checkpoint");

  std::ofstream csv(a.out_csv, std::ios::trunc);
  if (!csv) die(GINR_ERR_IO, "cannot create " + a.out_csv);
  csv << "bpp,trial,ber,psnr,ssim,gen_time_s,hide_time_s,seed_used,failure\n";

  {  // warm caches so the first timed sample is not an outlier
    ImageHandle warm;
    check(ginr_model_sample(model.ptr, a.seed, h, w, &warm.ptr), "warmup sample");
  }

  struct Acc {
    double ber = 0, psnr = 0, ssim = 0, t = 0, T = 0;
    int32_t n = 0;
  };
  std::vector<Acc> acc(bpps.size());

  for (int32_t trial = 0; trial < a.trials; ++trial) {
    const uint64_t cover_seed = a.seed + 1000003ULL * static_cast<uint64_t>(trial + 1);
    for (size_t bi = 0; bi < bpps.size(); ++bi) {
      const int32_t bpp = bpps[bi];
      const double tg0 = now_seconds();
      ImageHandle cover;
      const ginr_status gs = ginr_model_sample(model.ptr, cover_seed, h, w, &cover.ptr);
      const double t_gen = now_seconds() - tg0;
      if (gs != GINR_OK) {
        csv << bpp << "," << trial << ",,,,,,," << ginr_status_name(gs) << "\n";
        continue;
      }
      const size_t nbits = static_cast<size_t>(h) * static_cast<size_t>(w) * static_cast<size_t>(bpp);
      const std::vector<uint8_t> bits =
          random_bits(cover_seed ^ (0xB5E3ULL + static_cast<uint64_t>(bpp)), nbits);
      ginr_hide_config cfg;
      ginr_hide_config_default(&cfg);
      cfg.bits_per_pixel = bpp;
      const double th0 = now_seconds();
      StegoHandle stego;
      const ginr_status hs = ginr_hide(cover.ptr, bits.data(), bits.size(), &cfg, &stego.ptr);
      const double t_hide = now_seconds() - th0;
      if (hs != GINR_OK) {
        csv << bpp << "," << trial << ",,,,,,," << ginr_status_name(hs) << "\n";
        continue;
      }
      char line[256];
      std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.4f,%.4f,%.4f,%.4f,%llu,\n", bpp, trial,
                    ginr_stego_ber(stego.ptr), ginr_stego_psnr(stego.ptr),
                    ginr_stego_ssim(stego.ptr), t_gen, t_hide,
                    static_cast<unsigned long long>(ginr_stego_seed(stego.ptr)));
      csv << line;
      Acc& s = acc[bi];
      s.ber += ginr_stego_ber(stego.ptr);
      s.psnr += ginr_stego_psnr(stego.ptr);
      s.ssim += ginr_stego_ssim(stego.ptr);
      s.t += t_gen;
      s.T += t_hide;
      s.n += 1;
    }
  }
  for (size_t bi = 0; bi < bpps.size(); ++bi) {
    const Acc& s = acc[bi];
    if (s.n == 0) {
      csv << bpps[bi] << ",mean,,,,,,,all trials failed\n";
      continue;
    }
    char line[256];
    std::snprintf(line, sizeof(line), "%d,mean,%.6f,%.4f,%.4f,%.4f,%.4f,,\n", bpps[bi],
                  s.ber / s.n, s.psnr / s.n, s.ssim / s.n, s.t / s.n, s.T / s.n);
    csv << line;
  }
  std::cout << "bench -> " << a.out_csv << "\n";
  return 0;
}

struct MetricsArgs {
  std::string a_path, b_path;
};

int cmd_metrics(const MetricsArgs& a) {
  ImageHandle ia, ib;
  check(ginr_image_read(a.a_path.c_str(), &ia.ptr), "reading " + a.a_path);
  check(ginr_image_read(a.b_path.c_str(), &ib.ptr), "reading " + a.b_path);
  double mse_v = 0, psnr_v = 0, ssim_v = 0;
  check(ginr_mse(ia.ptr, ib.ptr, &mse_v), "mse");
  check(ginr_psnr(ia.ptr, ib.ptr, &psnr_v), "psnr");
  check(ginr_ssim(ia.ptr, ib.ptr, &ssim_v), "ssim");
  json out;
  out["mse"] = mse_v;
  out["psnr"] = std::isinf(psnr_v) ? json("inf") : json(psnr_v);
  out["ssim"] = ssim_v;
  std::cout << out.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generative INR steganography"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train-gasp", "train the cover generator adversarially");
  t->add_option("--data", train.data_dir, "directory of same-sized PNG/PGM/PPM images")->required();
  t->add_option("--out", train.out_ckpt, "output checkpoint path")->required();
  t->add_option("--steps", train.steps, "training steps");
  t->add_option("--seed", train.seed, "training seed");
  t->add_option("--l", train.r1, "R1 penalty coefficient");
  t->add_option("--batch", train.batch, "batch size");
  t->add_option("--channels", train.channels, "image channels (1 or 3)");
  t->add_option("--log", train.log_csv, "per-step CSV log (default <out>.log.csv)");
  t->add_option("--ckpt-every", train.ckpt_every, "checkpoint every N steps (0 = final only)");

  SampleArgs sample;
  auto* s = app.add_subcommand("sample", "sample a cover image from a checkpoint");
  s->add_option("--ckpt", sample.ckpt, "checkpoint path")->required();
  s->add_option("--seed", sample.seed, "latent seed");
  s->add_option("--size", sample.size_text, "HxW, any resolution");
  s->add_option("--out", sample.out_png, "output image")->required();

  HideArgs hide;
  auto* hd = app.add_subcommand("hide", "embed a message into a cover image");
  hd->add_option("--cover", hide.cover, "cover image")->required();
  auto* pay = hd->add_option("--payload", hide.payload, "payload file to embed");
  auto* rnd = hd->add_flag("--random-bits", hide.random_bits, "embed seeded random bits instead");
  pay->excludes(rnd);
  hd->add_option("--bpp", hide.bpp, "bits per pixel (1..4)");
  hd->add_option("--seed", hide.seed, "message/padding seed");
  hd->add_option("--seed-pool", hide.seed_pool_file, "file with 10 extractor seeds");
  hd->add_option("--out", hide.out_png, "stego image output")->required();
  hd->add_option("--report", hide.report_json, "JSON report output");
  hd->add_option("--decoder-spec-out", hide.spec_out, "write the decoder spec text here");
  hd->add_option("--bits-out", hide.bits_out, "write the exact message bits (packed)");
  hd->add_option("--epsilon", hide.epsilon, "perturbation budget");
  hd->add_option("--rounds", hide.rounds, "outer optimization rounds");
  hd->add_option("--iters", hide.iters, "L-BFGS iterations per round");
  hd->add_option("--alpha", hide.alpha, "initial line-search step");
  hd->add_option("--psnr-floor", hide.psnr_floor, "reseed below this PSNR");
  hd->add_option("--stall-rounds", hide.stall_rounds, "plateau cutoff (0 = off)");

  RevealArgs reveal;
  auto* r = app.add_subcommand("reveal", "extract a payload from a stego image");
  r->add_option("--stego", reveal.stego, "stego image")->required();
  r->add_option("--decoder-spec", reveal.spec_file, "decoder spec text file")->required();
  r->add_option("--out", reveal.out_file, "recovered payload output")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "benchmark hide across payload rates");
  b->add_option("--ckpt", bench.ckpt, "checkpoint path")->required();
  b->add_option("--trials", bench.trials, "covers per rate");
  b->add_option("--bpps", bench.bpps_text, "comma-separated bpp list");
  b->add_option("--size", bench.size_text, "cover size HxW");
  b->add_option("--seed", bench.seed, "base seed");
  b->add_option("--out", bench.out_csv, "output CSV")->required();

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "PSNR/SSIM/MSE between two images");
  m->add_option("--a", metrics.a_path, "first image")->required();
  m->add_option("--b", metrics.b_path, "second image")->required();

  CLI11_PARSE(app, argc, argv);

  if (t->parsed()) {
    if (train.log_csv.empty()) train.log_csv = train.out_ckpt + ".log.csv";
    return cmd_train_gasp(train);
  }
  if (s->parsed()) return cmd_sample(sample);
  if (hd->parsed()) {
    if (!hide.random_bits && hide.payload.empty()) {
      std::cerr << "error: hide needs --payload or --random-bits\n";
      return kExitError;
    }
    return cmd_hide(hide);
  }
  if (r->parsed()) return cmd_reveal(reveal);
  if (b->parsed()) return cmd_bench(bench);
  if (m->parsed()) return cmd_metrics(metrics);
  return kExitError;
}
