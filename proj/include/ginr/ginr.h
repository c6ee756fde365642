/* ginr — generative implicit-neural-representation steganography.
 *
 * C API over the shared library. All objects are opaque handles released
 * with their *_free function; every fallible call returns a ginr_status and
 * leaves a human-readable detail in ginr_last_error() (thread-local).
 * Given explicit seeds, every operation here is deterministic.
 */
#ifndef GINR_GINR_H
#define GINR_GINR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(GINR_BUILD_SHARED)
#define GINR_API __declspec(dllexport)
#else
#define GINR_API __declspec(dllimport)
#endif
#else
#define GINR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ginr_status {
  GINR_OK = 0,
  GINR_ERR_INVALID_ARGUMENT = -1,
  GINR_ERR_SHAPE_MISMATCH = -2,
  GINR_ERR_IO = -3,
  GINR_ERR_FORMAT = -4,
  GINR_ERR_CRC = -5,
  GINR_ERR_CAPACITY = -6,
  GINR_ERR_NUMERIC = -7,
  GINR_ERR_CHECKSUM = -8,
  GINR_ERR_UNSUPPORTED = -9,
} ginr_status;

GINR_API const char* ginr_status_name(ginr_status status);
/* detail message for the most recent failure on this thread */
GINR_API const char* ginr_last_error(void);
GINR_API const char* ginr_version_string(void);

/* ---- images ------------------------------------------------------------ */

typedef struct ginr_image ginr_image;

/* pixels are row-major H*W*C doubles in [0,1]; NULL fills with 0.5 */
GINR_API ginr_status ginr_image_create(int32_t height, int32_t width, int32_t channels,
                                       const double* pixels, ginr_image** out);
/* PNG (8-bit gray/RGB) or binary PGM/PPM, sniffed from the file content */
GINR_API ginr_status ginr_image_read(const char* path, ginr_image** out);
/* container picked from the extension: .pgm/.ppm raw, anything else PNG */
GINR_API ginr_status ginr_image_write(const ginr_image* img, const char* path);
GINR_API int32_t ginr_image_height(const ginr_image* img);
GINR_API int32_t ginr_image_width(const ginr_image* img);
GINR_API int32_t ginr_image_channels(const ginr_image* img);
GINR_API ginr_status ginr_image_pixels(const ginr_image* img, double* buffer, size_t buffer_len);
GINR_API void ginr_image_free(ginr_image* img);

/* ---- quality metrics ----------------------------------------------------- */

GINR_API ginr_status ginr_mse(const ginr_image* a, const ginr_image* b, double* out);
/* unit dynamic range; +inf when the images are identical */
GINR_API ginr_status ginr_psnr(const ginr_image* a, const ginr_image* b, double* out);
/* mean local SSIM, 11x11 Gaussian window; needs height, width >= 11 */
GINR_API ginr_status ginr_ssim(const ginr_image* a, const ginr_image* b, double* out);

/* ---- cover generator (hypernetwork-defined function distribution) -------- */

typedef struct ginr_model ginr_model;

GINR_API ginr_status ginr_model_init(int32_t channels, uint64_t seed, ginr_model** out);
GINR_API ginr_status ginr_model_load(const char* path, ginr_model** out);
GINR_API ginr_status ginr_model_save(const ginr_model* model, const char* path);
GINR_API void ginr_model_free(ginr_model* model);

typedef struct ginr_gasp_config {
  double r1_coeff;   /* gradient penalty weight on real clouds */
  double lr_hyper;   /* hypernetwork Adam rate */
  double lr_disc;    /* discriminator Adam rate */
  double beta1, beta2;
  int32_t batch;
  int32_t subset_points; /* 0 = train on the full coordinate grid */
} ginr_gasp_config;

GINR_API void ginr_gasp_config_default(ginr_gasp_config* cfg);

typedef void (*ginr_train_callback)(int32_t step, double d_loss, double g_loss, double r1,
                                    void* user);

/* Adversarial training on same-sized images. The callback runs after every
 * step (it may call ginr_model_save). Deterministic for a fixed seed. */
GINR_API ginr_status ginr_model_train(ginr_model* model, const ginr_image* const* images,
                                      size_t image_count, const ginr_gasp_config* cfg,
                                      int32_t steps, uint64_t seed, ginr_train_callback callback,
                                      void* user);

/* Sample a cover: z ~ N(0,I) from the seed, then render the generated
 * function at any resolution, no matter what the model trained on. */
GINR_API ginr_status ginr_model_sample(const ginr_model* model, uint64_t seed, int32_t height,
                                       int32_t width, ginr_image** out);

/* ---- fixed-network steganography ----------------------------------------- */

/* Both parties rebuild the extractor from this alone. */
typedef struct ginr_decoder_spec {
  uint64_t seed;
  int32_t height, width, channels;
  int32_t bits_per_pixel; /* 1..4 */
} ginr_decoder_spec;

GINR_API ginr_status ginr_decoder_spec_format(const ginr_decoder_spec* spec, char* buffer,
                                              size_t buffer_len);
GINR_API ginr_status ginr_decoder_spec_parse(const char* text, ginr_decoder_spec* out);

typedef struct ginr_hide_config {
  double epsilon;          /* L-inf perturbation budget */
  int32_t outer_rounds;    /* n */
  int32_t inner_iterations;/* k (L-BFGS iterations per round) */
  double step_size;        /* alpha */
  double psnr_floor;       /* reseed when quality lands below this */
  int32_t bits_per_pixel;  /* D */
  uint64_t seed_pool[10];  /* extractor seeds tried in order */
  int32_t stall_rounds;    /* stop after this many non-improving rounds; 0 = off */
} ginr_hide_config;

GINR_API void ginr_hide_config_default(ginr_hide_config* cfg);

typedef struct ginr_stego ginr_stego;

/* bits: one byte per bit (0/1), length height*width*bits_per_pixel */
GINR_API ginr_status ginr_hide(const ginr_image* cover, const uint8_t* bits, size_t bit_count,
                               const ginr_hide_config* cfg, ginr_stego** out);

GINR_API const ginr_image* ginr_stego_image(const ginr_stego* s); /* 8-bit quantized */
GINR_API double ginr_stego_ber(const ginr_stego* s);
GINR_API double ginr_stego_psnr(const ginr_stego* s);
GINR_API double ginr_stego_ssim(const ginr_stego* s);
GINR_API uint64_t ginr_stego_seed(const ginr_stego* s);
GINR_API int32_t ginr_stego_rounds(const ginr_stego* s);
GINR_API int32_t ginr_stego_early_stopped(const ginr_stego* s);
GINR_API int32_t ginr_stego_psnr_flagged(const ginr_stego* s);
GINR_API ginr_status ginr_stego_bits(const ginr_stego* s, uint8_t* buffer, size_t bit_count);
GINR_API void ginr_stego_free(ginr_stego* s);

GINR_API ginr_status ginr_reveal(const ginr_decoder_spec* spec, const ginr_image* stego,
                                 uint8_t* bits, size_t bit_count);

GINR_API ginr_status ginr_ber(const uint8_t* a, const uint8_t* b, size_t bit_count, double* out);

/* ---- payload framing ------------------------------------------------------ */

/* u32 length + payload + CRC32, padded with seeded random bits to capacity */
GINR_API ginr_status ginr_payload_bits_needed(size_t payload_len, size_t* out_bits);
GINR_API ginr_status ginr_payload_encode(const uint8_t* payload, size_t payload_len,
                                         uint64_t pad_seed, uint8_t* bits, size_t capacity_bits);
/* checksum_ok reports frame integrity; the bytes are written either way */
GINR_API ginr_status ginr_payload_decode(const uint8_t* bits, size_t bit_count, uint8_t* buffer,
                                         size_t buffer_len, size_t* out_len, int32_t* checksum_ok);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GINR_GINR_H */
