#include "gemm.hpp"

#include <mutex>

#ifdef GINR_HAVE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);  // present when linking OpenBLAS
#endif

namespace ginr {

#ifdef GINR_HAVE_CBLAS

void dgemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
           double alpha, const double* a, const double* b, double beta, double* c) {
  // Single BLAS thread: fixed reduction order, reproducible results.
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
  const int lda = static_cast<int>(trans_a ? m : k);
  const int ldb = static_cast<int>(trans_b ? k : n);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a, lda, b, ldb, beta, c,
              static_cast<int>(n));
}

#else

// Fallback: blocked triple loop, fixed accumulation order.
void dgemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
           double alpha, const double* a, const double* b, double beta, double* c) {
  auto at = [&](int64_t i, int64_t j) { return trans_a ? a[j * m + i] : a[i * k + j]; };
  auto bt = [&](int64_t i, int64_t j) { return trans_b ? b[j * k + i] : b[i * n + j]; };
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) c[i * n + j] = beta == 0.0 ? 0.0 : c[i * n + j] * beta;
  constexpr int64_t kb = 64;
  for (int64_t p0 = 0; p0 < k; p0 += kb) {
    const int64_t p1 = p0 + kb < k ? p0 + kb : k;
    for (int64_t i = 0; i < m; ++i) {
      for (int64_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int64_t p = p0; p < p1; ++p) acc += at(i, p) * bt(p, j);
        c[i * n + j] += alpha * acc;
      }
    }
  }
}

#endif

}  // namespace ginr
