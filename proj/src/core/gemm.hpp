#pragma once

#include <cstdint>

namespace ginr {

// C[m x n] = alpha * op(A) * op(B) + beta * C, all row-major with tight
// leading dimensions. `a` holds the matrix as stored (k x m when trans_a).
void dgemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
           double alpha, const double* a, const double* b, double beta, double* c);

}  // namespace ginr
