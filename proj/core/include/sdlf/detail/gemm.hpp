#pragma once

namespace sdlf::detail {

// C[m,n] (+)= op(A) * op(B), row-major, op = optional transpose.
// A is [m,k] (or [k,m] when trans_a), B is [k,n] (or [n,k] when trans_b).
// accumulate=false overwrites C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const float *a,
          const float *b, float *c, bool accumulate);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double *a,
          const double *b, double *c, bool accumulate);

} // namespace sdlf::detail
