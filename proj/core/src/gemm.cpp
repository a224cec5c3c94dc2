#include "sdlf/detail/gemm.hpp"

#include <Eigen/Core>

namespace sdlf::detail {

namespace {

template <typename T>
void gemm_impl(bool trans_a, bool trans_b, int m, int n, int k, const T *a,
               const T *b, T *c, bool accumulate) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<Mat>;
  using Map = Eigen::Map<const Mat>;
  CMap C(c, m, n);
  Map A(a, trans_a ? k : m, trans_a ? m : k);
  Map B(b, trans_b ? n : k, trans_b ? k : n);
  if (!trans_a && !trans_b) {
    if (accumulate)
      C.noalias() += A * B;
    else
      C.noalias() = A * B;
  } else if (trans_a && !trans_b) {
    if (accumulate)
      C.noalias() += A.transpose() * B;
    else
      C.noalias() = A.transpose() * B;
  } else if (!trans_a && trans_b) {
    if (accumulate)
      C.noalias() += A * B.transpose();
    else
      C.noalias() = A * B.transpose();
  } else {
    if (accumulate)
      C.noalias() += A.transpose() * B.transpose();
    else
      C.noalias() = A.transpose() * B.transpose();
  }
}

} // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const float *a,
          const float *b, float *c, bool accumulate) {
  gemm_impl(trans_a, trans_b, m, n, k, a, b, c, accumulate);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double *a,
          const double *b, double *c, bool accumulate) {
  gemm_impl(trans_a, trans_b, m, n, k, a, b, c, accumulate);
}

} // namespace sdlf::detail
