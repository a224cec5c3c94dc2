#pragma once

#include "sdlf/detail/fft_kernel.hpp"
#include "sdlf/ops.hpp"

// Complex fields are 2-channel real tensors [2,H,W] (channel 0 = real part,
// channel 1 = imaginary part). There is no separate complex scalar type, so
// differentiation stays uniform; complex multiply/conjugate are the helpers
// below.

namespace sdlf {

namespace detail {

template <typename T>
void run_fft2c(const Tensor<T> &x, bool inverse, std::vector<T> &out) {
  const int H = x.dim(1), W = x.dim(2);
  const std::size_t L = static_cast<std::size_t>(H) * W;
  std::vector<double> re(L), im(L), ore(L), oim(L);
  const T *p = x.data().data();
  for (std::size_t i = 0; i < L; ++i) {
    re[i] = static_cast<double>(p[i]);
    im[i] = static_cast<double>(p[L + i]);
  }
  fft2_centered(H, W, re.data(), im.data(), ore.data(), oim.data(), inverse);
  out.resize(2 * L);
  for (std::size_t i = 0; i < L; ++i) {
    out[i] = static_cast<T>(ore[i]);
    out[L + i] = static_cast<T>(oim[i]);
  }
}

template <typename T>
void run_fft2c_raw(int H, int W, const T *in, bool inverse, T *out) {
  const std::size_t L = static_cast<std::size_t>(H) * W;
  std::vector<double> re(L), im(L), ore(L), oim(L);
  for (std::size_t i = 0; i < L; ++i) {
    re[i] = static_cast<double>(in[i]);
    im[i] = static_cast<double>(in[L + i]);
  }
  fft2_centered(H, W, re.data(), im.data(), ore.data(), oim.data(), inverse);
  for (std::size_t i = 0; i < L; ++i) {
    out[i] = static_cast<T>(ore[i]);
    out[L + i] = static_cast<T>(oim[i]);
  }
}

template <typename T>
void check_complex_field(const char *op, const Tensor<T> &x) {
  if (x.ndim() != 3 || x.dim(0) != 2)
    throw ShapeError(std::string(op) + ": expected [2,H,W], got " + shape_str(x.shape()));
}

} // namespace detail

/// Centered orthonormal 2-D Fourier transform of a complex field. The map is
/// unitary, so its gradient is the inverse transform.
template <typename T> Tensor<T> fft2c(const Tensor<T> &x) {
  detail::check_complex_field("fft2c", x);
  const int H = x.dim(1), W = x.dim(2);
  std::vector<T> out;
  detail::run_fft2c(x, false, out);
  return detail::make_op<T>(
      "fft2c", x.shape(), std::move(out), {x}, [H, W](detail::Node<T> &n) {
        std::vector<T> gin(n.grad.size());
        detail::run_fft2c_raw(H, W, n.grad.data(), true, gin.data());
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

/// Inverse of fft2c (also its adjoint).
template <typename T> Tensor<T> ifft2c(const Tensor<T> &x) {
  detail::check_complex_field("ifft2c", x);
  const int H = x.dim(1), W = x.dim(2);
  std::vector<T> out;
  detail::run_fft2c(x, true, out);
  return detail::make_op<T>(
      "ifft2c", x.shape(), std::move(out), {x}, [H, W](detail::Node<T> &n) {
        std::vector<T> gin(n.grad.size());
        detail::run_fft2c_raw(H, W, n.grad.data(), false, gin.data());
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

/// Pointwise complex product of two [2,H,W] fields.
template <typename T> Tensor<T> cmul(const Tensor<T> &a, const Tensor<T> &b) {
  detail::check_complex_field("cmul", a);
  detail::check_same_shape("cmul", a, b);
  const std::size_t L = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  std::vector<T> out(2 * L);
  const T *pa = a.data().data();
  const T *pb = b.data().data();
  for (std::size_t i = 0; i < L; ++i) {
    out[i] = pa[i] * pb[i] - pa[L + i] * pb[L + i];
    out[L + i] = pa[i] * pb[L + i] + pa[L + i] * pb[i];
  }
  return detail::make_op<T>(
      "cmul", a.shape(), std::move(out), {a, b}, [L](detail::Node<T> &n) {
        const T *ga = n.grad.data();
        std::vector<T> tmp(2 * L);
        for (int side = 0; side < 2; ++side) {
          if (!n.parents[static_cast<std::size_t>(side)]->requires_grad)
            continue;
          const T *other = n.parents[static_cast<std::size_t>(1 - side)]->value.data();
          // d(a*b)/da contracted with the output grad = grad * conj(b)
          for (std::size_t i = 0; i < L; ++i) {
            tmp[i] = ga[i] * other[i] + ga[L + i] * other[L + i];
            tmp[L + i] = -ga[i] * other[L + i] + ga[L + i] * other[i];
          }
          n.parents[static_cast<std::size_t>(side)]->accumulate(
              tmp.data(), static_cast<std::int64_t>(tmp.size()));
        }
      });
}

/// Complex conjugate of a [2,H,W] field.
template <typename T> Tensor<T> cconj(const Tensor<T> &a) {
  detail::check_complex_field("cconj", a);
  const std::size_t L = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  std::vector<T> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < L; ++i)
    out[L + i] = -out[L + i];
  return detail::make_op<T>(
      "cconj", a.shape(), std::move(out), {a}, [L](detail::Node<T> &n) {
        std::vector<T> gin(n.grad.begin(), n.grad.end());
        for (std::size_t i = 0; i < L; ++i)
          gin[L + i] = -gin[L + i];
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

} // namespace sdlf
