#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "sdlf/tensor.hpp"

// Shared test plumbing: the finite-difference gradient checker and the
// independent brute-force oracles the op tests compare against. Everything
// here is deliberately naive and kept apart from the library's own
// implementation paths.

namespace testutil {

using sdlf::Shape;
using sdlf::Tensor;

/// Central finite differences against the analytic gradient of a scalar
/// function of several tensors. Entries pass when the relative error is
/// below rel_tol or both gradients are tiny. Returns the worst relative
/// error; asserts are the caller's job.
struct GradCheckResult {
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::string worst_input;
};

inline GradCheckResult
grad_check(const std::function<Tensor<double>()> &fn,
           std::vector<Tensor<double>> inputs, double h = 1e-5) {
  for (auto &t : inputs)
    t.zero_grad();
  Tensor<double> loss = fn();
  sdlf::backward(loss);
  GradCheckResult res;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    auto &t = inputs[which];
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (analytic.empty())
      analytic.assign(static_cast<std::size_t>(t.numel()), 0.0);
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double up = fn().item();
      data[i] = keep - h;
      const double dn = fn().item();
      data[i] = keep;
      const double numeric = (up - dn) / (2.0 * h);
      const double a = analytic[i];
      const double denom = std::max(std::abs(a), std::abs(numeric));
      double rel = 0.0;
      if (std::abs(a - numeric) > 1e-8)
        rel = denom > 0 ? std::abs(a - numeric) / denom : std::abs(a - numeric);
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
        res.worst_input = "input " + std::to_string(which) + " entry " + std::to_string(i);
      }
    }
  }
  return res;
}

/// out[n,j] = sum_i x[n,i] w[i,j] + b[j], three explicit loops.
inline std::vector<double> naive_matmul_bias(const std::vector<double> &x, int N, int Din,
                                             const std::vector<double> &w, int Dout,
                                             const std::vector<double> &b) {
  std::vector<double> out(static_cast<std::size_t>(N) * Dout, 0.0);
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < Dout; ++j) {
      double s = b.empty() ? 0.0 : b[static_cast<std::size_t>(j)];
      for (int i = 0; i < Din; ++i)
        s += x[static_cast<std::size_t>(n) * Din + i] * w[static_cast<std::size_t>(i) * Dout + j];
      out[static_cast<std::size_t>(n) * Dout + j] = s;
    }
  return out;
}

/// Direct six-loop grouped convolution (zero padding, cross-correlation).
inline std::vector<double>
naive_conv2d(const std::vector<double> &x, int Cin, int H, int W,
             const std::vector<double> &k, int Cout, int kh, int kw,
             const std::vector<double> &b, int stride, int pad, int groups) {
  const int Ho = (H + 2 * pad - kh) / stride + 1;
  const int Wo = (W + 2 * pad - kw) / stride + 1;
  const int cg = Cin / groups, og = Cout / groups;
  std::vector<double> out(static_cast<std::size_t>(Cout) * Ho * Wo, 0.0);
  for (int o = 0; o < Cout; ++o) {
    const int g = o / og;
    for (int y = 0; y < Ho; ++y)
      for (int xq = 0; xq < Wo; ++xq) {
        double s = b[static_cast<std::size_t>(o)];
        for (int c = 0; c < cg; ++c)
          for (int u = 0; u < kh; ++u)
            for (int v = 0; v < kw; ++v) {
              const int sy = y * stride + u - pad;
              const int sx = xq * stride + v - pad;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W)
                continue;
              s += x[(static_cast<std::size_t>(g * cg + c) * H + sy) * W + sx] *
                   k[((static_cast<std::size_t>(o) * cg + c) * kh + u) * kw + v];
            }
        out[(static_cast<std::size_t>(o) * Ho + y) * Wo + xq] = s;
      }
  }
  return out;
}

/// Direct O(N^2) centered orthonormal 2-D DFT, independent of the library's
/// radix-2 path.
inline void naive_dft2c(int H, int W, const std::vector<std::complex<double>> &in,
                        std::vector<std::complex<double>> &out, bool inverse) {
  const double pi = 3.14159265358979323846;
  const double sgn = inverse ? 1.0 : -1.0;
  out.assign(static_cast<std::size_t>(H) * W, {0.0, 0.0});
  const double scale = 1.0 / std::sqrt(static_cast<double>(H) * W);
  // centered: both image and frequency indices run around floor(n/2)
  for (int ky = 0; ky < H; ++ky)
    for (int kx = 0; kx < W; ++kx) {
      std::complex<double> s(0.0, 0.0);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double phase = sgn * 2.0 * pi *
                               ((ky - H / 2) * static_cast<double>(y - H / 2) / H +
                                (kx - W / 2) * static_cast<double>(x - W / 2) / W);
          s += in[static_cast<std::size_t>(y) * W + x] *
               std::complex<double>(std::cos(phase), std::sin(phase));
        }
      out[static_cast<std::size_t>(ky) * W + kx] = s * scale;
    }
}

/// Brute-force single-window multi-head attention with relative bias:
/// softmax(q k^T / sqrt(dr) + B) v per head, heads concatenated. All inputs
/// are plain row-major vectors.
inline std::vector<double>
naive_window_attention(const std::vector<double> &q, const std::vector<double> &k,
                       const std::vector<double> &v, int L, int C, int heads,
                       const std::vector<double> &bias_table,
                       const std::vector<int> &bias_idx) {
  const int dr = C / heads;
  std::vector<double> out(static_cast<std::size_t>(L) * C, 0.0);
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < L; ++i) {
      std::vector<double> logits(static_cast<std::size_t>(L));
      for (int j = 0; j < L; ++j) {
        double s = 0.0;
        for (int d = 0; d < dr; ++d)
          s += q[static_cast<std::size_t>(i) * C + h * dr + d] *
               k[static_cast<std::size_t>(j) * C + h * dr + d];
        s /= std::sqrt(static_cast<double>(dr));
        if (!bias_table.empty())
          s += bias_table[static_cast<std::size_t>(bias_idx[static_cast<std::size_t>(i) * L + j]) *
                              heads +
                          h];
        logits[static_cast<std::size_t>(j)] = s;
      }
      double mx = logits[0];
      for (double z : logits)
        mx = std::max(mx, z);
      double den = 0.0;
      for (double &z : logits) {
        z = std::exp(z - mx);
        den += z;
      }
      for (int j = 0; j < L; ++j)
        for (int d = 0; d < dr; ++d)
          out[static_cast<std::size_t>(i) * C + h * dr + d] +=
              logits[static_cast<std::size_t>(j)] / den *
              v[static_cast<std::size_t>(j) * C + h * dr + d];
    }
  }
  return out;
}

inline Tensor<double> rand_tensor(Shape shape, sdlf::Rng &rng, double lo = -1.0,
                                  double hi = 1.0, bool rg = true) {
  return Tensor<double>::uniform(std::move(shape), rng, lo, hi, rg);
}

/// Uniform values bounded away from zero, for kinked ops (relu, |.|).
inline Tensor<double> rand_tensor_away_from_zero(Shape shape, sdlf::Rng &rng,
                                                 double lo = 0.1, double hi = 1.0,
                                                 bool rg = true) {
  Tensor<double> t = Tensor<double>::zeros(std::move(shape), rg);
  for (auto &v : t.mutable_data()) {
    const double mag = rng.uniform(lo, hi);
    v = rng.uniform01() < 0.5 ? -mag : mag;
  }
  return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

} // namespace testutil
