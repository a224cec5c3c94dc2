#pragma once

#include "sdlf/detail/gemm.hpp"
#include "sdlf/ops.hpp"

namespace sdlf {

/// out[n,j] = sum_i x[n,i] w[i,j] + b[j].
template <typename T>
Tensor<T> linear(const Tensor<T> &x, const Tensor<T> &w, const Tensor<T> &b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1)
    throw ShapeError("linear: expected x[N,Din], w[Din,Dout], b[Dout]; got " +
                     shape_str(x.shape()) + ", " + shape_str(w.shape()) + ", " +
                     shape_str(b.shape()));
  const int N = x.dim(0), Din = x.dim(1), Dout = w.dim(1);
  if (w.dim(0) != Din || b.dim(0) != Dout)
    throw ShapeError("linear: inner dimensions disagree, x" + shape_str(x.shape()) +
                     " w" + shape_str(w.shape()) + " b" + shape_str(b.shape()));
  std::vector<T> out(static_cast<std::size_t>(N) * Dout);
  detail::gemm(false, false, N, Dout, Din, x.data().data(), w.data().data(),
               out.data(), false);
  const T *pb = b.data().data();
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < Dout; ++j)
      out[static_cast<std::size_t>(n) * Dout + j] += pb[j];
  return detail::make_op<T>(
      "linear", {N, Dout}, std::move(out), {x, w, b},
      [N, Din, Dout](detail::Node<T> &n) {
        const T *dy = n.grad.data();
        const T *px = n.parents[0]->value.data();
        const T *pw = n.parents[1]->value.data();
        if (n.parents[0]->requires_grad) {
          std::vector<T> dx(static_cast<std::size_t>(N) * Din);
          detail::gemm(false, true, N, Din, Dout, dy, pw, dx.data(), false);
          n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
        }
        if (n.parents[1]->requires_grad) {
          std::vector<T> dw(static_cast<std::size_t>(Din) * Dout);
          detail::gemm(true, false, Din, Dout, N, px, dy, dw.data(), false);
          n.parents[1]->accumulate(dw.data(), static_cast<std::int64_t>(dw.size()));
        }
        if (n.parents[2]->requires_grad) {
          std::vector<T> db(static_cast<std::size_t>(Dout), T(0));
          for (int r = 0; r < N; ++r)
            for (int j = 0; j < Dout; ++j)
              db[static_cast<std::size_t>(j)] += dy[static_cast<std::size_t>(r) * Dout + j];
          n.parents[2]->accumulate(db.data(), Dout);
        }
      });
}

/// Batched matmul: out[b] = op(a[b]) * op(c[b]) with optional transposes.
/// a is [B,n,m] (or [B,m,n] when trans_a), c is [B,m,p] (or [B,p,m]).
template <typename T>
Tensor<T> bmm(const Tensor<T> &a, const Tensor<T> &c, bool trans_a = false,
              bool trans_b = false) {
  if (a.ndim() != 3 || c.ndim() != 3 || a.dim(0) != c.dim(0))
    throw ShapeError("bmm: expected matching [B,*,*] inputs, got " +
                     shape_str(a.shape()) + " and " + shape_str(c.shape()));
  const int B = a.dim(0);
  const int n = trans_a ? a.dim(2) : a.dim(1);
  const int m = trans_a ? a.dim(1) : a.dim(2);
  const int mb = trans_b ? c.dim(2) : c.dim(1);
  const int p = trans_b ? c.dim(1) : c.dim(2);
  if (m != mb)
    throw ShapeError("bmm: contraction dims disagree, " + shape_str(a.shape()) +
                     " vs " + shape_str(c.shape()));
  std::vector<T> out(static_cast<std::size_t>(B) * n * p);
  const std::size_t sa = static_cast<std::size_t>(a.dim(1)) * a.dim(2);
  const std::size_t sc = static_cast<std::size_t>(c.dim(1)) * c.dim(2);
  const std::size_t so = static_cast<std::size_t>(n) * p;
  for (int b = 0; b < B; ++b)
    detail::gemm(trans_a, trans_b, n, p, m, a.data().data() + b * sa,
                 c.data().data() + b * sc, out.data() + b * so, false);
  return detail::make_op<T>(
      "bmm", {B, n, p}, std::move(out), {a, c},
      [B, n, m, p, sa, sc, so, trans_a, trans_b](detail::Node<T> &nd) {
        const T *pa = nd.parents[0]->value.data();
        const T *pc = nd.parents[1]->value.data();
        const T *dy = nd.grad.data();
        if (nd.parents[0]->requires_grad) {
          std::vector<T> da(nd.parents[0]->value.size());
          for (int b = 0; b < B; ++b) {
            const T *dyb = dy + b * so;
            const T *cb = pc + b * sc;
            T *dab = da.data() + b * sa;
            if (!trans_a) // d a_eff = dy * c_eff^T
              detail::gemm(false, !trans_b, n, m, p, dyb, cb, dab, false);
            else // stored transposed: da = c_eff * dy^T
              detail::gemm(trans_b, true, m, n, p, cb, dyb, dab, false);
          }
          nd.parents[0]->accumulate(da.data(), static_cast<std::int64_t>(da.size()));
        }
        if (nd.parents[1]->requires_grad) {
          std::vector<T> dc(nd.parents[1]->value.size());
          for (int b = 0; b < B; ++b) {
            const T *dyb = dy + b * so;
            const T *ab = pa + b * sa;
            T *dcb = dc.data() + b * sc;
            if (!trans_b) // d c_eff = a_eff^T * dy
              detail::gemm(!trans_a, false, m, p, n, ab, dyb, dcb, false);
            else // stored transposed: dc = dy^T * a_eff
              detail::gemm(true, trans_a, p, m, n, dyb, ab, dcb, false);
          }
          nd.parents[1]->accumulate(dc.data(), static_cast<std::int64_t>(dc.size()));
        }
      });
}

namespace detail {

struct ConvDims {
  int B, Cin, H, W, Cout, kh, kw, stride, pad, groups, Ho, Wo;
  bool batched;
};

template <typename T>
ConvDims conv_check(const Tensor<T> &x, const Tensor<T> &k, const Tensor<T> &b,
                    int stride, int pad, int groups) {
  if (x.ndim() != 3 && x.ndim() != 4)
    throw ShapeError("conv2d: expected [C,H,W] or [B,C,H,W], got " + shape_str(x.shape()));
  if (k.ndim() != 4 || b.ndim() != 1)
    throw ShapeError("conv2d: expected k[Cout,Cin/g,kh,kw], b[Cout], got " +
                     shape_str(k.shape()) + ", " + shape_str(b.shape()));
  ConvDims d;
  d.batched = x.ndim() == 4;
  d.B = d.batched ? x.dim(0) : 1;
  d.Cin = x.dim(d.batched ? 1 : 0);
  d.H = x.dim(d.batched ? 2 : 1);
  d.W = x.dim(d.batched ? 3 : 2);
  d.Cout = k.dim(0);
  d.kh = k.dim(2);
  d.kw = k.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.groups = groups;
  if (d.kh % 2 == 0 || d.kw % 2 == 0)
    throw ContractError("conv2d: kernel sides must be odd, got " + shape_str(k.shape()));
  if (groups < 1 || d.Cin % groups != 0 || d.Cout % groups != 0)
    throw ConfigError("conv2d: groups=" + std::to_string(groups) +
                      " must divide channels (Cin=" + std::to_string(d.Cin) +
                      ", Cout=" + std::to_string(d.Cout) + ")");
  if (k.dim(1) != d.Cin / groups)
    throw ShapeError("conv2d: kernel expects Cin/groups=" + std::to_string(k.dim(1)) +
                     ", input has Cin=" + std::to_string(d.Cin) + " with groups=" +
                     std::to_string(groups));
  if (b.dim(0) != d.Cout)
    throw ShapeError("conv2d: bias size " + shape_str(b.shape()) + " vs Cout=" +
                     std::to_string(d.Cout));
  if (stride < 1 || pad < 0 || d.H + 2 * pad < d.kh || d.W + 2 * pad < d.kw)
    throw ShapeError("conv2d: invalid stride/pad for input " + shape_str(x.shape()));
  d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
  return d;
}

// col[(c*kh+u)*kw+v, y*Wo+x] = img[c, y*s+u-pad, x*s+v-pad] (0 outside)
template <typename T>
void im2col(const T *img, const ConvDims &d, int cg, T *col) {
  const int L = d.Ho * d.Wo;
  for (int c = 0; c < cg; ++c)
    for (int u = 0; u < d.kh; ++u)
      for (int v = 0; v < d.kw; ++v) {
        T *row = col + (static_cast<std::size_t>(c) * d.kh * d.kw + u * d.kw + v) * L;
        for (int y = 0; y < d.Ho; ++y) {
          const int sy = y * d.stride + u - d.pad;
          if (sy < 0 || sy >= d.H) {
            for (int xx = 0; xx < d.Wo; ++xx)
              row[y * d.Wo + xx] = T(0);
            continue;
          }
          const T *src = img + (static_cast<std::size_t>(c) * d.H + sy) * d.W;
          for (int xx = 0; xx < d.Wo; ++xx) {
            const int sx = xx * d.stride + v - d.pad;
            row[y * d.Wo + xx] = (sx < 0 || sx >= d.W) ? T(0) : src[sx];
          }
        }
      }
}

template <typename T>
void col2im_accum(const T *col, const ConvDims &d, int cg, T *img) {
  const int L = d.Ho * d.Wo;
  for (int c = 0; c < cg; ++c)
    for (int u = 0; u < d.kh; ++u)
      for (int v = 0; v < d.kw; ++v) {
        const T *row = col + (static_cast<std::size_t>(c) * d.kh * d.kw + u * d.kw + v) * L;
        for (int y = 0; y < d.Ho; ++y) {
          const int sy = y * d.stride + u - d.pad;
          if (sy < 0 || sy >= d.H)
            continue;
          T *dst = img + (static_cast<std::size_t>(c) * d.H + sy) * d.W;
          for (int xx = 0; xx < d.Wo; ++xx) {
            const int sx = xx * d.stride + v - d.pad;
            if (sx >= 0 && sx < d.W)
              dst[sx] += row[y * d.Wo + xx];
          }
        }
      }
}

} // namespace detail

/// Zero-padded cross-correlation. x is [C,H,W] or [B,C,H,W]; kernel sides must
/// be odd; groups=C gives a depth-wise convolution.
template <typename T>
Tensor<T> conv2d(const Tensor<T> &x, const Tensor<T> &k, const Tensor<T> &b,
                 int stride = 1, int pad = 0, int groups = 1) {
  const detail::ConvDims d = detail::conv_check(x, k, b, stride, pad, groups);
  const int cg = d.Cin / d.groups;  // input channels per group
  const int og = d.Cout / d.groups; // output channels per group
  const int L = d.Ho * d.Wo;
  const std::size_t in_img = static_cast<std::size_t>(d.Cin) * d.H * d.W;
  const std::size_t out_img = static_cast<std::size_t>(d.Cout) * L;
  std::vector<T> out(static_cast<std::size_t>(d.B) * out_img);
  std::vector<T> col(static_cast<std::size_t>(cg) * d.kh * d.kw * L);
  const T *px = x.data().data();
  const T *pk = k.data().data();
  const T *pb = b.data().data();
  for (int bi = 0; bi < d.B; ++bi) {
    const T *img = px + bi * in_img;
    T *dst = out.data() + bi * out_img;
    for (int g = 0; g < d.groups; ++g) {
      detail::im2col(img + static_cast<std::size_t>(g) * cg * d.H * d.W, d, cg, col.data());
      detail::gemm(false, false, og, L, cg * d.kh * d.kw,
                   pk + static_cast<std::size_t>(g) * og * cg * d.kh * d.kw, col.data(),
                   dst + static_cast<std::size_t>(g) * og * L, false);
    }
    for (int o = 0; o < d.Cout; ++o) {
      T *row = dst + static_cast<std::size_t>(o) * L;
      for (int i = 0; i < L; ++i)
        row[i] += pb[o];
    }
  }
  Shape out_shape = d.batched ? Shape{d.B, d.Cout, d.Ho, d.Wo} : Shape{d.Cout, d.Ho, d.Wo};
  return detail::make_op<T>(
      "conv2d", std::move(out_shape), std::move(out), {x, k, b},
      [d, cg, og, L, in_img, out_img](detail::Node<T> &n) {
        const T *px = n.parents[0]->value.data();
        const T *pk = n.parents[1]->value.data();
        const T *dy = n.grad.data();
        const bool need_dx = n.parents[0]->requires_grad;
        const bool need_dk = n.parents[1]->requires_grad;
        const bool need_db = n.parents[2]->requires_grad;
        std::vector<T> dx(need_dx ? n.parents[0]->value.size() : 0, T(0));
        std::vector<T> dk(need_dk ? n.parents[1]->value.size() : 0, T(0));
        std::vector<T> db(need_db ? n.parents[2]->value.size() : 0, T(0));
        std::vector<T> col(static_cast<std::size_t>(cg) * d.kh * d.kw * L);
        std::vector<T> dcol(col.size());
        for (int bi = 0; bi < d.B; ++bi) {
          const T *img = px + bi * in_img;
          const T *dyb = dy + bi * out_img;
          for (int g = 0; g < d.groups; ++g) {
            const T *dyg = dyb + static_cast<std::size_t>(g) * og * L;
            const std::size_t kofs = static_cast<std::size_t>(g) * og * cg * d.kh * d.kw;
            if (need_dk) {
              detail::im2col(img + static_cast<std::size_t>(g) * cg * d.H * d.W, d, cg,
                             col.data());
              detail::gemm(false, true, og, cg * d.kh * d.kw, L, dyg, col.data(),
                           dk.data() + kofs, true);
            }
            if (need_dx) {
              detail::gemm(true, false, cg * d.kh * d.kw, L, og, pk + kofs, dyg,
                           dcol.data(), false);
              detail::col2im_accum(dcol.data(), d, cg,
                                   dx.data() + bi * in_img +
                                       static_cast<std::size_t>(g) * cg * d.H * d.W);
            }
          }
          if (need_db)
            for (int o = 0; o < d.Cout; ++o) {
              T s = T(0);
              const T *row = dyb + static_cast<std::size_t>(o) * L;
              for (int i = 0; i < L; ++i)
                s += row[i];
              db[static_cast<std::size_t>(o)] += s;
            }
        }
        if (need_dx)
          n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
        if (need_dk)
          n.parents[1]->accumulate(dk.data(), static_cast<std::int64_t>(dk.size()));
        if (need_db)
          n.parents[2]->accumulate(db.data(), static_cast<std::int64_t>(db.size()));
      });
}

/// Per-row standardization over the last axis, then affine.
template <typename T>
Tensor<T> layer_norm(const Tensor<T> &x, const Tensor<T> &gamma, const Tensor<T> &beta,
                     T eps = T(1e-5)) {
  if (x.ndim() != 2 || gamma.ndim() != 1 || beta.ndim() != 1)
    throw ShapeError("layer_norm: expected x[N,C], gamma[C], beta[C], got " +
                     shape_str(x.shape()));
  const int N = x.dim(0), C = x.dim(1);
  if (gamma.dim(0) != C || beta.dim(0) != C)
    throw ShapeError("layer_norm: affine size mismatch, x" + shape_str(x.shape()) +
                     " gamma" + shape_str(gamma.shape()));
  if (!(eps > T(0)))
    throw ContractError("layer_norm: eps must be > 0");
  std::vector<T> out(static_cast<std::size_t>(N) * C);
  const T *px = x.data().data();
  const T *pg = gamma.data().data();
  const T *pb = beta.data().data();
  for (int r = 0; r < N; ++r) {
    const T *row = px + static_cast<std::size_t>(r) * C;
    T mu = T(0);
    for (int c = 0; c < C; ++c)
      mu += row[c];
    mu /= static_cast<T>(C);
    T var = T(0);
    for (int c = 0; c < C; ++c)
      var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<T>(C);
    const T inv = T(1) / std::sqrt(var + eps);
    T *dst = out.data() + static_cast<std::size_t>(r) * C;
    for (int c = 0; c < C; ++c)
      dst[c] = pg[c] * ((row[c] - mu) * inv) + pb[c];
  }
  return detail::make_op<T>(
      "layer_norm", {N, C}, std::move(out), {x, gamma, beta},
      [N, C, eps](detail::Node<T> &n) {
        const T *px = n.parents[0]->value.data();
        const T *pg = n.parents[1]->value.data();
        const T *dy = n.grad.data();
        std::vector<T> dx(n.parents[0]->requires_grad ? n.parents[0]->value.size() : 0);
        std::vector<T> dg(C, T(0)), db(C, T(0));
        std::vector<T> xhat(static_cast<std::size_t>(C));
        for (int r = 0; r < N; ++r) {
          const T *row = px + static_cast<std::size_t>(r) * C;
          const T *dyr = dy + static_cast<std::size_t>(r) * C;
          T mu = T(0);
          for (int c = 0; c < C; ++c)
            mu += row[c];
          mu /= static_cast<T>(C);
          T var = T(0);
          for (int c = 0; c < C; ++c)
            var += (row[c] - mu) * (row[c] - mu);
          var /= static_cast<T>(C);
          const T inv = T(1) / std::sqrt(var + eps);
          for (int c = 0; c < C; ++c)
            xhat[static_cast<std::size_t>(c)] = (row[c] - mu) * inv;
          for (int c = 0; c < C; ++c) {
            dg[static_cast<std::size_t>(c)] += dyr[c] * xhat[static_cast<std::size_t>(c)];
            db[static_cast<std::size_t>(c)] += dyr[c];
          }
          if (!dx.empty()) {
            T m1 = T(0), m2 = T(0);
            for (int c = 0; c < C; ++c) {
              const T dg_ = dyr[c] * pg[c];
              m1 += dg_;
              m2 += dg_ * xhat[static_cast<std::size_t>(c)];
            }
            m1 /= static_cast<T>(C);
            m2 /= static_cast<T>(C);
            T *dst = dx.data() + static_cast<std::size_t>(r) * C;
            for (int c = 0; c < C; ++c)
              dst[c] = inv * (dyr[c] * pg[c] - m1 - xhat[static_cast<std::size_t>(c)] * m2);
          }
        }
        if (!dx.empty())
          n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
        if (n.parents[1]->requires_grad)
          n.parents[1]->accumulate(dg.data(), C);
        if (n.parents[2]->requires_grad)
          n.parents[2]->accumulate(db.data(), C);
      });
}

/// Per-channel spatial standardization, then affine.
template <typename T>
Tensor<T> instance_norm(const Tensor<T> &x, const Tensor<T> &gamma,
                        const Tensor<T> &beta, T eps = T(1e-5)) {
  if (x.ndim() != 3 || gamma.ndim() != 1 || beta.ndim() != 1)
    throw ShapeError("instance_norm: expected x[C,H,W], gamma[C], beta[C], got " +
                     shape_str(x.shape()));
  const int C = x.dim(0);
  const std::int64_t L = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  if (gamma.dim(0) != C || beta.dim(0) != C)
    throw ShapeError("instance_norm: affine size mismatch");
  if (!(eps > T(0)))
    throw ContractError("instance_norm: eps must be > 0");
  std::vector<T> out(static_cast<std::size_t>(C * L));
  const T *px = x.data().data();
  const T *pg = gamma.data().data();
  const T *pb = beta.data().data();
  for (int c = 0; c < C; ++c) {
    const T *row = px + c * L;
    T mu = T(0);
    for (std::int64_t i = 0; i < L; ++i)
      mu += row[i];
    mu /= static_cast<T>(L);
    T var = T(0);
    for (std::int64_t i = 0; i < L; ++i)
      var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(L);
    const T inv = T(1) / std::sqrt(var + eps);
    T *dst = out.data() + c * L;
    for (std::int64_t i = 0; i < L; ++i)
      dst[i] = pg[c] * ((row[i] - mu) * inv) + pb[c];
  }
  return detail::make_op<T>(
      "instance_norm", x.shape(), std::move(out), {x, gamma, beta},
      [C, L, eps](detail::Node<T> &n) {
        const T *px = n.parents[0]->value.data();
        const T *pg = n.parents[1]->value.data();
        const T *dy = n.grad.data();
        std::vector<T> dx(n.parents[0]->requires_grad ? n.parents[0]->value.size() : 0);
        std::vector<T> dg(static_cast<std::size_t>(C), T(0)),
            db(static_cast<std::size_t>(C), T(0));
        std::vector<T> xhat(static_cast<std::size_t>(L));
        for (int c = 0; c < C; ++c) {
          const T *row = px + c * L;
          const T *dyr = dy + c * L;
          T mu = T(0);
          for (std::int64_t i = 0; i < L; ++i)
            mu += row[i];
          mu /= static_cast<T>(L);
          T var = T(0);
          for (std::int64_t i = 0; i < L; ++i)
            var += (row[i] - mu) * (row[i] - mu);
          var /= static_cast<T>(L);
          const T inv = T(1) / std::sqrt(var + eps);
          T sdy = T(0), sdyx = T(0);
          for (std::int64_t i = 0; i < L; ++i) {
            xhat[static_cast<std::size_t>(i)] = (row[i] - mu) * inv;
            sdy += dyr[i];
            sdyx += dyr[i] * xhat[static_cast<std::size_t>(i)];
          }
          dg[static_cast<std::size_t>(c)] += sdyx;
          db[static_cast<std::size_t>(c)] += sdy;
          if (!dx.empty()) {
            const T m1 = pg[c] * sdy / static_cast<T>(L);
            const T m2 = pg[c] * sdyx / static_cast<T>(L);
            T *dst = dx.data() + c * L;
            for (std::int64_t i = 0; i < L; ++i)
              dst[i] = inv * (dyr[i] * pg[c] - m1 - xhat[static_cast<std::size_t>(i)] * m2);
          }
        }
        if (!dx.empty())
          n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
        if (n.parents[1]->requires_grad)
          n.parents[1]->accumulate(dg.data(), C);
        if (n.parents[2]->requires_grad)
          n.parents[2]->accumulate(db.data(), C);
      });
}

template <typename T> Tensor<T> relu(const Tensor<T> &x) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto &v : out)
    v = v > T(0) ? v : T(0);
  return detail::make_op<T>(
      "relu", x.shape(), std::move(out), {x}, [](detail::Node<T> &n) {
        const auto &xv = n.parents[0]->value;
        std::vector<T> dx(xv.size());
        for (std::size_t i = 0; i < xv.size(); ++i)
          dx[i] = xv[i] > T(0) ? n.grad[i] : T(0);
        n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
      });
}

namespace detail {
template <typename T> inline T gelu_scalar(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}
template <typename T> inline T gelu_grad_scalar(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.39894228040143267794);
  return cdf + x * pdf;
}
} // namespace detail

/// Exact (erf-based) GELU.
template <typename T> Tensor<T> gelu(const Tensor<T> &x) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (auto &v : out)
    v = detail::gelu_scalar(v);
  return detail::make_op<T>(
      "gelu", x.shape(), std::move(out), {x}, [](detail::Node<T> &n) {
        const auto &xv = n.parents[0]->value;
        std::vector<T> dx(xv.size());
        for (std::size_t i = 0; i < xv.size(); ++i)
          dx[i] = n.grad[i] * detail::gelu_grad_scalar(xv[i]);
        n.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
      });
}

/// Softmax along `axis` with max-subtraction for stability.
template <typename T> Tensor<T> softmax(const Tensor<T> &x, int axis) {
  const int nd = x.ndim();
  if (axis < 0)
    axis += nd;
  if (axis < 0 || axis >= nd)
    throw ShapeError("softmax: axis out of range for " + shape_str(x.shape()));
  std::int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d)
    outer *= x.dim(d);
  const std::int64_t n = x.dim(axis);
  for (int d = axis + 1; d < nd; ++d)
    inner *= x.dim(d);
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  const T *px = x.data().data();
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * n * inner + i;
      T mx = px[base];
      for (std::int64_t j = 1; j < n; ++j)
        mx = std::max(mx, px[base + j * inner]);
      T s = T(0);
      for (std::int64_t j = 0; j < n; ++j) {
        const T e = std::exp(px[base + j * inner] - mx);
        out[static_cast<std::size_t>(base + j * inner)] = e;
        s += e;
      }
      const T inv = T(1) / s;
      for (std::int64_t j = 0; j < n; ++j)
        out[static_cast<std::size_t>(base + j * inner)] *= inv;
    }
  return detail::make_op<T>(
      "softmax", x.shape(), std::move(out), {x},
      [outer, n, inner](detail::Node<T> &nd) {
        const T *y = nd.value.data();
        const T *dy = nd.grad.data();
        std::vector<T> dx(nd.value.size());
        for (std::int64_t o = 0; o < outer; ++o)
          for (std::int64_t i = 0; i < inner; ++i) {
            const std::int64_t base = o * n * inner + i;
            T dot = T(0);
            for (std::int64_t j = 0; j < n; ++j)
              dot += dy[base + j * inner] * y[base + j * inner];
            for (std::int64_t j = 0; j < n; ++j)
              dx[static_cast<std::size_t>(base + j * inner)] =
                  y[base + j * inner] * (dy[base + j * inner] - dot);
          }
        nd.parents[0]->accumulate(dx.data(), static_cast<std::int64_t>(dx.size()));
      });
}

/// Adds a learned relative-position bias to window attention logits.
/// scores is [nWin*heads, L, L] with batch index b = win*heads + head;
/// table is [nBias, heads]; idx[i*L+j] selects the table row for the
/// (query i, key j) offset.
template <typename T>
Tensor<T> add_window_bias(const Tensor<T> &scores, const Tensor<T> &table,
                          const std::vector<int> &idx, int heads) {
  if (scores.ndim() != 3 || scores.dim(1) != scores.dim(2))
    throw ShapeError("add_window_bias: expected [G,L,L] scores, got " +
                     shape_str(scores.shape()));
  if (table.ndim() != 2 || table.dim(1) != heads)
    throw ShapeError("add_window_bias: expected table [nBias,heads], got " +
                     shape_str(table.shape()));
  const int G = scores.dim(0);
  const int L = scores.dim(1);
  if (static_cast<std::int64_t>(idx.size()) != static_cast<std::int64_t>(L) * L)
    throw ShapeError("add_window_bias: index map size mismatch");
  if (G % heads != 0)
    throw ShapeError("add_window_bias: batch not a multiple of heads");
  std::vector<T> out(scores.data().begin(), scores.data().end());
  const T *pt = table.data().data();
  const std::int64_t LL = static_cast<std::int64_t>(L) * L;
  for (int g = 0; g < G; ++g) {
    const int h = g % heads;
    T *dst = out.data() + g * LL;
    for (std::int64_t e = 0; e < LL; ++e)
      dst[e] += pt[static_cast<std::size_t>(idx[static_cast<std::size_t>(e)]) * heads + h];
  }
  return detail::make_op<T>(
      "add_window_bias", scores.shape(), std::move(out), {scores, table},
      [idx, heads, G, LL](detail::Node<T> &n) {
        if (n.parents[0]->requires_grad)
          n.parents[0]->accumulate(n.grad.data(), static_cast<std::int64_t>(n.grad.size()));
        if (n.parents[1]->requires_grad) {
          std::vector<T> dt(n.parents[1]->value.size(), T(0));
          for (int g = 0; g < G; ++g) {
            const int h = g % heads;
            const T *src = n.grad.data() + g * LL;
            for (std::int64_t e = 0; e < LL; ++e)
              dt[static_cast<std::size_t>(idx[static_cast<std::size_t>(e)]) * heads + h] +=
                  src[e];
          }
          n.parents[1]->accumulate(dt.data(), static_cast<std::int64_t>(dt.size()));
        }
      });
}

} // namespace sdlf
