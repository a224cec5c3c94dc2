#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "sdlf/tensor.hpp"

// Structural and elementwise primitives. Shapes are always explicit: the only
// broadcast in the library is the bias add inside linear/conv2d.

namespace sdlf {

namespace detail {

template <typename T>
void check_same_shape(const char *op, const Tensor<T> &a, const Tensor<T> &b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shapes differ, " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

inline Shape drop_front(const Shape &s) { return Shape(s.begin() + 1, s.end()); }

} // namespace detail

template <typename T> Tensor<T> add(const Tensor<T> &a, const Tensor<T> &b) {
  detail::check_same_shape("add", a, b);
  std::vector<T> out(a.data().begin(), a.data().end());
  const T *pb = b.data().data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    out[static_cast<std::size_t>(i)] += pb[i];
  return detail::make_op<T>(
      "add", a.shape(), std::move(out), {a, b}, [](detail::Node<T> &n) {
        const std::int64_t m = static_cast<std::int64_t>(n.grad.size());
        if (n.parents[0]->requires_grad)
          n.parents[0]->accumulate(n.grad.data(), m);
        if (n.parents[1]->requires_grad)
          n.parents[1]->accumulate(n.grad.data(), m);
      });
}

template <typename T> Tensor<T> sub(const Tensor<T> &a, const Tensor<T> &b) {
  detail::check_same_shape("sub", a, b);
  std::vector<T> out(a.data().begin(), a.data().end());
  const T *pb = b.data().data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    out[static_cast<std::size_t>(i)] -= pb[i];
  return detail::make_op<T>(
      "sub", a.shape(), std::move(out), {a, b}, [](detail::Node<T> &n) {
        const std::int64_t m = static_cast<std::int64_t>(n.grad.size());
        if (n.parents[0]->requires_grad)
          n.parents[0]->accumulate(n.grad.data(), m);
        if (n.parents[1]->requires_grad) {
          std::vector<T> neg(n.grad.size());
          for (std::size_t i = 0; i < neg.size(); ++i)
            neg[i] = -n.grad[i];
          n.parents[1]->accumulate(neg.data(), m);
        }
      });
}

template <typename T> Tensor<T> mul(const Tensor<T> &a, const Tensor<T> &b) {
  detail::check_same_shape("mul", a, b);
  std::vector<T> out(static_cast<std::size_t>(a.numel()));
  const T *pa = a.data().data();
  const T *pb = b.data().data();
  for (std::int64_t i = 0; i < a.numel(); ++i)
    out[static_cast<std::size_t>(i)] = pa[i] * pb[i];
  return detail::make_op<T>(
      "mul", a.shape(), std::move(out), {a, b}, [](detail::Node<T> &n) {
        const std::size_t m = n.grad.size();
        std::vector<T> tmp(m);
        if (n.parents[0]->requires_grad) {
          const T *other = n.parents[1]->value.data();
          for (std::size_t i = 0; i < m; ++i)
            tmp[i] = n.grad[i] * other[i];
          n.parents[0]->accumulate(tmp.data(), static_cast<std::int64_t>(m));
        }
        if (n.parents[1]->requires_grad) {
          const T *other = n.parents[0]->value.data();
          for (std::size_t i = 0; i < m; ++i)
            tmp[i] = n.grad[i] * other[i];
          n.parents[1]->accumulate(tmp.data(), static_cast<std::int64_t>(m));
        }
      });
}

template <typename T> Tensor<T> scale(const Tensor<T> &a, T c) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto &v : out)
    v *= c;
  return detail::make_op<T>(
      "scale", a.shape(), std::move(out), {a}, [c](detail::Node<T> &n) {
        std::vector<T> tmp(n.grad.size());
        for (std::size_t i = 0; i < tmp.size(); ++i)
          tmp[i] = n.grad[i] * c;
        n.parents[0]->accumulate(tmp.data(), static_cast<std::int64_t>(tmp.size()));
      });
}

template <typename T> Tensor<T> sum_all(const Tensor<T> &a) {
  T s = T(0);
  for (const T v : a.data())
    s += v;
  return detail::make_op<T>(
      "sum", {1}, {s}, {a}, [](detail::Node<T> &n) {
        std::vector<T> tmp(n.parents[0]->value.size(), n.grad[0]);
        n.parents[0]->accumulate(tmp.data(), static_cast<std::int64_t>(tmp.size()));
      });
}

/// Sum of absolute values; subgradient at 0 is 0.
template <typename T> Tensor<T> sum_abs(const Tensor<T> &a) {
  T s = T(0);
  for (const T v : a.data())
    s += std::abs(v);
  return detail::make_op<T>(
      "sum_abs", {1}, {s}, {a}, [](detail::Node<T> &n) {
        const auto &x = n.parents[0]->value;
        std::vector<T> tmp(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
          tmp[i] = n.grad[0] * (x[i] > T(0) ? T(1) : (x[i] < T(0) ? T(-1) : T(0)));
        n.parents[0]->accumulate(tmp.data(), static_cast<std::int64_t>(tmp.size()));
      });
}

/// Mean absolute difference; subgradient at ties is 0.
template <typename T> Tensor<T> l1_loss(const Tensor<T> &a, const Tensor<T> &b) {
  detail::check_same_shape("l1_loss", a, b);
  const std::int64_t m = a.numel();
  const T *pa = a.data().data();
  const T *pb = b.data().data();
  T s = T(0);
  for (std::int64_t i = 0; i < m; ++i)
    s += std::abs(pa[i] - pb[i]);
  s /= static_cast<T>(m);
  return detail::make_op<T>(
      "l1_loss", {1}, {s}, {a, b}, [m](detail::Node<T> &n) {
        const T *xa = n.parents[0]->value.data();
        const T *xb = n.parents[1]->value.data();
        const T w = n.grad[0] / static_cast<T>(m);
        std::vector<T> tmp(static_cast<std::size_t>(m));
        for (std::int64_t i = 0; i < m; ++i) {
          const T d = xa[i] - xb[i];
          tmp[static_cast<std::size_t>(i)] = d > T(0) ? w : (d < T(0) ? -w : T(0));
        }
        if (n.parents[0]->requires_grad)
          n.parents[0]->accumulate(tmp.data(), m);
        if (n.parents[1]->requires_grad) {
          for (auto &v : tmp)
            v = -v;
          n.parents[1]->accumulate(tmp.data(), m);
        }
      });
}

template <typename T> Tensor<T> reshape(const Tensor<T> &a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  std::vector<T> out(a.data().begin(), a.data().end());
  return detail::make_op<T>(
      "reshape", std::move(shape), std::move(out), {a}, [](detail::Node<T> &n) {
        n.parents[0]->accumulate(n.grad.data(), static_cast<std::int64_t>(n.grad.size()));
      });
}

namespace detail {

inline std::vector<std::int64_t> row_major_strides(const Shape &s) {
  std::vector<std::int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
    st[static_cast<std::size_t>(i)] =
        st[static_cast<std::size_t>(i + 1)] * s[static_cast<std::size_t>(i + 1)];
  return st;
}

// out[i0,...,ik] = in[ perm applied ]; walks the output odometer so no
// divisions happen in the hot loop.
template <typename T>
void permute_copy(const Shape &in_shape, const std::vector<int> &perm, const T *in,
                  T *out, bool accumulate) {
  const int nd = static_cast<int>(in_shape.size());
  Shape out_shape(static_cast<std::size_t>(nd));
  for (int d = 0; d < nd; ++d)
    out_shape[static_cast<std::size_t>(d)] = in_shape[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])];
  const auto in_strides = row_major_strides(in_shape);
  std::vector<std::int64_t> step(static_cast<std::size_t>(nd));
  for (int d = 0; d < nd; ++d)
    step[static_cast<std::size_t>(d)] = in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])];
  const std::int64_t total = shape_numel(in_shape);
  std::vector<std::int64_t> idx(static_cast<std::size_t>(nd), 0);
  std::int64_t src = 0;
  for (std::int64_t o = 0; o < total; ++o) {
    if (accumulate)
      out[o] += in[src];
    else
      out[o] = in[src];
    for (int d = nd - 1; d >= 0; --d) {
      auto du = static_cast<std::size_t>(d);
      src += step[du];
      if (++idx[du] < out_shape[du])
        break;
      src -= step[du] * out_shape[du];
      idx[du] = 0;
    }
  }
}

} // namespace detail

/// Axis permutation (generalized transpose). perm[d] names the input axis
/// that becomes output axis d.
template <typename T> Tensor<T> permute_axes(const Tensor<T> &a, std::vector<int> perm) {
  const int nd = a.ndim();
  if (static_cast<int>(perm.size()) != nd)
    throw ShapeError("permute_axes: perm size " + std::to_string(perm.size()) +
                     " vs ndim " + std::to_string(nd));
  Shape out_shape(static_cast<std::size_t>(nd));
  for (int d = 0; d < nd; ++d)
    out_shape[static_cast<std::size_t>(d)] = a.dim(perm[static_cast<std::size_t>(d)]);
  std::vector<T> out(static_cast<std::size_t>(a.numel()));
  detail::permute_copy(a.shape(), perm, a.data().data(), out.data(), false);
  std::vector<int> inv(perm.size());
  for (int d = 0; d < nd; ++d)
    inv[static_cast<std::size_t>(perm[static_cast<std::size_t>(d)])] = d;
  return detail::make_op<T>(
      "permute_axes", std::move(out_shape), std::move(out), {a},
      [inv](detail::Node<T> &n) {
        // grad wrt input = inverse permutation of the output grad
        std::vector<T> gin(n.grad.size());
        detail::permute_copy(n.shape, inv, n.grad.data(), gin.data(), false);
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

/// Row gather on the leading axis: out[r, ...] = a[idx[r], ...].
template <typename T>
Tensor<T> take_rows(const Tensor<T> &a, const std::vector<int> &idx) {
  if (a.ndim() < 1)
    throw ShapeError("take_rows: needs at least 1-d input");
  const std::int64_t row = a.numel() / a.dim(0);
  Shape out_shape = a.shape();
  out_shape[0] = static_cast<int>(idx.size());
  std::vector<T> out(static_cast<std::size_t>(row) * idx.size());
  const T *src = a.data().data();
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::memcpy(out.data() + r * static_cast<std::size_t>(row),
                src + static_cast<std::size_t>(idx[r]) * static_cast<std::size_t>(row),
                static_cast<std::size_t>(row) * sizeof(T));
  return detail::make_op<T>(
      "take_rows", std::move(out_shape), std::move(out), {a},
      [idx, row](detail::Node<T> &n) {
        std::vector<T> gin(n.parents[0]->value.size(), T(0));
        for (std::size_t r = 0; r < idx.size(); ++r) {
          T *dst = gin.data() + static_cast<std::size_t>(idx[r]) * static_cast<std::size_t>(row);
          const T *g = n.grad.data() + r * static_cast<std::size_t>(row);
          for (std::int64_t i = 0; i < row; ++i)
            dst[i] += g[i];
        }
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

/// out = a[i, ...] on the leading axis.
template <typename T> Tensor<T> select0(const Tensor<T> &a, int i) {
  if (a.ndim() < 1 || i < 0 || i >= a.dim(0))
    throw ShapeError("select0: index " + std::to_string(i) + " out of " +
                     shape_str(a.shape()));
  const std::int64_t row = a.numel() / a.dim(0);
  std::vector<T> out(a.data().begin() + static_cast<std::ptrdiff_t>(i * row),
                     a.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * row));
  return detail::make_op<T>(
      "select0", detail::drop_front(a.shape()), std::move(out), {a},
      [i, row](detail::Node<T> &n) {
        std::vector<T> gin(n.parents[0]->value.size(), T(0));
        std::copy(n.grad.begin(), n.grad.end(),
                  gin.begin() + static_cast<std::ptrdiff_t>(i * row));
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

/// Stacks equally shaped tensors along a new leading axis.
template <typename T> Tensor<T> stack0(const std::vector<Tensor<T>> &parts) {
  if (parts.empty())
    throw ShapeError("stack0: empty input");
  for (const auto &p : parts)
    detail::check_same_shape("stack0", parts[0], p);
  const std::int64_t row = parts[0].numel();
  Shape out_shape = parts[0].shape();
  out_shape.insert(out_shape.begin(), static_cast<int>(parts.size()));
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(row) * parts.size());
  for (const auto &p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  return detail::make_op<T>(
      "stack0", std::move(out_shape), std::move(out), parts,
      [row](detail::Node<T> &n) {
        for (std::size_t k = 0; k < n.parents.size(); ++k) {
          if (!n.parents[k]->requires_grad)
            continue;
          n.parents[k]->accumulate(n.grad.data() + k * static_cast<std::size_t>(row), row);
        }
      });
}

/// Crops a [C,H,W] tensor to [C,oh,ow] starting at (top,left).
template <typename T>
Tensor<T> crop2d(const Tensor<T> &a, int top, int left, int oh, int ow) {
  if (a.ndim() != 3)
    throw ShapeError("crop2d: expected [C,H,W], got " + shape_str(a.shape()));
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (top < 0 || left < 0 || top + oh > H || left + ow > W)
    throw ShapeError("crop2d: window out of bounds");
  std::vector<T> out(static_cast<std::size_t>(C) * oh * ow);
  const T *src = a.data().data();
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < oh; ++r)
      std::memcpy(out.data() + (static_cast<std::size_t>(c) * oh + r) * ow,
                  src + (static_cast<std::size_t>(c) * H + top + r) * W + left,
                  static_cast<std::size_t>(ow) * sizeof(T));
  return detail::make_op<T>(
      "crop2d", {C, oh, ow}, std::move(out), {a},
      [C, H, W, top, left, oh, ow](detail::Node<T> &n) {
        std::vector<T> gin(static_cast<std::size_t>(C) * H * W, T(0));
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < oh; ++r) {
            const T *g = n.grad.data() + (static_cast<std::size_t>(c) * oh + r) * ow;
            T *dst = gin.data() + (static_cast<std::size_t>(c) * H + top + r) * W + left;
            for (int q = 0; q < ow; ++q)
              dst[q] += g[q];
          }
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

namespace detail {
inline int reflect_index(int i, int n) {
  // reflect without repeating the border sample; valid for |overhang| < n
  if (i < 0)
    return -i;
  if (i >= n)
    return 2 * n - 2 - i;
  return i;
}
} // namespace detail

/// Reflect padding for [C,H,W]; pad sizes must be < H (resp. W).
template <typename T>
Tensor<T> pad_reflect2d(const Tensor<T> &a, int pt, int pb, int pl, int pr) {
  if (a.ndim() != 3)
    throw ShapeError("pad_reflect2d: expected [C,H,W], got " + shape_str(a.shape()));
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (pt >= H || pb >= H || pl >= W || pr >= W || pt < 0 || pb < 0 || pl < 0 || pr < 0)
    throw ShapeError("pad_reflect2d: pad must be in [0, dim)");
  const int OH = H + pt + pb, OW = W + pl + pr;
  std::vector<T> out(static_cast<std::size_t>(C) * OH * OW);
  const T *src = a.data().data();
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < OH; ++r) {
      const int sr = detail::reflect_index(r - pt, H);
      for (int q = 0; q < OW; ++q) {
        const int sq = detail::reflect_index(q - pl, W);
        out[(static_cast<std::size_t>(c) * OH + r) * OW + q] =
            src[(static_cast<std::size_t>(c) * H + sr) * W + sq];
      }
    }
  return detail::make_op<T>(
      "pad_reflect2d", {C, OH, OW}, std::move(out), {a},
      [C, H, W, pt, pl, OH, OW](detail::Node<T> &n) {
        std::vector<T> gin(static_cast<std::size_t>(C) * H * W, T(0));
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < OH; ++r) {
            const int sr = detail::reflect_index(r - pt, H);
            for (int q = 0; q < OW; ++q) {
              const int sq = detail::reflect_index(q - pl, W);
              gin[(static_cast<std::size_t>(c) * H + sr) * W + sq] +=
                  n.grad[(static_cast<std::size_t>(c) * OH + r) * OW + q];
            }
          }
        n.parents[0]->accumulate(gin.data(), static_cast<std::int64_t>(gin.size()));
      });
}

} // namespace sdlf
