#pragma once

#include <cstdint>

#include "sdlf/fourier.hpp"
#include "sdlf/nn.hpp"

// Multi-coil Cartesian acquisition model: per coil i the measurement is
// mask * F(S_i * x) with the centered orthonormal 2-D Fourier transform F and
// sensitivity maps normalized so that sum_i conj(S_i) S_i = 1 at every pixel.

namespace sdlf::mri {

template <typename T> struct ComplexImage {
  Tensor<T> data; // [2,H,W]
  ComplexImage() = default;
  explicit ComplexImage(Tensor<T> d) : data(std::move(d)) {
    if (data.ndim() != 3 || data.dim(0) != 2)
      throw ShapeError("ComplexImage: expected [2,H,W], got " + shape_str(data.shape()));
    if (data.dim(1) < 8 || data.dim(2) < 8)
      throw ShapeError("ComplexImage: sides must be >= 8, got " + shape_str(data.shape()));
  }
  int height() const { return data.dim(1); }
  int width() const { return data.dim(2); }
};

template <typename T> struct KSpace {
  Tensor<T> data; // [Nc,2,H,W]
  KSpace() = default;
  explicit KSpace(Tensor<T> d) : data(std::move(d)) {
    if (data.ndim() != 4 || data.dim(1) != 2)
      throw ShapeError("KSpace: expected [Nc,2,H,W], got " + shape_str(data.shape()));
  }
  int coils() const { return data.dim(0); }
  int height() const { return data.dim(2); }
  int width() const { return data.dim(3); }
};

template <typename T> struct CoilSensitivities {
  Tensor<T> maps; // [Nc,2,H,W]
  CoilSensitivities() = default;
  explicit CoilSensitivities(Tensor<T> m) : maps(std::move(m)) {
    if (maps.ndim() != 4 || maps.dim(1) != 2)
      throw ShapeError("CoilSensitivities: expected [Nc,2,H,W], got " +
                       shape_str(maps.shape()));
  }
  int coils() const { return maps.dim(0); }
  int height() const { return maps.dim(2); }
  int width() const { return maps.dim(3); }

  /// max_p | sum_i |S_i(p)|^2 - 1 |, for the normalization invariant.
  double normalization_error() const {
    const int nc = coils();
    const std::size_t L = static_cast<std::size_t>(height()) * width();
    const T *p = maps.data().data();
    double worst = 0.0;
    for (std::size_t q = 0; q < L; ++q) {
      double s = 0.0;
      for (int i = 0; i < nc; ++i) {
        const double re = static_cast<double>(p[(2 * i) * L + q]);
        const double im = static_cast<double>(p[(2 * i + 1) * L + q]);
        s += re * re + im * im;
      }
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }
};

/// Cartesian column mask: cols[c] == 1 means column c of k-space is sampled
/// for every row. The center `acs` columns are always sampled.
struct SamplingMask {
  std::vector<std::uint8_t> cols;
  int accel = 0; // target acceleration, 0 when not applicable (splits)
  int acs = 0;   // number of always-sampled center columns

  int width() const { return static_cast<int>(cols.size()); }
  int sampled() const {
    int n = 0;
    for (auto c : cols)
      n += c;
    return n;
  }
  int acs_start() const { return (width() - acs) / 2; }
  bool is_acs(int c) const { return acs > 0 && c >= acs_start() && c < acs_start() + acs; }
};

/// Disjoint partition of a mask: m1 + m2 == parent, m1 * m2 == 0, with the
/// ACS block always in m1.
struct SplitMasks {
  SamplingMask m1, m2;
};

/// ACS fraction convention: 0.125 at 4x, 0.10 at 5x, 4x value elsewhere.
double default_acs_frac(int accel);

/// Random Cartesian column mask with a fully sampled ACS center block and a
/// total of round(w/accel) sampled columns. Deterministic per seed.
SamplingMask make_mask(int w, int accel, double acs_frac, std::uint64_t seed);

/// Bernoulli(rho) assignment of the non-ACS sampled columns to m1 (rest to
/// m2); ACS goes to m1. Throws SplitEmptyError when m2 ends up empty, in
/// which case the caller retries with a fresh seed.
SplitMasks split_mask(const SamplingMask &m, double rho, std::uint64_t seed);

/// Piecewise-constant random phantom (ellipses/rectangles) with a smooth
/// random phase; magnitude peak-normalized to 1. Returned planar as [2,h,w].
std::vector<double> phantom_field(int h, int w, std::uint64_t seed);

/// nc Gaussian-profile coil magnitudes with smooth random phases, normalized
/// per pixel so sum_i |S_i|^2 = 1. Returned planar as [nc,2,h,w].
std::vector<double> coil_fields(int nc, int h, int w, std::uint64_t seed);

template <typename T> ComplexImage<T> make_phantom(int h, int w, std::uint64_t seed) {
  const std::vector<double> f = phantom_field(h, w, seed);
  std::vector<T> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    v[i] = static_cast<T>(f[i]);
  return ComplexImage<T>(Tensor<T>::from_vector({2, h, w}, std::move(v)));
}

template <typename T>
CoilSensitivities<T> make_coils(int nc, int h, int w, std::uint64_t seed) {
  const std::vector<double> f = coil_fields(nc, h, w, seed);
  std::vector<T> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    v[i] = static_cast<T>(f[i]);
  return CoilSensitivities<T>(Tensor<T>::from_vector({nc, 2, h, w}, std::move(v)));
}

namespace detail_mri {

template <typename T>
void check_geometry(const char *op, int nc, int h, int w,
                    const CoilSensitivities<T> &s, const SamplingMask *m) {
  if (s.coils() != nc || s.height() != h || s.width() != w)
    throw ShapeError(std::string(op) + ": sensitivities " + shape_str(s.maps.shape()) +
                     " do not match data [" + std::to_string(nc) + ",2," +
                     std::to_string(h) + "," + std::to_string(w) + "]");
  if (m && m->width() != w)
    throw ShapeError(std::string(op) + ": mask width " + std::to_string(m->width()) +
                     " vs data width " + std::to_string(w));
}

} // namespace detail_mri

/// Constant [2,H,W] tensor holding the column mask (or its complement).
template <typename T>
Tensor<T> mask_field(const SamplingMask &m, int h, bool complement = false) {
  const int w = m.width();
  std::vector<T> v(static_cast<std::size_t>(2) * h * w);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < h; ++r)
      for (int q = 0; q < w; ++q) {
        const bool on = m.cols[static_cast<std::size_t>(q)] != 0;
        v[(static_cast<std::size_t>(c) * h + r) * w + q] =
            (on != complement) ? T(1) : T(0);
      }
  return Tensor<T>::from_vector({2, h, w}, std::move(v));
}

/// Raw (graph-free) masked copy of measured k-space: y * mask per coil.
template <typename T> KSpace<T> apply_mask(const KSpace<T> &y, const SamplingMask &m) {
  if (m.width() != y.width())
    throw ShapeError("apply_mask: mask width " + std::to_string(m.width()) +
                     " vs k-space width " + std::to_string(y.width()));
  std::vector<T> v(y.data.data().begin(), y.data.data().end());
  const int w = y.width();
  const std::size_t rows = v.size() / static_cast<std::size_t>(w);
  for (std::size_t r = 0; r < rows; ++r)
    for (int q = 0; q < w; ++q)
      v[r * w + q] *= m.cols[static_cast<std::size_t>(q)] ? T(1) : T(0);
  return KSpace<T>(Tensor<T>::from_vector(y.data.shape(), std::move(v)));
}

/// y_i = mask * F(S_i * x), differentiable in x.
template <typename T>
KSpace<T> apply_forward(const ComplexImage<T> &x, const CoilSensitivities<T> &s,
                        const SamplingMask &m) {
  const int h = x.height(), w = x.width();
  detail_mri::check_geometry("apply_forward", s.coils(), h, w, s, &m);
  const Tensor<T> mt = mask_field<T>(m, h);
  std::vector<Tensor<T>> coils;
  coils.reserve(static_cast<std::size_t>(s.coils()));
  for (int i = 0; i < s.coils(); ++i)
    coils.push_back(mul(fft2c(cmul(select0(s.maps, i), x.data)), mt));
  return KSpace<T>(stack0(coils));
}

/// x = sum_i conj(S_i) * F^-1(y_i); the exact left-inverse of apply_forward
/// at full sampling thanks to the sensitivity normalization.
template <typename T>
ComplexImage<T> coil_combine(const KSpace<T> &y, const CoilSensitivities<T> &s) {
  const int h = y.height(), w = y.width();
  detail_mri::check_geometry("coil_combine", y.coils(), h, w, s, nullptr);
  Tensor<T> acc;
  for (int i = 0; i < y.coils(); ++i) {
    Tensor<T> term = cmul(cconj(select0(s.maps, i)), ifft2c(select0(y.data, i)));
    acc = i == 0 ? term : add(acc, term);
  }
  return ComplexImage<T>(acc);
}

/// Zero-filled reconstruction: coil_combine of the (already masked) k-space.
template <typename T>
ComplexImage<T> zero_filled(const KSpace<T> &y, const CoilSensitivities<T> &s) {
  return coil_combine(y, s);
}

/// Hard data consistency in k-space: k * (1-mask) + y * mask per coil.
/// y is treated as a constant; gradients flow only through the unmeasured
/// locations of k.
template <typename T>
Tensor<T> kspace_replace(const Tensor<T> &k, const KSpace<T> &y, const SamplingMask &m) {
  if (k.shape() != y.data.shape())
    throw ShapeError("kspace_replace: predicted " + shape_str(k.shape()) +
                     " vs measured " + shape_str(y.data.shape()));
  const KSpace<T> ym = apply_mask(y, m);
  const int h = y.height();
  const Tensor<T> inv = mask_field<T>(m, h, true);
  std::vector<Tensor<T>> coils;
  coils.reserve(static_cast<std::size_t>(y.coils()));
  for (int i = 0; i < y.coils(); ++i)
    coils.push_back(add(mul(select0(k, i), inv), select0(ym.data, i)));
  return stack0(coils);
}

template <typename T> struct DataConsistencyResult {
  Tensor<T> kspace; // replaced per-coil k-space [Nc,2,H,W]
  ComplexImage<T> image;
};

/// Projects x_pred to per-coil k-space, replaces the sampled locations with
/// the measurements, and coil-combines back.
template <typename T>
DataConsistencyResult<T> data_consistency_detail(const ComplexImage<T> &x_pred,
                                                 const KSpace<T> &y_meas,
                                                 const CoilSensitivities<T> &s,
                                                 const SamplingMask &m) {
  const int h = x_pred.height(), w = x_pred.width();
  detail_mri::check_geometry("data_consistency", y_meas.coils(), h, w, s, &m);
  std::vector<Tensor<T>> khat;
  khat.reserve(static_cast<std::size_t>(s.coils()));
  for (int i = 0; i < s.coils(); ++i)
    khat.push_back(fft2c(cmul(select0(s.maps, i), x_pred.data)));
  Tensor<T> replaced = kspace_replace(stack0(khat), y_meas, m);
  DataConsistencyResult<T> r;
  r.kspace = replaced;
  r.image = coil_combine(KSpace<T>(replaced), s);
  return r;
}

template <typename T>
ComplexImage<T> data_consistency(const ComplexImage<T> &x_pred, const KSpace<T> &y_meas,
                                 const CoilSensitivities<T> &s, const SamplingMask &m) {
  return data_consistency_detail(x_pred, y_meas, s, m).image;
}

} // namespace sdlf::mri
