#include "sdlf/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sdlf::metrics {

MagnitudeImage::MagnitudeImage(int h_, int w_, std::vector<double> v_)
    : h(h_), w(w_), v(std::move(v_)) {
  if (h < 1 || w < 1 || v.size() != static_cast<std::size_t>(h) * w)
    throw ShapeError("MagnitudeImage: bad dims " + std::to_string(h) + "x" +
                     std::to_string(w));
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ContractError("MagnitudeImage: values must be finite and nonnegative");
}

double MagnitudeImage::max() const {
  double m = 0.0;
  for (double x : v)
    m = std::max(m, x);
  return m;
}

namespace {
template <typename T> MagnitudeImage magnitude_impl(int h, int w, const T *planar) {
  const std::size_t L = static_cast<std::size_t>(h) * w;
  std::vector<double> out(L);
  for (std::size_t i = 0; i < L; ++i) {
    const double re = static_cast<double>(planar[i]);
    const double im = static_cast<double>(planar[L + i]);
    out[i] = std::sqrt(re * re + im * im);
  }
  return MagnitudeImage(h, w, std::move(out));
}

void check_pair(const MagnitudeImage &a, const MagnitudeImage &b) {
  if (a.h != b.h || a.w != b.w)
    throw ShapeError("metrics: image sizes differ, " + std::to_string(a.h) + "x" +
                     std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                     std::to_string(b.w));
}
} // namespace

MagnitudeImage magnitude(int h, int w, const float *planar) {
  return magnitude_impl(h, w, planar);
}
MagnitudeImage magnitude(int h, int w, const double *planar) {
  return magnitude_impl(h, w, planar);
}

double psnr(const MagnitudeImage &ref, const MagnitudeImage &test) {
  check_pair(ref, test);
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    const double d = ref.v[i] - test.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.v.size());
  if (mse == 0.0)
    return std::numeric_limits<double>::infinity();
  const double peak = ref.max();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const MagnitudeImage &ref, const MagnitudeImage &test) {
  return ssim(ref, test, ref.max());
}

double ssim(const MagnitudeImage &ref, const MagnitudeImage &test, double data_range) {
  check_pair(ref, test);
  constexpr int win = 7;
  constexpr int rad = win / 2;
  constexpr double np = static_cast<double>(win) * win;
  if (ref.h < win || ref.w < win)
    throw ShapeError("ssim: image " + std::to_string(ref.h) + "x" +
                     std::to_string(ref.w) + " smaller than the 7x7 window");
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const double cov_norm = np / (np - 1.0);
  double acc = 0.0;
  long long count = 0;
  for (int y = rad; y < ref.h - rad; ++y)
    for (int x = rad; x < ref.w - rad; ++x) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int u = -rad; u <= rad; ++u)
        for (int v = -rad; v <= rad; ++v) {
          const double a = ref.v[static_cast<std::size_t>(y + u) * ref.w + (x + v)];
          const double b = test.v[static_cast<std::size_t>(y + u) * ref.w + (x + v)];
          sx += a;
          sy += b;
          sxx += a * a;
          syy += b * b;
          sxy += a * b;
        }
      const double ux = sx / np, uy = sy / np;
      const double vx = cov_norm * (sxx / np - ux * ux);
      const double vy = cov_norm * (syy / np - uy * uy);
      const double vxy = cov_norm * (sxy / np - ux * uy);
      acc += ((2.0 * ux * uy + c1) * (2.0 * vxy + c2)) /
             ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / static_cast<double>(count);
}

} // namespace sdlf::metrics
