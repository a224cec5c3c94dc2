#include "sdlf/mri.hpp"

#include <cmath>

namespace sdlf::mri {

namespace {

struct Blob {
  bool ellipse;
  double cy, cx, ry, rx, cos_a, sin_a, value;
};

bool inside(const Blob &b, double y, double x) {
  const double dy = y - b.cy, dx = x - b.cx;
  const double u = b.cos_a * dx + b.sin_a * dy;
  const double v = -b.sin_a * dx + b.cos_a * dy;
  if (b.ellipse)
    return (u / b.rx) * (u / b.rx) + (v / b.ry) * (v / b.ry) <= 1.0;
  return std::abs(u) <= b.rx && std::abs(v) <= b.ry;
}

// low-order polynomial phase over [-1,1]^2
struct SmoothPhase {
  double c0, cy, cx, cyx, cy2, cx2;
  double at(double ty, double tx) const {
    return c0 + cy * ty + cx * tx + cyx * ty * tx + cy2 * ty * ty + cx2 * tx * tx;
  }
};

SmoothPhase random_phase(Rng &rng, double lin, double quad) {
  const double pi = 3.14159265358979323846;
  return {rng.uniform(-pi, pi),  rng.uniform(-lin, lin),  rng.uniform(-lin, lin),
          rng.uniform(-quad, quad), rng.uniform(-quad, quad), rng.uniform(-quad, quad)};
}

} // namespace

std::vector<double> phantom_field(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Blob> blobs;
  // body ellipse guarantees nonzero support
  {
    Blob b;
    b.ellipse = true;
    b.cy = h * rng.uniform(0.45, 0.55);
    b.cx = w * rng.uniform(0.45, 0.55);
    b.ry = h * rng.uniform(0.30, 0.42);
    b.rx = w * rng.uniform(0.30, 0.42);
    const double a = rng.uniform(0.0, 3.14159265358979323846);
    b.cos_a = std::cos(a);
    b.sin_a = std::sin(a);
    b.value = rng.uniform(0.4, 0.7);
    blobs.push_back(b);
  }
  const int extra = 3 + static_cast<int>(rng.uniform_int(5)); // 3..7 inner structures
  for (int i = 0; i < extra; ++i) {
    Blob b;
    b.ellipse = rng.uniform01() < 0.5;
    b.cy = h * rng.uniform(0.2, 0.8);
    b.cx = w * rng.uniform(0.2, 0.8);
    b.ry = h * rng.uniform(0.05, 0.22);
    b.rx = w * rng.uniform(0.05, 0.22);
    const double a = rng.uniform(0.0, 3.14159265358979323846);
    b.cos_a = std::cos(a);
    b.sin_a = std::sin(a);
    b.value = rng.uniform(0.25, 1.0);
    blobs.push_back(b);
  }
  const SmoothPhase phase = random_phase(rng, 0.8, 0.8);

  const std::size_t L = static_cast<std::size_t>(h) * w;
  std::vector<double> mag(L, 0.0);
  double peak = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (const auto &b : blobs)
        if (inside(b, y + 0.5, x + 0.5))
          s += b.value;
      mag[static_cast<std::size_t>(y) * w + x] = s;
      peak = std::max(peak, s);
    }
  std::vector<double> out(2 * L);
  for (int y = 0; y < h; ++y) {
    const double ty = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
    for (int x = 0; x < w; ++x) {
      const double tx = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
      const std::size_t q = static_cast<std::size_t>(y) * w + x;
      const double m = mag[q] / peak;
      const double p = phase.at(ty, tx);
      out[q] = m * std::cos(p);
      out[L + q] = m * std::sin(p);
    }
  }
  return out;
}

std::vector<double> coil_fields(int nc, int h, int w, std::uint64_t seed) {
  if (nc < 1)
    throw ConfigError("make_coils: need at least one coil, got " + std::to_string(nc));
  Rng rng(seed);
  const double pi = 3.14159265358979323846;
  const std::size_t L = static_cast<std::size_t>(h) * w;
  std::vector<double> g(static_cast<std::size_t>(nc) * L);
  std::vector<SmoothPhase> phases;
  phases.reserve(static_cast<std::size_t>(nc));
  for (int i = 0; i < nc; ++i) {
    const double theta = 2.0 * pi * i / nc + rng.uniform(-0.2, 0.2);
    const double cy = 0.5 * h + 0.55 * h * std::sin(theta);
    const double cx = 0.5 * w + 0.55 * w * std::cos(theta);
    const double sigma = rng.uniform(0.5, 0.8) * std::min(h, w);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        g[static_cast<std::size_t>(i) * L + static_cast<std::size_t>(y) * w + x] =
            std::exp(-d2 * inv2s2);
      }
    phases.push_back(random_phase(rng, 0.5, 0.3));
  }
  std::vector<double> out(static_cast<std::size_t>(nc) * 2 * L);
  for (int y = 0; y < h; ++y) {
    const double ty = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
    for (int x = 0; x < w; ++x) {
      const double tx = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
      const std::size_t q = static_cast<std::size_t>(y) * w + x;
      double norm2 = 0.0;
      for (int i = 0; i < nc; ++i) {
        const double v = g[static_cast<std::size_t>(i) * L + q];
        norm2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (int i = 0; i < nc; ++i) {
        const double m = g[static_cast<std::size_t>(i) * L + q] * inv;
        const double p = phases[static_cast<std::size_t>(i)].at(ty, tx);
        out[(static_cast<std::size_t>(2 * i)) * L + q] = m * std::cos(p);
        out[(static_cast<std::size_t>(2 * i + 1)) * L + q] = m * std::sin(p);
      }
    }
  }
  return out;
}

} // namespace sdlf::mri
