#pragma once

#include <vector>

#include "sdlf/errors.hpp"

namespace sdlf::metrics {

/// Nonnegative [H,W] magnitude image.
struct MagnitudeImage {
  int h = 0, w = 0;
  std::vector<double> v;

  MagnitudeImage() = default;
  MagnitudeImage(int h_, int w_, std::vector<double> v_);
  double max() const;
};

/// |z| of a planar [2,H,W] complex field.
MagnitudeImage magnitude(int h, int w, const float *planar);
MagnitudeImage magnitude(int h, int w, const double *planar);

/// 10*log10(max(ref)^2 / MSE) in dB; +infinity when MSE == 0.
double psnr(const MagnitudeImage &ref, const MagnitudeImage &test);

/// Mean local SSIM with a 7x7 uniform window, K1=0.01, K2=0.03 and the data
/// range taken from the reference (overridable). Window statistics use the
/// unbiased covariance normalization and only fully interior positions.
double ssim(const MagnitudeImage &ref, const MagnitudeImage &test);
double ssim(const MagnitudeImage &ref, const MagnitudeImage &test, double data_range);

} // namespace sdlf::metrics
