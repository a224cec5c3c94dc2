#include "sdlf/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sdlf::io {

std::pair<double, double> write_pgm(const std::string &path,
                                    const metrics::MagnitudeImage &img) {
  double lo = img.v.empty() ? 0.0 : img.v[0];
  double hi = lo;
  for (double v : img.v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IoError("write_pgm: cannot open '" + path + "'");
  os << "P5\n" << img.w << " " << img.h << "\n255\n";
  for (double v : img.v) {
    const int b = static_cast<int>(std::lround(255.0 * (v - lo) / span));
    os.put(static_cast<char>(std::clamp(b, 0, 255)));
  }
  if (!os)
    throw IoError("write_pgm: write failed for '" + path + "'");
  return {lo, hi};
}

} // namespace sdlf::io
