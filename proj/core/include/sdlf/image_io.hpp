#pragma once

#include <string>
#include <vector>

#include "sdlf/metrics.hpp"

namespace sdlf::io {

/// Min-max scaled 8-bit binary PGM. Returns the (lo, hi) scaling actually
/// used so callers can record it in a sidecar file.
std::pair<double, double> write_pgm(const std::string &path,
                                    const metrics::MagnitudeImage &img);

} // namespace sdlf::io
