#pragma once

#include <vector>

#include "sdlf/errors.hpp"

namespace sdlf {

enum class WindowMode { dense, sparse };

/// Bijection between image tokens (row-major h*W+w) and (window, slot) pairs.
/// Dense windows gather contiguous MxM patches; sparse windows gather tokens
/// at strides (H/M, W/M), so one window spans the whole image. Both modes
/// yield (H*W)/(M*M) windows of M*M tokens and are exact permutations.
struct WindowLayout {
  WindowMode mode = WindowMode::dense;
  int H = 0, W = 0, M = 0;
  int n_win = 0;
  std::vector<int> fwd; // fwd[win*M*M + slot] = token index
  std::vector<int> inv; // inv[token] = win*M*M + slot

  static WindowLayout make(int H, int W, int M, WindowMode mode);
};

/// Relative-position row index for the (2M-1)^2 bias table: entry i*M*M+j is
/// the table row for query slot i and key slot j (offsets taken in slot
/// coordinates, so sparse windows share the table semantics of dense ones).
std::vector<int> relative_bias_index(int M);

} // namespace sdlf
