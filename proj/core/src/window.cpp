#include "sdlf/window.hpp"

#include <string>

namespace sdlf {

WindowLayout WindowLayout::make(int H, int W, int M, WindowMode mode) {
  if (M < 1 || H < M || W < M || H % M != 0 || W % M != 0)
    throw ContractError("WindowLayout: H=" + std::to_string(H) + ", W=" +
                        std::to_string(W) + " must be positive multiples of M=" +
                        std::to_string(M));
  WindowLayout l;
  l.mode = mode;
  l.H = H;
  l.W = W;
  l.M = M;
  l.n_win = (H / M) * (W / M);
  l.fwd.assign(static_cast<std::size_t>(H) * W, -1);
  l.inv.assign(static_cast<std::size_t>(H) * W, -1);
  const int M2 = M * M;
  if (mode == WindowMode::dense) {
    const int wb = W / M;
    for (int a = 0; a < H / M; ++a)
      for (int b = 0; b < wb; ++b) {
        const int win = a * wb + b;
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < M; ++j) {
            const int tok = (a * M + i) * W + (b * M + j);
            const int slot = win * M2 + i * M + j;
            l.fwd[static_cast<std::size_t>(slot)] = tok;
            l.inv[static_cast<std::size_t>(tok)] = slot;
          }
      }
  } else {
    const int sh = H / M, sw = W / M;
    for (int a = 0; a < sh; ++a)
      for (int b = 0; b < sw; ++b) {
        const int win = a * sw + b;
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < M; ++j) {
            const int tok = (a + i * sh) * W + (b + j * sw);
            const int slot = win * M2 + i * M + j;
            l.fwd[static_cast<std::size_t>(slot)] = tok;
            l.inv[static_cast<std::size_t>(tok)] = slot;
          }
      }
  }
  return l;
}

std::vector<int> relative_bias_index(int M) {
  const int M2 = M * M;
  const int side = 2 * M - 1;
  std::vector<int> idx(static_cast<std::size_t>(M2) * M2);
  for (int i = 0; i < M2; ++i) {
    const int iy = i / M, ix = i % M;
    for (int j = 0; j < M2; ++j) {
      const int jy = j / M, jx = j % M;
      const int dy = iy - jy + M - 1;
      const int dx = ix - jx + M - 1;
      idx[static_cast<std::size_t>(i) * M2 + j] = dy * side + dx;
    }
  }
  return idx;
}

} // namespace sdlf
