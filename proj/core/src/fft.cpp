#include "sdlf/detail/fft_kernel.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <vector>

namespace sdlf::detail {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// twiddle tables are cached per (n, sign); single-threaded access only
const std::vector<cd> &twiddle(int n, int sign) {
  static std::map<std::pair<int, int>, std::vector<cd>> cache;
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  std::vector<cd> t(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double a = sign * kTwoPi * k / n;
    t[static_cast<std::size_t>(k)] = cd(std::cos(a), std::sin(a));
  }
  return cache.emplace(key, std::move(t)).first->second;
}

void fft_radix2(cd *a, int n, int sign) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1)
      j ^= bit;
    j ^= bit;
    if (i < j)
      std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const auto &tw = twiddle(len, sign);
    const int half = len / 2;
    for (int i = 0; i < n; i += len)
      for (int k = 0; k < half; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + half] * tw[static_cast<std::size_t>(k)];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
  }
}

void dft_naive(cd *a, int n, int sign) {
  const auto &tw = twiddle(n, sign);
  std::vector<cd> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    cd s(0.0, 0.0);
    for (int j = 0; j < n; ++j)
      s += a[j] * tw[static_cast<std::size_t>((static_cast<long long>(k) * j) % n)];
    out[static_cast<std::size_t>(k)] = s;
  }
  for (int k = 0; k < n; ++k)
    a[k] = out[static_cast<std::size_t>(k)];
}

void fft1d(cd *a, int n, int sign) {
  if (n == 1)
    return;
  if (is_pow2(n))
    fft_radix2(a, n, sign);
  else
    dft_naive(a, n, sign);
}

} // namespace

void fft2_centered(int H, int W, const double *re_in, const double *im_in,
                   double *re_out, double *im_out, bool inverse) {
  const int sign = inverse ? +1 : -1;
  const int sh = H / 2, sw = W / 2; // ifftshift offsets
  std::vector<cd> grid(static_cast<std::size_t>(H) * W);
  // load with ifftshift so the centered convention becomes the standard one
  for (int r = 0; r < H; ++r) {
    const int src_r = (r + sh) % H;
    for (int c = 0; c < W; ++c) {
      const int src_c = (c + sw) % W;
      const std::size_t s = static_cast<std::size_t>(src_r) * W + src_c;
      grid[static_cast<std::size_t>(r) * W + c] = cd(re_in[s], im_in[s]);
    }
  }
  std::vector<cd> colbuf(static_cast<std::size_t>(H));
  for (int r = 0; r < H; ++r)
    fft1d(grid.data() + static_cast<std::size_t>(r) * W, W, sign);
  for (int c = 0; c < W; ++c) {
    for (int r = 0; r < H; ++r)
      colbuf[static_cast<std::size_t>(r)] = grid[static_cast<std::size_t>(r) * W + c];
    fft1d(colbuf.data(), H, sign);
    for (int r = 0; r < H; ++r)
      grid[static_cast<std::size_t>(r) * W + c] = colbuf[static_cast<std::size_t>(r)];
  }
  // orthonormal scaling; both directions divide by sqrt(HW)
  const double scale = 1.0 / std::sqrt(static_cast<double>(H) * W);
  // store with fftshift
  const int fh = (H + 1) / 2, fw = (W + 1) / 2; // fftshift = inverse offsets
  for (int r = 0; r < H; ++r) {
    const int src_r = (r + fh) % H;
    for (int c = 0; c < W; ++c) {
      const int src_c = (c + fw) % W;
      const cd v = grid[static_cast<std::size_t>(src_r) * W + src_c] * scale;
      re_out[static_cast<std::size_t>(r) * W + c] = v.real();
      im_out[static_cast<std::size_t>(r) * W + c] = v.imag();
    }
  }
}

} // namespace sdlf::detail
