#include <doctest.h>

#include "sdlf/fourier.hpp"
#include "testutil.hpp"

using namespace sdlf;
using testutil::grad_check;
using testutil::rand_tensor;

namespace {

Tensor<double> random_field(int h, int w, Rng &rng, bool rg = false) {
  return rand_tensor({2, h, w}, rng, -1.0, 1.0, rg);
}

std::vector<std::complex<double>> to_complex(const Tensor<double> &t) {
  const std::size_t L = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
  std::vector<std::complex<double>> out(L);
  for (std::size_t i = 0; i < L; ++i)
    out[i] = {t.data()[i], t.data()[L + i]};
  return out;
}

double norm2(std::span<const double> v) {
  double s = 0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

} // namespace

TEST_SUITE_BEGIN("fft");

TEST_CASE("constant field concentrates at the centered DC bin") {
  auto x = Tensor<double>::ones({2, 2, 2});
  for (std::size_t i = 4; i < 8; ++i)
    x.mutable_data()[i] = 0.0; // purely real ones
  auto y = fft2c(x);
  CHECK(y.at({0, 1, 1}) == doctest::Approx(2.0));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      if (r == 1 && c == 1)
        continue;
      CHECK(std::abs(y.at({0, r, c})) < 1e-14);
      CHECK(std::abs(y.at({1, r, c})) < 1e-14);
    }
}

TEST_CASE("roundtrip and Parseval on random fields") {
  Rng rng(42);
  for (auto [h, w] : {std::pair{8, 6}, std::pair{16, 16}, std::pair{9, 7}}) {
    auto x = random_field(h, w, rng);
    auto y = fft2c(x);
    auto back = ifft2c(y);
    CHECK(testutil::max_abs_diff(back.data(), x.data()) < 1e-10);
    CHECK(std::abs(norm2(x.data()) - norm2(y.data())) < 1e-10);
  }
}

TEST_CASE("matches the direct centered DFT oracle (pow2 and non-pow2)") {
  Rng rng(43);
  for (auto [h, w] : {std::pair{8, 8}, std::pair{6, 10}, std::pair{5, 8}}) {
    auto x = random_field(h, w, rng);
    auto y = fft2c(x);
    std::vector<std::complex<double>> ref;
    testutil::naive_dft2c(h, w, to_complex(x), ref, false);
    const auto yc = to_complex(y);
    double worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst = std::max(worst, std::abs(ref[i] - yc[i]));
    CHECK(worst < 1e-10);

    auto z = ifft2c(x);
    testutil::naive_dft2c(h, w, to_complex(x), ref, true);
    const auto zc = to_complex(z);
    worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      worst = std::max(worst, std::abs(ref[i] - zc[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("exact adjointness: <F x, y> == <x, F* y>") {
  Rng rng(44);
  for (int rep = 0; rep < 5; ++rep) {
    auto x = random_field(8, 6, rng);
    auto y = random_field(8, 6, rng);
    const double lhs = dot(fft2c(x).data(), y.data());
    const double rhs = dot(x.data(), ifft2c(y).data());
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("fft2c/ifft2c gradients") {
  Rng rng(45);
  for (int rep = 0; rep < 5; ++rep) {
    auto x = random_field(4 + static_cast<int>(rng.uniform_int(3)),
                          4 + static_cast<int>(rng.uniform_int(4)), rng, true);
    auto mix =
        rand_tensor(x.shape(), rng, -1, 1, false);
    auto fn_f = [&] { return sum_all(mul(fft2c(x), mix)); };
    CHECK(grad_check(fn_f, {x}).max_rel_err < 1e-4);
    auto fn_i = [&] { return sum_all(mul(ifft2c(x), mix)); };
    CHECK(grad_check(fn_i, {x}).max_rel_err < 1e-4);
  }
}

TEST_CASE("complex multiply and conjugate match std::complex") {
  Rng rng(46);
  auto a = random_field(8, 8, rng, true);
  auto b = random_field(8, 8, rng, true);
  auto p = cmul(a, b);
  const auto ac = to_complex(a), bc = to_complex(b), pc = to_complex(p);
  for (std::size_t i = 0; i < ac.size(); ++i)
    CHECK(std::abs(pc[i] - ac[i] * bc[i]) < 1e-12);

  auto cj = cconj(a);
  const auto cc = to_complex(cj);
  for (std::size_t i = 0; i < ac.size(); ++i)
    CHECK(std::abs(cc[i] - std::conj(ac[i])) < 1e-15);

  auto mix = rand_tensor(a.shape(), rng, -1, 1, false);
  auto fn_mul = [&] { return sum_all(mul(cmul(a, b), mix)); };
  CHECK(grad_check(fn_mul, {a, b}).max_rel_err < 1e-4);
  auto fn_conj = [&] { return sum_all(mul(cconj(a), mix)); };
  CHECK(grad_check(fn_conj, {a}).max_rel_err < 1e-4);
}

TEST_SUITE_END();
