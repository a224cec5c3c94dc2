#include <doctest.h>

#include "sdlf/nn.hpp"
#include "sdlf/ops.hpp"
#include "sdlf/window.hpp"
#include "testutil.hpp"

using namespace sdlf;
using testutil::grad_check;
using testutil::rand_tensor;
using testutil::rand_tensor_away_from_zero;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("linear identity and sum-plus-bias") {
  auto x = Tensor<double>::from_vector({1, 2}, {1.0, 2.0});
  auto w = Tensor<double>::from_vector({2, 2}, {1.0, 0.0, 0.0, 1.0});
  auto b = Tensor<double>::zeros({2});
  auto y = linear(x, w, b);
  CHECK(y.at({0, 0}) == doctest::Approx(1.0));
  CHECK(y.at({0, 1}) == doctest::Approx(2.0));

  auto x2 = Tensor<double>::from_vector({1, 2}, {1.0, 1.0});
  auto w2 = Tensor<double>::from_vector({2, 1}, {1.0, 1.0});
  auto b2 = Tensor<double>::from_vector({1}, {1.0});
  CHECK(linear(x2, w2, b2).item() == doctest::Approx(3.0));
}

TEST_CASE("linear matches the triple-loop oracle") {
  Rng rng(11);
  auto x = rand_tensor({3, 4}, rng);
  auto w = rand_tensor({4, 2}, rng);
  auto b = rand_tensor({2}, rng);
  auto y = linear(x, w, b);
  const auto ref = testutil::naive_matmul_bias(
      {x.data().begin(), x.data().end()}, 3, 4, {w.data().begin(), w.data().end()}, 2,
      {b.data().begin(), b.data().end()});
  CHECK(testutil::max_abs_diff(y.data(), ref) < 1e-12);
}

TEST_CASE("linear rejects mismatched shapes and names both") {
  auto x = Tensor<double>::zeros({2, 3});
  auto w = Tensor<double>::zeros({4, 2});
  auto b = Tensor<double>::zeros({2});
  try {
    linear(x, w, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,2]") != std::string::npos);
  }
}

TEST_CASE("conv2d identity kernel, impulse response, depthwise oracle") {
  Rng rng(7);
  // 1x1 kernel of value 1 reproduces the input
  auto x = rand_tensor({1, 4, 5}, rng);
  auto k1 = Tensor<double>::ones({1, 1, 1, 1});
  auto y = conv2d(x, k1, Tensor<double>::zeros({1}), 1, 0, 1);
  CHECK(testutil::max_abs_diff(y.data(), x.data()) == 0.0);

  // delta input reproduces the kernel centered at the pixel
  auto delta = Tensor<double>::zeros({1, 5, 5});
  delta.mutable_data()[2 * 5 + 2] = 1.0;
  auto k3 = rand_tensor({1, 1, 3, 3}, rng);
  auto imp = conv2d(delta, k3, Tensor<double>::zeros({1}), 1, 1, 1);
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v)
      CHECK(imp.at({0, 1 + u, 1 + v}) == doctest::Approx(k3.at({0, 0, u, v})));

  // depthwise vs the six-loop oracle
  auto xd = rand_tensor({2, 5, 5}, rng);
  auto kd = rand_tensor({2, 1, 3, 3}, rng);
  auto bd = rand_tensor({2}, rng);
  auto yd = conv2d(xd, kd, bd, 1, 1, 2);
  const auto ref = testutil::naive_conv2d({xd.data().begin(), xd.data().end()}, 2, 5, 5,
                                          {kd.data().begin(), kd.data().end()}, 2, 3, 3,
                                          {bd.data().begin(), bd.data().end()}, 1, 1, 2);
  CHECK(testutil::max_abs_diff(yd.data(), ref) < 1e-12);
}

TEST_CASE("conv2d grouped/strided/batched against the oracle") {
  Rng rng(19);
  // groups=2 with multiple channels per group, stride 2
  auto x = rand_tensor({4, 7, 6}, rng);
  auto k = rand_tensor({6, 2, 3, 3}, rng);
  auto b = rand_tensor({6}, rng);
  auto y = conv2d(x, k, b, 2, 1, 2);
  const auto ref = testutil::naive_conv2d({x.data().begin(), x.data().end()}, 4, 7, 6,
                                          {k.data().begin(), k.data().end()}, 6, 3, 3,
                                          {b.data().begin(), b.data().end()}, 2, 1, 2);
  CHECK(testutil::max_abs_diff(y.data(), ref) < 1e-12);

  // batched input runs the same kernel per item
  auto xb = rand_tensor({3, 4, 7, 6}, rng);
  auto yb = conv2d(xb, k, b, 2, 1, 2);
  for (int bi = 0; bi < 3; ++bi) {
    std::vector<double> item(xb.data().begin() + bi * 4 * 7 * 6,
                             xb.data().begin() + (bi + 1) * 4 * 7 * 6);
    const auto r = testutil::naive_conv2d(item, 4, 7, 6, {k.data().begin(), k.data().end()},
                                          6, 3, 3, {b.data().begin(), b.data().end()}, 2, 1, 2);
    std::vector<double> got(yb.data().begin() + bi * static_cast<int>(r.size()),
                            yb.data().begin() + (bi + 1) * static_cast<int>(r.size()));
    CHECK(testutil::max_abs_diff(got, r) < 1e-12);
  }
}

TEST_CASE("conv2d rejects bad groups") {
  auto x = Tensor<double>::zeros({3, 5, 5});
  auto k = Tensor<double>::zeros({4, 1, 3, 3});
  auto b = Tensor<double>::zeros({4});
  CHECK_THROWS_AS(conv2d(x, k, b, 1, 1, 2), ConfigError);
}

TEST_CASE("layer_norm examples") {
  // constant row -> zeros via eps
  auto x = Tensor<double>::full({1, 4}, 3.5);
  auto g = Tensor<double>::ones({4});
  auto b = Tensor<double>::zeros({4});
  auto y = layer_norm(x, g, b);
  for (int c = 0; c < 4; ++c)
    CHECK(std::abs(y.at({0, c})) < 1e-12);

  // already standardized row passes through as eps -> 0
  auto x2 = Tensor<double>::from_vector({1, 2}, {1.0, -1.0});
  auto y2 = layer_norm(x2, Tensor<double>::ones({2}), Tensor<double>::zeros({2}), 1e-12);
  CHECK(y2.at({0, 0}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(y2.at({0, 1}) == doctest::Approx(-1.0).epsilon(1e-6));

  // random rows standardize: recomputed moments
  Rng rng(3);
  auto xr = rand_tensor({4, 8}, rng);
  auto yr = layer_norm(xr, Tensor<double>::ones({8}), Tensor<double>::zeros({8}));
  for (int r = 0; r < 4; ++r) {
    double mu = 0, var = 0;
    for (int c = 0; c < 8; ++c)
      mu += yr.at({r, c});
    mu /= 8;
    for (int c = 0; c < 8; ++c)
      var += (yr.at({r, c}) - mu) * (yr.at({r, c}) - mu);
    var /= 8;
    CHECK(std::abs(mu) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("instance_norm examples") {
  auto x = Tensor<double>::full({2, 3, 3}, 7.0);
  auto g = Tensor<double>::ones({2});
  auto b = Tensor<double>::zeros({2});
  auto y = instance_norm(x, g, b);
  for (double v : y.data())
    CHECK(std::abs(v) < 1e-12);

  auto b5 = Tensor<double>::full({2}, 5.0);
  auto y5 = instance_norm(x, g, b5);
  for (double v : y5.data())
    CHECK(v == doctest::Approx(5.0));

  Rng rng(5);
  auto xr = rand_tensor({3, 6, 5}, rng);
  auto yr = instance_norm(xr, Tensor<double>::ones({3}), Tensor<double>::zeros({3}));
  for (int c = 0; c < 3; ++c) {
    double mu = 0, var = 0;
    for (int i = 0; i < 30; ++i)
      mu += yr.data()[c * 30 + i];
    mu /= 30;
    for (int i = 0; i < 30; ++i)
      var += (yr.data()[c * 30 + i] - mu) * (yr.data()[c * 30 + i] - mu);
    var /= 30;
    CHECK(std::abs(mu) < 1e-10);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("activation examples") {
  auto s = softmax(Tensor<double>::from_vector({2}, {0.0, 0.0}), 0);
  CHECK(s.at({0}) == doctest::Approx(0.5));
  CHECK(s.at({1}) == doctest::Approx(0.5));

  auto r = relu(Tensor<double>::from_vector({2}, {-1.0, 2.0}));
  CHECK(r.at({0}) == 0.0);
  CHECK(r.at({1}) == 2.0);

  auto big = softmax(Tensor<double>::from_vector({2}, {1000.0, 1000.0}), 0);
  CHECK(big.at({0}) == doctest::Approx(0.5));
  CHECK(std::isfinite(big.at({1})));
}

TEST_CASE("softmax rows: nonnegative, sum to one, shift invariant") {
  Rng rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    auto x = rand_tensor({3, 7}, rng, -5.0, 5.0, false);
    auto y = softmax(x, 1);
    for (int r = 0; r < 3; ++r) {
      double s = 0;
      for (int c = 0; c < 7; ++c) {
        CHECK(y.at({r, c}) >= 0.0);
        s += y.at({r, c});
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    // additive shift leaves the result unchanged
    std::vector<double> shifted(x.data().begin(), x.data().end());
    for (auto &v : shifted)
      v += 17.25;
    auto y2 = softmax(Tensor<double>::from_vector({3, 7}, std::move(shifted)), 1);
    CHECK(testutil::max_abs_diff(y.data(), y2.data()) < 1e-12);
  }
}

TEST_CASE("l1_loss examples and gradient sign") {
  auto a = Tensor<double>::from_vector({2}, {1.0, -1.0});
  CHECK(l1_loss(a, a).item() == 0.0);

  auto z = Tensor<double>::from_vector({2}, {0.0, 0.0});
  auto t = Tensor<double>::from_vector({2}, {1.0, -1.0});
  CHECK(l1_loss(z, t).item() == doctest::Approx(1.0));

  auto p = Tensor<double>::from_vector({1}, {2.0}, true);
  auto q = Tensor<double>::from_vector({1}, {0.0});
  auto loss = l1_loss(p, q);
  backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("backward fills leaves exactly once") {
  auto x = Tensor<double>::from_vector({3}, {1.0, 2.0, -3.0}, true);
  auto loss = sum_all(x);
  backward(loss);
  for (double g : x.grad())
    CHECK(g == 1.0);

  auto x2 = Tensor<double>::from_vector({2}, {1.0, 2.0}, true);
  auto loss2 = sum_all(mul(x2, x2));
  backward(loss2);
  CHECK(x2.grad()[0] == doctest::Approx(2.0));
  CHECK(x2.grad()[1] == doctest::Approx(4.0));

  // diamond graph: y used twice accumulates both paths
  auto x3 = Tensor<double>::from_vector({1}, {3.0}, true);
  auto loss3 = sum_all(add(x3, x3));
  backward(loss3);
  CHECK(x3.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("backward rejects non-scalar outputs") {
  auto x = Tensor<double>::zeros({2, 2}, true);
  auto y = add(x, x);
  CHECK_THROWS_AS(backward(y), ContractError);
}

TEST_CASE("gradients: elementwise and structural ops") {
  Rng rng(101);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(3));
    const int m = 2 + static_cast<int>(rng.uniform_int(3));
    auto a = rand_tensor({n, m}, rng);
    auto b = rand_tensor({n, m}, rng);
    auto mixer = rand_tensor({n, m}, rng, -1, 1, false);

    auto fn_add = [&] { return sum_all(mul(add(a, b), mixer)); };
    CHECK(grad_check(fn_add, {a, b}).max_rel_err < 1e-4);

    auto fn_sub = [&] { return sum_all(mul(sub(a, b), mixer)); };
    CHECK(grad_check(fn_sub, {a, b}).max_rel_err < 1e-4);

    auto fn_mul = [&] { return sum_all(mul(mul(a, b), mixer)); };
    CHECK(grad_check(fn_mul, {a, b}).max_rel_err < 1e-4);

    auto fn_scale = [&] { return scale(sum_all(mul(a, mixer)), 1.7); };
    CHECK(grad_check(fn_scale, {a}).max_rel_err < 1e-4);

    auto c = rand_tensor_away_from_zero({n, m}, rng);
    auto fn_abs = [&] { return sum_abs(c); };
    CHECK(grad_check(fn_abs, {c}).max_rel_err < 1e-4);

    auto d = rand_tensor_away_from_zero({n, m}, rng, 0.3, 1.0);
    auto e = Tensor<double>::zeros({n, m});
    auto fn_l1 = [&] { return l1_loss(d, e); };
    CHECK(grad_check(fn_l1, {d}).max_rel_err < 1e-4);

    std::vector<int> perm{1, 0};
    auto fn_perm = [&] { return sum_all(mul(permute_axes(a, perm), permute_axes(mixer, perm))); };
    CHECK(grad_check(fn_perm, {a}).max_rel_err < 1e-4);

    auto fn_reshape = [&] { return sum_all(mul(reshape(a, {m, n}), reshape(mixer, {m, n}))); };
    CHECK(grad_check(fn_reshape, {a}).max_rel_err < 1e-4);
  }
}

TEST_CASE("gradients: gather/stack/pad/crop") {
  Rng rng(202);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = rand_tensor({4, 3}, rng);
    std::vector<int> idx{3, 0, 2, 1};
    auto mixer = rand_tensor({4, 3}, rng, -1, 1, false);
    auto fn_rows = [&] { return sum_all(mul(take_rows(a, idx), mixer)); };
    CHECK(grad_check(fn_rows, {a}).max_rel_err < 1e-4);

    // non-bijective gather accumulates
    std::vector<int> dup{1, 1, 0, 2};
    auto fn_dup = [&] { return sum_all(mul(take_rows(a, dup), mixer)); };
    CHECK(grad_check(fn_dup, {a}).max_rel_err < 1e-4);

    auto p1 = rand_tensor({2, 3}, rng);
    auto p2 = rand_tensor({2, 3}, rng);
    auto mix2 = rand_tensor({2, 2, 3}, rng, -1, 1, false);
    auto fn_stack = [&] { return sum_all(mul(stack0<double>({p1, p2}), mix2)); };
    CHECK(grad_check(fn_stack, {p1, p2}).max_rel_err < 1e-4);

    auto img = rand_tensor({2, 6, 5}, rng);
    auto mixc = rand_tensor({2, 3, 2}, rng, -1, 1, false);
    auto fn_crop = [&] { return sum_all(mul(crop2d(img, 1, 2, 3, 2), mixc)); };
    CHECK(grad_check(fn_crop, {img}).max_rel_err < 1e-4);

    auto mixp = rand_tensor({2, 9, 8}, rng, -1, 1, false);
    auto fn_pad = [&] { return sum_all(mul(pad_reflect2d(img, 1, 2, 2, 1), mixp)); };
    CHECK(grad_check(fn_pad, {img}).max_rel_err < 1e-4);

    auto s = rand_tensor({3, 2, 2}, rng);
    auto mixs = rand_tensor({2, 2}, rng, -1, 1, false);
    auto fn_sel = [&] { return sum_all(mul(select0(s, 1), mixs)); };
    CHECK(grad_check(fn_sel, {s}).max_rel_err < 1e-4);
  }
}

TEST_CASE("gradients: linear, bmm, conv, norms, activations, softmax") {
  Rng rng(303);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(3));
    const int din = 2 + static_cast<int>(rng.uniform_int(3));
    const int dout = 2 + static_cast<int>(rng.uniform_int(3));
    auto x = rand_tensor({n, din}, rng);
    auto w = rand_tensor({din, dout}, rng);
    auto b = rand_tensor({dout}, rng);
    auto mix = rand_tensor({n, dout}, rng, -1, 1, false);
    auto fn_lin = [&] { return sum_all(mul(linear(x, w, b), mix)); };
    CHECK(grad_check(fn_lin, {x, w, b}).max_rel_err < 1e-4);

    const bool ta = rng.uniform01() < 0.5, tb = rng.uniform01() < 0.5;
    const int B = 2, nn = 3, mm = 2, pp = 3;
    auto A = rand_tensor(ta ? Shape{B, mm, nn} : Shape{B, nn, mm}, rng);
    auto C = rand_tensor(tb ? Shape{B, pp, mm} : Shape{B, mm, pp}, rng);
    auto mixb = rand_tensor({B, nn, pp}, rng, -1, 1, false);
    auto fn_bmm = [&] { return sum_all(mul(bmm(A, C, ta, tb), mixb)); };
    CHECK(grad_check(fn_bmm, {A, C}).max_rel_err < 1e-4);

    auto xc = rand_tensor({2, 5, 4}, rng);
    auto kc = rand_tensor({4, 1, 3, 3}, rng);
    auto bc = rand_tensor({4}, rng);
    auto mixcv = rand_tensor({4, 5, 4}, rng, -1, 1, false);
    auto fn_conv = [&] { return sum_all(mul(conv2d(xc, kc, bc, 1, 1, 2), mixcv)); };
    CHECK(grad_check(fn_conv, {xc, kc, bc}).max_rel_err < 1e-4);

    auto xl = rand_tensor({3, 5}, rng);
    auto gl = rand_tensor({5}, rng, 0.5, 1.5);
    auto bl = rand_tensor({5}, rng);
    auto mixl = rand_tensor({3, 5}, rng, -1, 1, false);
    auto fn_ln = [&] { return sum_all(mul(layer_norm(xl, gl, bl), mixl)); };
    CHECK(grad_check(fn_ln, {xl, gl, bl}).max_rel_err < 1e-4);

    auto xi = rand_tensor({2, 4, 3}, rng);
    auto gi = rand_tensor({2}, rng, 0.5, 1.5);
    auto bi = rand_tensor({2}, rng);
    auto mixi = rand_tensor({2, 4, 3}, rng, -1, 1, false);
    auto fn_in = [&] { return sum_all(mul(instance_norm(xi, gi, bi), mixi)); };
    CHECK(grad_check(fn_in, {xi, gi, bi}).max_rel_err < 1e-4);

    auto xr = rand_tensor_away_from_zero({n, din}, rng);
    auto mixr = rand_tensor({n, din}, rng, -1, 1, false);
    auto fn_relu = [&] { return sum_all(mul(relu(xr), mixr)); };
    CHECK(grad_check(fn_relu, {xr}).max_rel_err < 1e-4);

    auto xg = rand_tensor({n, din}, rng, -2.0, 2.0);
    auto fn_gelu = [&] { return sum_all(mul(gelu(xg), mixr)); };
    CHECK(grad_check(fn_gelu, {xg}).max_rel_err < 1e-4);

    auto xs = rand_tensor({n, din}, rng, -2.0, 2.0);
    auto fn_sm = [&] { return sum_all(mul(softmax(xs, 1), mixr)); };
    CHECK(grad_check(fn_sm, {xs}).max_rel_err < 1e-4);
  }
}

TEST_CASE("gradients: window bias add") {
  Rng rng(404);
  const int M = 2, heads = 2, n_win = 3, L = M * M;
  const auto idx = relative_bias_index(M);
  for (int rep = 0; rep < 5; ++rep) {
    auto scores = rand_tensor({n_win * heads, L, L}, rng);
    auto table = rand_tensor({(2 * M - 1) * (2 * M - 1), heads}, rng);
    auto mix = rand_tensor({n_win * heads, L, L}, rng, -1, 1, false);
    auto fn = [&] { return sum_all(mul(add_window_bias(scores, table, idx, heads), mix)); };
    CHECK(grad_check(fn, {scores, table}).max_rel_err < 1e-4);
  }
}

TEST_CASE("determinism: identical seeds give bitwise identical pipelines") {
  auto run = [] {
    Rng rng(999);
    auto x = rand_tensor({4, 6}, rng);
    auto w = rand_tensor({6, 3}, rng);
    auto b = rand_tensor({3}, rng);
    auto y = softmax(gelu(linear(x, w, b)), 1);
    backward(sum_abs(y));
    std::vector<double> out(y.data().begin(), y.data().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == b[i]);
}

TEST_SUITE_END();
