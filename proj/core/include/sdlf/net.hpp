#pragma once

#include <optional>

#include "sdlf/mri.hpp"
#include "sdlf/params.hpp"
#include "sdlf/window.hpp"

// The reconstruction network: a residual k-space CNN, two sparse attention
// blocks, two dense attention blocks and a final convolution, wrapped in
// hard data consistency. Sparse blocks attend over dilated windows (stride
// H/M x W/M), dense blocks over contiguous MxM windows; both are locality
// enhanced with depth-wise convolutions (LCM inside attention, LeFF in the
// feed-forward).

namespace sdlf::net {

struct ModelConfig {
  int embed_dim = 32;
  int n_heads = 4;
  int window = 8; // window side M
  int leff_ratio = 4;
  int n_sab = 2;
  int n_dab = 2;
  int kcnn_channels = 32;
  int kcnn_layers = 5;
  int n_coils = 4;
  bool enable_sab = true;
  bool enable_dab = true;
  bool enable_locality = true; // LCM + LeFF depth-wise convolutions
  bool pre_attn_norm = true;   // LN before attention (off = literal wiring)

  void validate() const {
    if (embed_dim < 1 || n_heads < 1 || embed_dim % n_heads != 0)
      throw ConfigError("ModelConfig: embed_dim=" + std::to_string(embed_dim) +
                        " must be a positive multiple of n_heads=" +
                        std::to_string(n_heads));
    if (window < 1)
      throw ConfigError("ModelConfig: window must be >= 1");
    if (leff_ratio < 1)
      throw ConfigError("ModelConfig: leff_ratio must be >= 1");
    if (kcnn_layers < 2)
      throw ConfigError("ModelConfig: kcnn_layers must be >= 2");
    if (kcnn_channels < 1 || n_coils < 1 || n_sab < 0 || n_dab < 0)
      throw ConfigError("ModelConfig: invalid block/channel counts");
  }

  bool has_trunk() const { return (enable_sab && n_sab > 0) || (enable_dab && n_dab > 0); }
};

/// [C,H,W] -> [nWin, M*M, C] token gathering along the layout.
template <typename T>
Tensor<T> window_partition(const Tensor<T> &x, const WindowLayout &l) {
  if (x.ndim() != 3 || x.dim(1) != l.H || x.dim(2) != l.W)
    throw ContractError("window_partition: input " + shape_str(x.shape()) +
                        " does not match layout " + std::to_string(l.H) + "x" +
                        std::to_string(l.W));
  const int C = x.dim(0);
  Tensor<T> tokens = permute_axes(reshape(x, {C, l.H * l.W}), {1, 0});
  return reshape(take_rows(tokens, l.fwd), {l.n_win, l.M * l.M, C});
}

/// Inverse of window_partition.
template <typename T>
Tensor<T> window_merge(const Tensor<T> &wtok, const WindowLayout &l) {
  if (wtok.ndim() != 3 || wtok.dim(0) != l.n_win || wtok.dim(1) != l.M * l.M)
    throw ContractError("window_merge: input " + shape_str(wtok.shape()) +
                        " does not match layout");
  const int C = wtok.dim(2);
  Tensor<T> tokens = take_rows(reshape(wtok, {l.H * l.W, C}), l.inv);
  return reshape(permute_axes(tokens, {1, 0}), {C, l.H, l.W});
}

namespace detail_net {

template <typename T> Tensor<T> to_tokens(const Tensor<T> &x) {
  // [C,H,W] -> [H*W, C]
  return permute_axes(reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}), {1, 0});
}

template <typename T> Tensor<T> to_image(const Tensor<T> &t, int C, int H, int W) {
  return reshape(permute_axes(t, {1, 0}), {C, H, W});
}

struct InitRules {
  double sigma = 0.02;
};

} // namespace detail_net

template <typename T> struct LinearLayer {
  Tensor<T> w, b;
  LinearLayer() = default;
  LinearLayer(ParamStore<T> &ps, const std::string &prefix, int din, int dout, Rng &rng,
              bool zero_init) {
    Tensor<T> wt = Tensor<T>::zeros({din, dout});
    if (!zero_init)
      for (auto &v : wt.mutable_data())
        v = static_cast<T>(rng.trunc_normal(0.02));
    w = ps.add(prefix + ".weight", wt);
    b = ps.add(prefix + ".bias", Tensor<T>::zeros({dout}));
  }
  Tensor<T> operator()(const Tensor<T> &x) const { return linear(x, w, b); }
};

template <typename T> struct ConvLayer {
  Tensor<T> w, b;
  int stride = 1, pad = 1, groups = 1;
  ConvLayer() = default;
  ConvLayer(ParamStore<T> &ps, const std::string &prefix, int cout, int cin_per_group,
            int kh, int kw, int groups_, Rng &rng, bool zero_init) {
    groups = groups_;
    pad = (kh - 1) / 2;
    Tensor<T> wt = Tensor<T>::zeros({cout, cin_per_group, kh, kw});
    if (!zero_init)
      for (auto &v : wt.mutable_data())
        v = static_cast<T>(rng.trunc_normal(0.02));
    w = ps.add(prefix + ".weight", wt);
    b = ps.add(prefix + ".bias", Tensor<T>::zeros({cout}));
  }
  Tensor<T> operator()(const Tensor<T> &x) const {
    return conv2d(x, w, b, stride, pad, groups);
  }
};

template <typename T> struct AffineNorm {
  Tensor<T> gamma, beta;
  AffineNorm() = default;
  AffineNorm(ParamStore<T> &ps, const std::string &prefix, int c) {
    gamma = ps.add(prefix + ".gamma", Tensor<T>::ones({c}));
    beta = ps.add(prefix + ".beta", Tensor<T>::zeros({c}));
  }
};

/// Locality-enhanced window multi-head self-attention:
/// softmax(Q K^T / sqrt(d_r) + B) V + LCM(V), heads concatenated, projected.
template <typename T> class WindowAttention {
public:
  WindowAttention() = default;
  WindowAttention(ParamStore<T> &ps, const std::string &prefix, int dim, int heads,
                  int window, bool locality, Rng &rng)
      : heads_(heads), window_(window), locality_(locality),
        q_proj_(ps, prefix + ".q_proj", dim, dim, rng, false),
        k_proj_(ps, prefix + ".k_proj", dim, dim, rng, false),
        v_proj_(ps, prefix + ".v_proj", dim, dim, rng, false),
        out_proj_(ps, prefix + ".out_proj", dim, dim, rng, true),
        bias_idx_(relative_bias_index(window)) {
    const int side = 2 * window - 1;
    rel_bias_ = ps.add(prefix + ".rel_bias", Tensor<T>::zeros({side * side, heads}));
    if (locality_)
      lcm_ = ConvLayer<T>(ps, prefix + ".lcm", dim, 1, 3, 3, dim, rng, false);
  }

  /// xw is [nWin, M*M, C].
  Tensor<T> forward(const Tensor<T> &xw) const {
    if (xw.ndim() != 3)
      throw ShapeError("lew_msa: expected [nWin,M*M,C], got " + shape_str(xw.shape()));
    const int n_win = xw.dim(0), m2 = xw.dim(1), dim = xw.dim(2);
    if (m2 != window_ * window_)
      throw ShapeError("lew_msa: token count " + std::to_string(m2) +
                       " does not match window " + std::to_string(window_));
    if (dim % heads_ != 0)
      throw ShapeError("lew_msa: dim not divisible by heads");
    const int dr = dim / heads_;
    Tensor<T> flat = reshape(xw, {n_win * m2, dim});
    Tensor<T> q = split_heads(q_proj_(flat), n_win, m2, dr);
    Tensor<T> k = split_heads(k_proj_(flat), n_win, m2, dr);
    Tensor<T> v_flat = v_proj_(flat);
    Tensor<T> v = split_heads(v_flat, n_win, m2, dr);
    Tensor<T> scores = scale(bmm(q, k, false, true),
                             static_cast<T>(1.0 / std::sqrt(static_cast<double>(dr))));
    scores = add_window_bias(scores, rel_bias_, bias_idx_, heads_);
    Tensor<T> ctx = bmm(softmax(scores, 2), v);
    Tensor<T> merged = merge_heads(ctx, n_win, m2, dim);
    if (locality_) {
      Tensor<T> vimg =
          permute_axes(reshape(v_flat, {n_win, window_, window_, dim}), {0, 3, 1, 2});
      Tensor<T> lcm_out = lcm_.value()(vimg);
      merged = add(merged, reshape(permute_axes(lcm_out, {0, 2, 3, 1}), {n_win * m2, dim}));
    }
    return reshape(out_proj_(merged), {n_win, m2, dim});
  }

  const std::vector<int> &bias_index() const { return bias_idx_; }
  Tensor<T> rel_bias() const { return rel_bias_; }
  int heads() const { return heads_; }

private:
  static Tensor<T> split_heads(const Tensor<T> &x, int n_win, int m2, int dr) {
    const int heads = x.dim(1) / dr;
    return reshape(permute_axes(reshape(x, {n_win, m2, heads, dr}), {0, 2, 1, 3}),
                   {n_win * heads, m2, dr});
  }
  static Tensor<T> merge_heads(const Tensor<T> &x, int n_win, int m2, int dim) {
    const int dr = x.dim(2);
    const int heads = dim / dr;
    return reshape(permute_axes(reshape(x, {n_win, heads, m2, dr}), {0, 2, 1, 3}),
                   {n_win * m2, dim});
  }

  int heads_ = 1, window_ = 1;
  bool locality_ = true;
  LinearLayer<T> q_proj_, k_proj_, v_proj_, out_proj_;
  Tensor<T> rel_bias_;
  std::optional<ConvLayer<T>> lcm_;
  std::vector<int> bias_idx_;
};

/// Locality-enhanced feed-forward: linear C->rC, GELU, depth-wise 3x3 on the
/// re-spatialized tokens (skipped without locality), GELU, linear rC->C.
/// Tokens are in image raster order.
template <typename T> class LocalityFeedForward {
public:
  LocalityFeedForward() = default;
  LocalityFeedForward(ParamStore<T> &ps, const std::string &prefix, int dim, int ratio,
                      bool locality, Rng &rng)
      : hidden_(dim * ratio), locality_(locality),
        fc1_(ps, prefix + ".fc1", dim, dim * ratio, rng, false),
        fc2_(ps, prefix + ".fc2", dim * ratio, dim, rng, true) {
    if (locality_)
      dw_ = ConvLayer<T>(ps, prefix + ".dw", hidden_, 1, 3, 3, hidden_, rng, false);
  }

  Tensor<T> forward(const Tensor<T> &x, int H, int W) const {
    if (x.ndim() != 2 || x.dim(0) != H * W)
      throw ContractError("leff: token count " + std::to_string(x.dim(0)) +
                          " does not match " + std::to_string(H) + "x" +
                          std::to_string(W));
    Tensor<T> h = gelu(fc1_(x));
    if (locality_) {
      Tensor<T> img = permute_axes(reshape(h, {H, W, hidden_}), {2, 0, 1});
      img = dw_.value()(img);
      h = reshape(permute_axes(img, {1, 2, 0}), {H * W, hidden_});
    }
    return fc2_(gelu(h));
  }

private:
  int hidden_ = 0;
  bool locality_ = true;
  LinearLayer<T> fc1_, fc2_;
  std::optional<ConvLayer<T>> dw_;
};

/// One locality-enhanced transformer block:
///   x' = LeWMSA(LN(x)) + x   (the pre-attention LN is optional)
///   out = LeFF(LN(x')) + x'
/// with tokens gathered densely or sparsely per the window mode.
template <typename T> class LetBlock {
public:
  LetBlock() = default;
  LetBlock(ParamStore<T> &ps, const std::string &prefix, const ModelConfig &cfg,
           WindowMode mode, Rng &rng)
      : mode_(mode), pre_norm_(cfg.pre_attn_norm), window_(cfg.window) {
    if (pre_norm_)
      ln1_ = AffineNorm<T>(ps, prefix + ".pre_ln", cfg.embed_dim);
    msa_ = WindowAttention<T>(ps, prefix + ".msa", cfg.embed_dim, cfg.n_heads,
                              cfg.window, cfg.enable_locality, rng);
    ln2_ = AffineNorm<T>(ps, prefix + ".ln2", cfg.embed_dim);
    ff_ = LocalityFeedForward<T>(ps, prefix + ".ff", cfg.embed_dim, cfg.leff_ratio,
                                 cfg.enable_locality, rng);
  }

  Tensor<T> forward(const Tensor<T> &x) const {
    if (x.ndim() != 3)
      throw ShapeError("let_block: expected [C,H,W], got " + shape_str(x.shape()));
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const WindowLayout layout = WindowLayout::make(H, W, window_, mode_);
    Tensor<T> t = detail_net::to_tokens(x);
    Tensor<T> a = pre_norm_ ? layer_norm(t, ln1_.gamma, ln1_.beta) : t;
    Tensor<T> wtok = reshape(take_rows(a, layout.fwd), {layout.n_win, window_ * window_, C});
    Tensor<T> attn = msa_.forward(wtok);
    Tensor<T> back = take_rows(reshape(attn, {H * W, C}), layout.inv);
    Tensor<T> xp = add(t, back);
    Tensor<T> ff = ff_.forward(layer_norm(xp, ln2_.gamma, ln2_.beta), H, W);
    return detail_net::to_image(add(xp, ff), C, H, W);
  }

  WindowMode mode() const { return mode_; }
  const WindowAttention<T> &attention() const { return msa_; }

private:
  WindowMode mode_ = WindowMode::dense;
  bool pre_norm_ = true;
  int window_ = 8;
  AffineNorm<T> ln1_, ln2_;
  WindowAttention<T> msa_;
  LocalityFeedForward<T> ff_;
};

/// Residual 5-layer k-space CNN: conv(3x3) + instance norm + ReLU, with no
/// norm/activation after the last convolution. Coils and re/im are stacked
/// as input channels.
template <typename T> class KSpaceCnn {
public:
  KSpaceCnn() = default;
  KSpaceCnn(ParamStore<T> &ps, const std::string &prefix, int n_coils, int channels,
            int layers, Rng &rng) {
    const int io = 2 * n_coils;
    for (int i = 0; i < layers; ++i) {
      const int cin = i == 0 ? io : channels;
      const int cout = i == layers - 1 ? io : channels;
      const bool zero = i == layers - 1;
      convs_.emplace_back(ps, prefix + "." + std::to_string(i), cout, cin, 3, 3, 1, rng,
                          zero);
      if (i < layers - 1)
        norms_.emplace_back(ps, prefix + "." + std::to_string(i) + ".in", cout);
    }
  }

  Tensor<T> forward(const Tensor<T> &y) const {
    if (y.ndim() != 4 || y.dim(1) != 2)
      throw ShapeError("kspace_cnn: expected [Nc,2,H,W], got " + shape_str(y.shape()));
    const int nc = y.dim(0), H = y.dim(2), W = y.dim(3);
    Tensor<T> x = reshape(y, {2 * nc, H, W});
    Tensor<T> h = x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      h = convs_[i](h);
      if (i + 1 < convs_.size())
        h = relu(instance_norm(h, norms_[i].gamma, norms_[i].beta));
    }
    return reshape(add(x, h), {nc, 2, H, W});
  }

private:
  std::vector<ConvLayer<T>> convs_;
  std::vector<AffineNorm<T>> norms_;
};

/// The full reconstruction pipeline. Forward:
///   k-space CNN on y1 -> hard DC against y1 -> coil combine ->
///   [embed conv -> sparse blocks -> dense blocks -> output conv] residual ->
///   final data consistency against y1.
/// The bracketed trunk is skipped when both attention stages are disabled.
template <typename T> class SdlFormer {
public:
  SdlFormer(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(seed, seed_stream::model_init, 0));
    kcnn_ = KSpaceCnn<T>(store_, "kcnn", cfg_.n_coils, cfg_.kcnn_channels,
                         cfg_.kcnn_layers, rng);
    if (cfg_.has_trunk()) {
      embed_ = ConvLayer<T>(store_, "embed", cfg_.embed_dim, 2, 3, 3, 1, rng, false);
      if (cfg_.enable_sab)
        for (int i = 0; i < cfg_.n_sab; ++i)
          blocks_.emplace_back(store_, "sab." + std::to_string(i), cfg_,
                               WindowMode::sparse, rng);
      if (cfg_.enable_dab)
        for (int i = 0; i < cfg_.n_dab; ++i)
          blocks_.emplace_back(store_, "dab." + std::to_string(i), cfg_,
                               WindowMode::dense, rng);
      out_conv_ = ConvLayer<T>(store_, "out_conv", 2, cfg_.embed_dim, 3, 3, 1, rng, true);
    }
  }

  struct ForwardDetail {
    mri::ComplexImage<T> cnn_image;    // coil-combined image after k-space CNN + DC
    mri::ComplexImage<T> pre_dc_image; // image entering the final DC
    Tensor<T> dc_kspace;               // per-coil k-space after the final replacement
    mri::ComplexImage<T> output;
  };

  ForwardDetail forward_detail(const mri::KSpace<T> &y1, const mri::CoilSensitivities<T> &s,
                               const mri::SamplingMask &m1) const {
    if (y1.coils() != cfg_.n_coils)
      throw ShapeError("forward: model built for " + std::to_string(cfg_.n_coils) +
                       " coils, data has " + std::to_string(y1.coils()));
    const int H = y1.height(), W = y1.width();
    Tensor<T> k0 = kcnn_.forward(y1.data);
    Tensor<T> kdc = mri::kspace_replace(k0, y1, m1);
    mri::ComplexImage<T> x0 = mri::coil_combine(mri::KSpace<T>(kdc), s);
    mri::ComplexImage<T> xi = x0;
    if (cfg_.has_trunk()) {
      Tensor<T> img = x0.data;
      const int M = cfg_.window;
      const int ph = (M - H % M) % M, pw = (M - W % M) % M;
      if (ph || pw)
        img = pad_reflect2d(img, 0, ph, 0, pw);
      Tensor<T> e = embed_(img);
      for (const auto &blk : blocks_)
        e = blk.forward(e);
      Tensor<T> r = out_conv_(e);
      if (ph || pw)
        r = crop2d(r, 0, 0, H, W);
      xi = mri::ComplexImage<T>(add(x0.data, r));
    }
    auto dc = mri::data_consistency_detail(xi, y1, s, m1);
    return ForwardDetail{x0, xi, dc.kspace, dc.image};
  }

  mri::ComplexImage<T> forward(const mri::KSpace<T> &y1, const mri::CoilSensitivities<T> &s,
                               const mri::SamplingMask &m1) const {
    return forward_detail(y1, s, m1).output;
  }

  const ModelConfig &config() const { return cfg_; }
  ParamStore<T> &params() { return store_; }
  const ParamStore<T> &params() const { return store_; }
  std::int64_t param_count() const { return store_.count_values(); }
  const std::vector<LetBlock<T>> &blocks() const { return blocks_; }

private:
  ModelConfig cfg_;
  ParamStore<T> store_;
  KSpaceCnn<T> kcnn_;
  ConvLayer<T> embed_, out_conv_;
  std::vector<LetBlock<T>> blocks_;
};

} // namespace sdlf::net
