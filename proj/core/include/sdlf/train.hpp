#pragma once

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>

#include "sdlf/checkpoint.hpp"
#include "sdlf/config.hpp"
#include "sdlf/metrics.hpp"
#include "sdlf/slice_io.hpp"

namespace sdlf::train {

/// Step schedule: lr * gamma^(epoch / step).
inline double lr_at(int epoch, const TrainConfig &cfg) {
  return cfg.lr * std::pow(cfg.sched_gamma, epoch / cfg.sched_step);
}

/// Self-supervised k-space loss: mean L1 between the loss-mask entries of
/// the re-projected prediction and the held-out measurements y2. The mean
/// runs over the sampled entries only (both re/im of every coil), and the
/// gradient flows only through those entries.
template <typename T>
Tensor<T> ssl_loss(const mri::ComplexImage<T> &x_pred, const mri::CoilSensitivities<T> &s,
                   const mri::SamplingMask &m2, const mri::KSpace<T> &y2) {
  const int n2 = m2.sampled();
  if (n2 == 0)
    throw ContractError("ssl_loss: loss mask m2 is empty");
  const int h = x_pred.height();
  mri::detail_mri::check_geometry("ssl_loss", y2.coils(), h, x_pred.width(), s, &m2);
  const Tensor<T> m2t = mri::mask_field<T>(m2, h);
  const mri::KSpace<T> y2m = mri::apply_mask(y2, m2);
  Tensor<T> total;
  for (int i = 0; i < s.coils(); ++i) {
    Tensor<T> khat = fft2c(cmul(select0(s.maps, i), x_pred.data));
    Tensor<T> diff = sub(mul(khat, m2t), select0(y2m.data, i));
    Tensor<T> term = sum_abs(diff);
    total = i == 0 ? term : add(total, term);
  }
  const T denom = static_cast<T>(2) * static_cast<T>(s.coils()) * static_cast<T>(h) *
                  static_cast<T>(n2);
  return scale(total, T(1) / denom);
}

/// Supervised image loss: mean L1 over the 2-channel complex images.
template <typename T>
Tensor<T> supervised_loss(const mri::ComplexImage<T> &pred, const mri::ComplexImage<T> &gt) {
  return l1_loss(pred.data, gt.data);
}

/// Bias-corrected Adam without weight decay.
template <typename T> class Adam {
public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long long step_count() const { return t_; }

  void step(ParamStore<T> &params) {
    ensure_state(params);
    ++t_;
    const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
    const T bc1 = static_cast<T>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const T alpha = static_cast<T>(lr_);
    const T eps = static_cast<T>(eps_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto &p = params.items()[k].tensor;
      if (!p.has_grad())
        throw ContractError("Adam: parameter '" + params.items()[k].name +
                            "' has no gradient");
      auto g = p.grad();
      auto w = p.mutable_data();
      auto &m = m_[k];
      auto &v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        w[i] -= alpha * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  /// Appends the moments and step counter as "optim.*" tensors.
  void export_state(io::Checkpoint &c, const ParamStore<T> &params) const {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const std::string &name = params.items()[k].name;
      const Shape &shape = params.items()[k].tensor.shape();
      io::NamedTensor mt, vt;
      mt.name = "optim.m." + name;
      vt.name = "optim.v." + name;
      mt.dtype = vt.dtype = io::dtype_code<T>();
      mt.shape = vt.shape = shape;
      if constexpr (std::is_same_v<T, float>) {
        mt.f32 = m_.size() > k ? m_[k] : std::vector<T>(params.items()[k].tensor.numel(), T(0));
        vt.f32 = v_.size() > k ? v_[k] : std::vector<T>(params.items()[k].tensor.numel(), T(0));
      } else {
        mt.f64 = m_.size() > k ? m_[k] : std::vector<T>(params.items()[k].tensor.numel(), T(0));
        vt.f64 = v_.size() > k ? v_[k] : std::vector<T>(params.items()[k].tensor.numel(), T(0));
      }
      c.tensors.push_back(std::move(mt));
      c.tensors.push_back(std::move(vt));
    }
    io::NamedTensor st;
    st.name = "optim.step";
    st.dtype = 1;
    st.shape = {1};
    st.f64 = {static_cast<double>(t_)};
    c.tensors.push_back(std::move(st));
  }

  void import_state(const io::Checkpoint &c, const ParamStore<T> &params) {
    ensure_state(params);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const std::string &name = params.items()[k].name;
      const io::NamedTensor *mt = c.find("optim.m." + name);
      const io::NamedTensor *vt = c.find("optim.v." + name);
      if (!mt || !vt)
        throw IoError("checkpoint has no optimizer state for '" + name + "'");
      if (mt->dtype != io::dtype_code<T>() || vt->dtype != io::dtype_code<T>())
        throw IoError("optimizer state dtype mismatch for '" + name + "'");
      if constexpr (std::is_same_v<T, float>) {
        m_[k] = mt->f32;
        v_[k] = vt->f32;
      } else {
        m_[k] = mt->f64;
        v_[k] = vt->f64;
      }
      if (m_[k].size() != static_cast<std::size_t>(params.items()[k].tensor.numel()))
        throw IoError("optimizer state size mismatch for '" + name + "'");
    }
    const io::NamedTensor *st = c.find("optim.step");
    if (!st || st->f64.size() != 1)
      throw IoError("checkpoint has no optimizer step counter");
    t_ = static_cast<long long>(st->f64[0]);
  }

private:
  void ensure_state(const ParamStore<T> &params) {
    if (m_.size() == params.size())
      return;
    m_.clear();
    v_.clear();
    for (const auto &p : params.items()) {
      m_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), T(0));
      v_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), T(0));
    }
  }

  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct EpochLog {
  int epoch;
  double train_loss;
  double val_loss;
  double lr;
};

template <typename T> struct TrainResult {
  std::vector<EpochLog> log;
  double best_val = 0.0;
  int best_epoch = -1;
  double final_val = 0.0;
  io::Checkpoint best_checkpoint;
  io::Checkpoint final_checkpoint;
  std::int64_t param_count = 0;
};

namespace detail_train {

// train-set masks use a disjoint index space from val/eval masks so the two
// streams never collide
inline std::uint64_t train_mask_seed(std::uint64_t master, std::size_t slice) {
  return derive_seed(master, seed_stream::mask, (1ull << 32) + slice);
}
inline std::uint64_t eval_mask_seed(std::uint64_t master, std::size_t slice) {
  return derive_seed(master, seed_stream::mask, slice);
}

inline mri::SplitMasks split_with_retry(const mri::SamplingMask &m, double rho,
                                        std::uint64_t seed) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    try {
      return mri::split_mask(m, rho, seed + static_cast<std::uint64_t>(attempt));
    } catch (const SplitEmptyError &) {
    }
  }
  throw TrainingError("split_mask: could not produce a non-empty loss mask");
}

} // namespace detail_train

/// Deterministic whole-slice training loop. Slices keep their order; the
/// acquisition mask is fixed per slice, the (m1, m2) split is redrawn per
/// (slice, epoch) from seeds derived off the master seed, and validation
/// uses one fixed split per slice. The checkpoint with the best validation
/// loss is retained.
template <typename T>
TrainResult<T> train(net::SdlFormer<T> &model, const std::vector<io::Slice> &train_slices,
                     const std::vector<io::Slice> &val_slices, const TrainConfig &tc,
                     std::ostream *progress = nullptr,
                     const io::Checkpoint *resume = nullptr,
                     const io::Checkpoint *initial_best = nullptr) {
  tc.validate();
  if (train_slices.empty() || val_slices.empty())
    throw ConfigError("train: need at least one training and one validation slice");
  for (const auto &sl : train_slices)
    if (sl.nc != model.config().n_coils)
      throw ConfigError("train: slice '" + sl.name + "' has " + std::to_string(sl.nc) +
                        " coils, model expects " + std::to_string(model.config().n_coils));
  const bool ssl = tc.mode == "ssl";

  Adam<T> opt(tc.lr);
  int start_epoch = 0;
  TrainResult<T> result;
  result.param_count = model.param_count();
  if (resume) {
    io::load_params(model.params(), *resume);
    opt.import_state(*resume, model.params());
    const io::CheckpointMeta meta = io::decode_meta(resume->config_blob);
    start_epoch = meta.next_epoch;
    result.best_val = meta.best_val;
    result.best_epoch = meta.best_epoch;
    if (initial_best)
      result.best_checkpoint = *initial_best;
  }

  struct Prepared {
    mri::SamplingMask mask;
    mri::KSpace<T> y;
    mri::CoilSensitivities<T> smaps;
    std::optional<mri::ComplexImage<T>> gt;
  };
  auto prepare = [&](const io::Slice &sl, std::uint64_t mask_seed) {
    Prepared p;
    p.mask = mri::make_mask(sl.w, tc.accel, tc.acs(), mask_seed);
    p.y = mri::apply_mask(io::slice_kspace<T>(sl), p.mask);
    p.smaps = io::slice_smaps<T>(sl);
    if (!ssl)
      p.gt.emplace(io::slice_gt<T>(sl));
    return p;
  };
  std::vector<Prepared> train_data, val_data;
  for (std::size_t i = 0; i < train_slices.size(); ++i)
    train_data.push_back(prepare(train_slices[i], detail_train::train_mask_seed(tc.seed, i)));
  for (std::size_t i = 0; i < val_slices.size(); ++i) {
    val_data.push_back(prepare(val_slices[i], detail_train::eval_mask_seed(tc.seed, i)));
    if (ssl)
      val_data.back().gt.emplace(io::slice_gt<T>(val_slices[i])); // unused in loss
  }

  auto slice_loss = [&](const Prepared &p, std::uint64_t split_seed,
                        bool backprop) -> double {
    Tensor<T> loss;
    if (ssl) {
      const mri::SplitMasks sp = detail_train::split_with_retry(p.mask, tc.rho, split_seed);
      const mri::KSpace<T> y1 = mri::apply_mask(p.y, sp.m1);
      const mri::KSpace<T> y2 = mri::apply_mask(p.y, sp.m2);
      const auto pred = model.forward(y1, p.smaps, sp.m1);
      loss = ssl_loss(pred, p.smaps, sp.m2, y2);
    } else {
      const auto pred = model.forward(p.y, p.smaps, p.mask);
      loss = supervised_loss(pred, *p.gt);
    }
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      const std::string culprit = first_non_finite(loss);
      throw TrainingError("non-finite loss (first non-finite tensor: " +
                          (culprit.empty() ? std::string("loss") : culprit) + ")");
    }
    if (backprop) {
      model.params().zero_grad();
      backward(loss);
      opt.step(model.params());
    }
    return value;
  };

  auto make_checkpoint = [&](int next_epoch, double best_val, int best_epoch,
                             double final_val) {
    io::Checkpoint c;
    io::append_params(c, model.params());
    opt.export_state(c, model.params());
    io::CheckpointMeta meta;
    meta.model = model.config();
    meta.train = tc;
    meta.next_epoch = next_epoch;
    meta.best_epoch = best_epoch;
    meta.best_val = best_val;
    meta.final_val = final_val;
    meta.has_metrics = best_epoch >= 0;
    c.config_blob = io::encode_meta(meta);
    return c;
  };

  for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
    opt.set_lr(lr_at(epoch, tc));
    double train_sum = 0.0;
    for (std::size_t i = 0; i < train_data.size(); ++i) {
      const std::uint64_t split_seed = derive_seed(
          tc.seed, seed_stream::split,
          (static_cast<std::uint64_t>(i) << 24) + static_cast<std::uint64_t>(epoch));
      try {
        train_sum += slice_loss(train_data[i], split_seed, true);
      } catch (const TrainingError &e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", slice " +
                            std::to_string(i) + ": " + e.what());
      }
    }
    double val_sum = 0.0;
    for (std::size_t i = 0; i < val_data.size(); ++i) {
      const std::uint64_t split_seed = derive_seed(tc.seed, seed_stream::val_split, i);
      val_sum += slice_loss(val_data[i], split_seed, false);
    }
    const EpochLog row{epoch, train_sum / static_cast<double>(train_data.size()),
                       val_sum / static_cast<double>(val_data.size()), opt.lr()};
    result.log.push_back(row);
    if (progress)
      (*progress) << "epoch " << row.epoch << " train " << row.train_loss << " val "
                  << row.val_loss << " lr " << row.lr << "\n";
    if (result.best_epoch < 0 || row.val_loss < result.best_val) {
      result.best_val = row.val_loss;
      result.best_epoch = row.epoch;
      result.best_checkpoint =
          make_checkpoint(epoch + 1, result.best_val, result.best_epoch, row.val_loss);
    }
    result.final_val = row.val_loss;
  }
  result.final_checkpoint =
      make_checkpoint(tc.epochs, result.best_val, result.best_epoch, result.final_val);
  if (result.best_epoch < 0)
    result.best_checkpoint = result.final_checkpoint;
  return result;
}

struct EvalRow {
  std::string slice_id;
  std::string method; // "zf" | "model"
  double psnr_db;
  double ssim;
};

struct EvalTable {
  std::vector<EvalRow> rows; // per-slice rows then one "mean" row per method
  double mean_psnr(const std::string &method) const {
    for (const auto &r : rows)
      if (r.method == method && r.slice_id == "mean")
        return r.psnr_db;
    double s = 0.0;
    int n = 0;
    for (const auto &r : rows)
      if (r.method == method) {
        s += r.psnr_db;
        ++n;
      }
    return n ? s / n : 0.0;
  }
};

/// Zero-filled and model reconstructions against the stored ground truth,
/// per slice plus unweighted means. Masks are the evaluation-stream masks
/// (shared with training validation).
template <typename T>
EvalTable evaluate(const net::SdlFormer<T> &model, const std::vector<io::Slice> &slices,
                   const TrainConfig &tc) {
  if (slices.empty())
    throw ConfigError("evaluate: empty dataset");
  EvalTable table;
  double zf_psnr = 0.0, zf_ssim = 0.0, mo_psnr = 0.0, mo_ssim = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const io::Slice &sl = slices[i];
    const mri::SamplingMask mask =
        mri::make_mask(sl.w, tc.accel, tc.acs(), detail_train::eval_mask_seed(tc.seed, i));
    const mri::KSpace<T> y = mri::apply_mask(io::slice_kspace<T>(sl), mask);
    const mri::CoilSensitivities<T> smaps = io::slice_smaps<T>(sl);
    const mri::ComplexImage<T> gt = io::slice_gt<T>(sl);
    const metrics::MagnitudeImage ref = metrics::magnitude(sl.h, sl.w, gt.data.data().data());

    const mri::ComplexImage<T> zf = mri::zero_filled(y, smaps);
    const mri::ComplexImage<T> mo = model.forward(y, smaps, mask);
    const metrics::MagnitudeImage zfm = metrics::magnitude(sl.h, sl.w, zf.data.data().data());
    const metrics::MagnitudeImage mom = metrics::magnitude(sl.h, sl.w, mo.data.data().data());

    const std::string id = sl.name.empty() ? std::to_string(i) : sl.name;
    const EvalRow zr{id, "zf", metrics::psnr(ref, zfm), metrics::ssim(ref, zfm)};
    const EvalRow mr{id, "model", metrics::psnr(ref, mom), metrics::ssim(ref, mom)};
    table.rows.push_back(zr);
    table.rows.push_back(mr);
    zf_psnr += zr.psnr_db;
    zf_ssim += zr.ssim;
    mo_psnr += mr.psnr_db;
    mo_ssim += mr.ssim;
  }
  const double n = static_cast<double>(slices.size());
  table.rows.push_back({"mean", "zf", zf_psnr / n, zf_ssim / n});
  table.rows.push_back({"mean", "model", mo_psnr / n, mo_ssim / n});
  return table;
}

/// Deterministic text formatting shared by all CSV writers.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_training_csv(std::ostream &os, const std::vector<EpochLog> &log) {
  os << "epoch,split,loss,lr\n";
  for (const auto &row : log) {
    os << row.epoch << ",train," << fmt_double(row.train_loss) << ","
       << fmt_double(row.lr) << "\n";
    os << row.epoch << ",val," << fmt_double(row.val_loss) << "," << fmt_double(row.lr)
       << "\n";
  }
}

inline void write_eval_csv(std::ostream &os, const EvalTable &t) {
  os << "slice_id,method,psnr_db,ssim\n";
  for (const auto &r : t.rows)
    os << r.slice_id << "," << r.method << "," << fmt_double(r.psnr_db) << ","
       << fmt_double(r.ssim) << "\n";
}

/// The standard ablation rows over the attention/locality switches.
struct AblationRow {
  std::string name;
  net::ModelConfig config;
};

inline std::vector<AblationRow> ablation_rows(const net::ModelConfig &base,
                                              const std::vector<std::string> &names) {
  std::vector<AblationRow> rows;
  for (const auto &n : names) {
    net::ModelConfig c = base;
    if (n == "cnn") {
      c.enable_sab = false;
      c.enable_dab = false;
    } else if (n == "sab") {
      c.enable_sab = true;
      c.enable_dab = false;
    } else if (n == "dab") {
      c.enable_sab = false;
      c.enable_dab = true;
    } else if (n == "nolocal") {
      c.enable_sab = true;
      c.enable_dab = true;
      c.enable_locality = false;
    } else if (n == "full") {
      c.enable_sab = true;
      c.enable_dab = true;
      c.enable_locality = true;
    } else {
      throw ConfigError("unknown ablation row '" + n +
                        "' (expected cnn|sab|dab|nolocal|full)");
    }
    rows.push_back({n, c});
  }
  return rows;
}

template <typename T> struct AblationResult {
  std::string name;
  std::int64_t param_count = 0;
  double best_val = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double zf_psnr = 0.0;
  double zf_ssim = 0.0;
  io::Checkpoint best_checkpoint;
  std::vector<EpochLog> log;
};

/// Trains and evaluates one model per ablation row with a shared seed.
template <typename T>
std::vector<AblationResult<T>> run_ablation(const net::ModelConfig &base,
                                            const TrainConfig &tc,
                                            const std::vector<io::Slice> &train_slices,
                                            const std::vector<io::Slice> &val_slices,
                                            const std::vector<std::string> &names,
                                            std::ostream *progress = nullptr) {
  std::vector<AblationResult<T>> out;
  for (const auto &row : ablation_rows(base, names)) {
    if (progress)
      (*progress) << "== ablation row '" << row.name << "'\n";
    net::SdlFormer<T> model(row.config, tc.seed);
    TrainResult<T> r = train(model, train_slices, val_slices, tc, progress);
    net::SdlFormer<T> best(row.config, tc.seed);
    io::load_params(best.params(), r.best_checkpoint);
    const EvalTable table = evaluate(best, val_slices, tc);
    AblationResult<T> a;
    a.name = row.name;
    a.param_count = r.param_count;
    a.best_val = r.best_val;
    a.mean_psnr = table.mean_psnr("model");
    a.zf_psnr = table.mean_psnr("zf");
    for (const auto &er : table.rows)
      if (er.slice_id == "mean") {
        if (er.method == "model")
          a.mean_ssim = er.ssim;
        else
          a.zf_ssim = er.ssim;
      }
    a.best_checkpoint = std::move(r.best_checkpoint);
    a.log = std::move(r.log);
    out.push_back(std::move(a));
  }
  return out;
}

} // namespace sdlf::train
