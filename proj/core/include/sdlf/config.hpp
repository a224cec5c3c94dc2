#pragma once

#include <set>
#include <string>

#include "sdlf/net.hpp"

namespace sdlf::train {

struct TrainConfig {
  int epochs = 60;
  double lr = 1e-3;
  int sched_step = 40;      // epochs between learning-rate drops
  double sched_gamma = 0.1; // multiplicative drop
  std::string mode = "ssl"; // "ssl" | "supervised"
  std::uint64_t seed = 1;
  int accel = 4;
  double acs_frac = 0.0; // 0 = convention default for the acceleration
  double rho = 0.6;      // fraction of non-ACS sampled columns kept in m1
  int batch = 1;         // whole-slice batches only

  void validate() const {
    if (epochs < 1)
      throw ConfigError("TrainConfig: epochs must be >= 1");
    if (!(lr > 0))
      throw ConfigError("TrainConfig: lr must be > 0");
    if (sched_step < 1 || !(sched_gamma > 0))
      throw ConfigError("TrainConfig: invalid scheduler");
    if (mode != "ssl" && mode != "supervised")
      throw ConfigError("TrainConfig: mode must be 'ssl' or 'supervised', got '" +
                        mode + "'");
    if (accel < 1)
      throw ConfigError("TrainConfig: accel must be >= 1");
    if (!(rho > 0.0 && rho < 1.0))
      throw ConfigError("TrainConfig: rho must be in (0,1)");
    if (batch != 1)
      throw ConfigError("TrainConfig: only batch=1 is supported");
    if (acs_frac < 0.0 || acs_frac >= 1.0)
      throw ConfigError("TrainConfig: acs_frac must be in [0,1)");
  }

  double acs() const { return acs_frac > 0.0 ? acs_frac : mri::default_acs_frac(accel); }
};

} // namespace sdlf::train

namespace sdlf::io {

/// Everything embedded in a checkpoint's config blob.
struct CheckpointMeta {
  net::ModelConfig model;
  train::TrainConfig train;
  int next_epoch = 0; // first epoch a resumed run should execute
  int best_epoch = -1;
  double best_val = 0.0;
  double final_val = 0.0;
  bool has_metrics = false;
};

std::string encode_meta(const CheckpointMeta &m);
CheckpointMeta decode_meta(const std::string &blob);

/// Applies a JSON run-config (flat documented keys) on top of the given
/// configs. Unrecognized keys raise ConfigError. Returns the keys that were
/// present, so callers can layer CLI overrides correctly.
std::set<std::string> apply_run_config(const std::string &json_text,
                                       net::ModelConfig &mc, train::TrainConfig &tc);

std::set<std::string> load_run_config_file(const std::string &path,
                                           net::ModelConfig &mc, train::TrainConfig &tc);

/// The documented run-config keys (used for CLI --set validation and docs).
const std::set<std::string> &run_config_keys();

} // namespace sdlf::io
