#include "sdlf/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sdlf::io {

using nlohmann::json;

namespace {

json model_to_json(const net::ModelConfig &m) {
  return json{{"embed_dim", m.embed_dim},
              {"n_heads", m.n_heads},
              {"window", m.window},
              {"leff_ratio", m.leff_ratio},
              {"n_sab", m.n_sab},
              {"n_dab", m.n_dab},
              {"kcnn_channels", m.kcnn_channels},
              {"kcnn_layers", m.kcnn_layers},
              {"n_coils", m.n_coils},
              {"enable_sab", m.enable_sab},
              {"enable_dab", m.enable_dab},
              {"enable_locality", m.enable_locality},
              {"pre_attn_norm", m.pre_attn_norm}};
}

json train_to_json(const train::TrainConfig &t) {
  return json{{"epochs", t.epochs},       {"lr", t.lr},
              {"sched_step", t.sched_step}, {"sched_gamma", t.sched_gamma},
              {"mode", t.mode},           {"seed", t.seed},
              {"accel", t.accel},         {"acs_frac", t.acs_frac},
              {"rho", t.rho},             {"batch", t.batch}};
}

void model_from_json(const json &j, net::ModelConfig &m) {
  m.embed_dim = j.at("embed_dim").get<int>();
  m.n_heads = j.at("n_heads").get<int>();
  m.window = j.at("window").get<int>();
  m.leff_ratio = j.at("leff_ratio").get<int>();
  m.n_sab = j.at("n_sab").get<int>();
  m.n_dab = j.at("n_dab").get<int>();
  m.kcnn_channels = j.at("kcnn_channels").get<int>();
  m.kcnn_layers = j.at("kcnn_layers").get<int>();
  m.n_coils = j.at("n_coils").get<int>();
  m.enable_sab = j.at("enable_sab").get<bool>();
  m.enable_dab = j.at("enable_dab").get<bool>();
  m.enable_locality = j.at("enable_locality").get<bool>();
  m.pre_attn_norm = j.at("pre_attn_norm").get<bool>();
}

void train_from_json(const json &j, train::TrainConfig &t) {
  t.epochs = j.at("epochs").get<int>();
  t.lr = j.at("lr").get<double>();
  t.sched_step = j.at("sched_step").get<int>();
  t.sched_gamma = j.at("sched_gamma").get<double>();
  t.mode = j.at("mode").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.accel = j.at("accel").get<int>();
  t.acs_frac = j.at("acs_frac").get<double>();
  t.rho = j.at("rho").get<double>();
  t.batch = j.at("batch").get<int>();
}

} // namespace

std::string encode_meta(const CheckpointMeta &m) {
  json j;
  j["model"] = model_to_json(m.model);
  j["train"] = train_to_json(m.train);
  j["progress"] = json{{"next_epoch", m.next_epoch},
                       {"best_epoch", m.best_epoch},
                       {"best_val", m.best_val},
                       {"final_val", m.final_val},
                       {"has_metrics", m.has_metrics}};
  return j.dump(2);
}

CheckpointMeta decode_meta(const std::string &blob) {
  CheckpointMeta m;
  json j;
  try {
    j = json::parse(blob);
  } catch (const json::exception &e) {
    throw IoError(std::string("checkpoint config blob is not valid JSON: ") + e.what());
  }
  try {
    model_from_json(j.at("model"), m.model);
    train_from_json(j.at("train"), m.train);
    const auto &p = j.at("progress");
    m.next_epoch = p.at("next_epoch").get<int>();
    m.best_epoch = p.at("best_epoch").get<int>();
    m.best_val = p.at("best_val").get<double>();
    m.final_val = p.at("final_val").get<double>();
    m.has_metrics = p.at("has_metrics").get<bool>();
  } catch (const json::exception &e) {
    throw IoError(std::string("checkpoint config blob is missing fields: ") + e.what());
  }
  return m;
}

const std::set<std::string> &run_config_keys() {
  static const std::set<std::string> keys = {
      "embed_dim",   "n_heads",     "window",        "leff_ratio",
      "n_sab",       "n_dab",       "kcnn_channels", "kcnn_layers",
      "n_coils",     "enable_sab",  "enable_dab",    "enable_locality",
      "pre_attn_norm", "epochs",    "lr",            "sched_step",
      "sched_gamma", "mode",        "seed",          "accel",
      "acs_frac",    "rho",         "batch"};
  return keys;
}

std::set<std::string> apply_run_config(const std::string &json_text,
                                       net::ModelConfig &mc, train::TrainConfig &tc) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw ConfigError("run config must be a JSON object of documented keys");
  std::set<std::string> seen;
  for (const auto &[key, value] : j.items()) {
    if (!run_config_keys().count(key))
      throw ConfigError("run config: unrecognized key '" + key + "'");
    seen.insert(key);
    try {
      if (key == "embed_dim") mc.embed_dim = value.get<int>();
      else if (key == "n_heads") mc.n_heads = value.get<int>();
      else if (key == "window") mc.window = value.get<int>();
      else if (key == "leff_ratio") mc.leff_ratio = value.get<int>();
      else if (key == "n_sab") mc.n_sab = value.get<int>();
      else if (key == "n_dab") mc.n_dab = value.get<int>();
      else if (key == "kcnn_channels") mc.kcnn_channels = value.get<int>();
      else if (key == "kcnn_layers") mc.kcnn_layers = value.get<int>();
      else if (key == "n_coils") mc.n_coils = value.get<int>();
      else if (key == "enable_sab") mc.enable_sab = value.get<bool>();
      else if (key == "enable_dab") mc.enable_dab = value.get<bool>();
      else if (key == "enable_locality") mc.enable_locality = value.get<bool>();
      else if (key == "pre_attn_norm") mc.pre_attn_norm = value.get<bool>();
      else if (key == "epochs") tc.epochs = value.get<int>();
      else if (key == "lr") tc.lr = value.get<double>();
      else if (key == "sched_step") tc.sched_step = value.get<int>();
      else if (key == "sched_gamma") tc.sched_gamma = value.get<double>();
      else if (key == "mode") tc.mode = value.get<std::string>();
      else if (key == "seed") tc.seed = value.get<std::uint64_t>();
      else if (key == "accel") tc.accel = value.get<int>();
      else if (key == "acs_frac") tc.acs_frac = value.get<double>();
      else if (key == "rho") tc.rho = value.get<double>();
      else if (key == "batch") tc.batch = value.get<int>();
    } catch (const json::exception &e) {
      throw ConfigError("run config: bad value for '" + key + "': " + e.what());
    }
  }
  return seen;
}

std::set<std::string> load_run_config_file(const std::string &path,
                                           net::ModelConfig &mc, train::TrainConfig &tc) {
  std::ifstream is(path);
  if (!is)
    throw IoError("cannot open run config '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return apply_run_config(ss.str(), mc, tc);
}

} // namespace sdlf::io
