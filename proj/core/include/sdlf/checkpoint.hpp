#pragma once

#include <string>
#include <vector>

#include "sdlf/params.hpp"

// SDLC checkpoints, little-endian:
//   magic "SDLC", u32 version=1, u32 count,
//   per tensor: u16 name_len, UTF-8 name, u8 dtype (0=f32, 1=f64), u8 ndim,
//               u32 dims[ndim], raw little-endian payload,
//   u32 blob_len, UTF-8 config blob (JSON).
// Save/load round-trips are bitwise.

namespace sdlf::io {

struct NamedTensor {
  std::string name;
  int dtype = 0; // 0=f32, 1=f64
  std::vector<int> shape;
  std::vector<float> f32;
  std::vector<double> f64;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (int d : shape)
      n *= d;
    return n;
  }
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::string config_blob;

  const NamedTensor *find(const std::string &name) const {
    for (const auto &t : tensors)
      if (t.name == name)
        return &t;
    return nullptr;
  }
};

void save_checkpoint(const std::string &path, const Checkpoint &c);
Checkpoint load_checkpoint(const std::string &path);

template <typename T> constexpr int dtype_code();
template <> constexpr int dtype_code<float>() { return 0; }
template <> constexpr int dtype_code<double>() { return 1; }

template <typename T>
NamedTensor to_named(const std::string &name, const Tensor<T> &t) {
  NamedTensor n;
  n.name = name;
  n.dtype = dtype_code<T>();
  n.shape = t.shape();
  if constexpr (std::is_same_v<T, float>)
    n.f32.assign(t.data().begin(), t.data().end());
  else
    n.f64.assign(t.data().begin(), t.data().end());
  return n;
}

template <typename T> Tensor<T> named_to_tensor(const NamedTensor &n) {
  if (n.dtype != dtype_code<T>())
    throw IoError("checkpoint tensor '" + n.name + "' has dtype code " +
                  std::to_string(n.dtype) + ", expected " +
                  std::to_string(dtype_code<T>()));
  std::vector<T> v;
  if (n.dtype == 0)
    v.assign(n.f32.begin(), n.f32.end());
  else
    v.assign(n.f64.begin(), n.f64.end());
  return Tensor<T>::from_vector(n.shape, std::move(v));
}

/// Appends all model parameters in registration order.
template <typename T>
void append_params(Checkpoint &c, const ParamStore<T> &store) {
  for (const auto &p : store.items())
    c.tensors.push_back(to_named(p.name, p.tensor));
}

/// Writes checkpoint values into the matching model parameters. Tensors with
/// an "optim." prefix are optimizer state and are skipped here; any other
/// tensor that does not match a parameter name is an error, as is a missing
/// parameter.
template <typename T>
void load_params(ParamStore<T> &store, const Checkpoint &c) {
  std::size_t matched = 0;
  for (const auto &t : c.tensors) {
    if (t.name.rfind("optim.", 0) == 0)
      continue;
    if (!store.contains(t.name))
      throw IoError("checkpoint tensor '" + t.name +
                    "' does not match any model parameter");
    Tensor<T> &dst = store.at(t.name);
    if (t.dtype != dtype_code<T>())
      throw IoError("checkpoint tensor '" + t.name + "' has the wrong dtype");
    if (dst.shape() != t.shape)
      throw IoError("checkpoint tensor '" + t.name + "' has shape mismatch");
    auto span = dst.mutable_data();
    if constexpr (std::is_same_v<T, float>)
      std::copy(t.f32.begin(), t.f32.end(), span.begin());
    else
      std::copy(t.f64.begin(), t.f64.end(), span.begin());
    ++matched;
  }
  if (matched != store.size())
    throw IoError("checkpoint is missing " + std::to_string(store.size() - matched) +
                  " model parameter(s)");
}

} // namespace sdlf::io
