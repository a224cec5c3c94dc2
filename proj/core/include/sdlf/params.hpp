#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdlf/tensor.hpp"

namespace sdlf {

/// A trainable tensor with a unique dotted path, e.g.
/// "sab.0.msa.q_proj.weight". The name set of a model is stable across
/// construction, save and load.
template <typename T> struct Param {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered registry of a model's parameters. Registration order is the
/// checkpoint order.
template <typename T> class ParamStore {
public:
  Tensor<T> add(const std::string &name, Tensor<T> t) {
    if (index_.count(name))
      throw ContractError("ParamStore: duplicate parameter name '" + name + "'");
    t.set_requires_grad(true);
    t.set_name(name);
    index_[name] = items_.size();
    items_.push_back(Param<T>{name, t});
    return t;
  }

  const std::vector<Param<T>> &items() const { return items_; }
  std::vector<Param<T>> &items() { return items_; }
  std::size_t size() const { return items_.size(); }

  bool contains(const std::string &name) const { return index_.count(name) != 0; }

  Tensor<T> &at(const std::string &name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ContractError("ParamStore: unknown parameter '" + name + "'");
    return items_[it->second].tensor;
  }

  std::int64_t count_values() const {
    std::int64_t n = 0;
    for (const auto &p : items_)
      n += p.tensor.numel();
    return n;
  }

  void zero_grad() {
    for (auto &p : items_)
      p.tensor.zero_grad();
  }

private:
  std::vector<Param<T>> items_;
  std::map<std::string, std::size_t> index_;
};

} // namespace sdlf
