#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "sdlf/errors.hpp"
#include "sdlf/rng.hpp"

namespace sdlf {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape &s) {
  std::int64_t n = 1;
  for (int d : s)
    n *= d;
  return n;
}

inline std::string shape_str(const Shape &s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

namespace detail {

/// Graph node. Values are immutable once an op has consumed them; `grad` is
/// the only mutable field and is touched only inside a backward() call (and
/// by the optimizer on leaves).
template <typename T> struct Node {
  Shape shape;
  std::vector<T> value;
  bool requires_grad = false;
  std::vector<T> grad; // empty until first accumulation
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T> &)> backward; // pushes this->grad into parents
  const char *op = "leaf";
  std::string name; // parameter path for leaves, empty otherwise

  void accumulate(const T *src, std::int64_t n) {
    if (grad.empty())
      grad.assign(value.size(), T(0));
    for (std::int64_t i = 0; i < n; ++i)
      grad[static_cast<std::size_t>(i)] += src[i];
  }
};

} // namespace detail

/// Dense n-d tensor of float or double with reverse-mode differentiation.
/// A Tensor is a shared handle to a graph node; copies alias the same node.
template <typename T> class Tensor {
public:
  using Node = detail::Node<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(0), requires_grad);
  }

  static Tensor ones(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(1), requires_grad);
  }

  static Tensor full(Shape shape, T v, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value.assign(static_cast<std::size_t>(shape_numel(shape)), v);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor from_vector(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
      throw ShapeError("from_vector: shape " + shape_str(shape) + " needs " +
                       std::to_string(shape_numel(shape)) + " values, got " +
                       std::to_string(data.size()));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor randn(Shape shape, Rng &rng, T sigma = T(1), bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto &v : t.node_->value)
      v = static_cast<T>(rng.normal() * static_cast<double>(sigma));
    return t;
  }

  static Tensor uniform(Shape shape, Rng &rng, T lo, T hi, bool requires_grad = false) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (auto &v : t.node_->value)
      v = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->value.size()); }

  std::span<const T> data() const { return node_->value; }

  /// Mutable view of the values. Only meaningful on leaves (parameters,
  /// inputs); graphs built from previous values are not revisited.
  std::span<T> mutable_data() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }

  /// Marks a leaf as trainable. Calling this on an op result is a contract
  /// violation because its backward function was already pruned.
  void set_requires_grad(bool rg) {
    if (rg && node_->backward)
      throw ContractError("set_requires_grad: only leaves can change trainability");
    node_->requires_grad = rg;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  T item() const {
    if (numel() != 1)
      throw ContractError("item: tensor has " + std::to_string(numel()) + " elements");
    return node_->value[0];
  }

  T at(std::initializer_list<int> idx) const {
    return node_->value[static_cast<std::size_t>(flat_index(idx))];
  }

  std::int64_t flat_index(std::initializer_list<int> idx) const {
    std::int64_t f = 0;
    int k = 0;
    for (int i : idx) {
      f = f * node_->shape[static_cast<std::size_t>(k)] + i;
      ++k;
    }
    return f;
  }

  const char *op() const { return node_->op; }
  const std::string &name() const { return node_->name; }
  void set_name(std::string n) { node_->name = std::move(n); }

  std::shared_ptr<Node> node() const { return node_; }

private:
  std::shared_ptr<Node> node_;
};

namespace detail {

/// Builds an op node. Parents and the backward function are dropped when no
/// parent is trainable, so untracked programs carry no graph at all.
template <typename T>
Tensor<T> make_op(const char *op, Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents,
                  std::function<void(Node<T> &)> backward) {
  auto n = std::make_shared<Node<T>>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool rg = false;
  for (const auto &p : parents)
    rg = rg || p.requires_grad();
  n->requires_grad = rg;
  if (rg) {
    n->parents.reserve(parents.size());
    for (auto &p : parents)
      n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor<T>(n);
}

} // namespace detail

/// Reverse-mode sweep from a scalar. Every reachable requires_grad tensor
/// receives d(loss)/d(tensor); leaf grads accumulate across calls until
/// zero_grad() is used, intermediate nodes start from zero each sweep.
template <typename T> void backward(const Tensor<T> &loss) {
  if (loss.numel() != 1)
    throw ContractError("backward: output has shape " + shape_str(loss.shape()) +
                        ", expected a scalar");
  auto root = loss.node();
  if (!root->requires_grad)
    return;

  // iterative post-order topological sort
  std::vector<detail::Node<T> *> order;
  std::unordered_set<detail::Node<T> *> seen;
  struct Frame {
    detail::Node<T> *n;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    Frame &f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      detail::Node<T> *p = f.n->parents[f.next_parent++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  const T one = T(1);
  root->accumulate(&one, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T> *n = *it;
    if (n->backward)
      n->backward(*n);
  }
}

/// First node (in forward graph order) holding a non-finite value, or ""
/// when all reachable values are finite. Used by the training abort path.
template <typename T> std::string first_non_finite(const Tensor<T> &out) {
  std::vector<detail::Node<T> *> order;
  std::unordered_set<detail::Node<T> *> seen;
  struct Frame {
    detail::Node<T> *n;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({out.node().get(), 0});
  seen.insert(out.node().get());
  while (!stack.empty()) {
    Frame &f = stack.back();
    if (f.next_parent < f.n->parents.size()) {
      detail::Node<T> *p = f.n->parents[f.next_parent++].get();
      if (!seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  for (detail::Node<T> *n : order) {
    for (const T &v : n->value) {
      if (!std::isfinite(static_cast<double>(v))) {
        return n->name.empty() ? std::string(n->op) : n->name;
      }
    }
  }
  return "";
}

} // namespace sdlf
