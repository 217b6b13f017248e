#pragma once

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every operation applied to its Vars. Calling backward() on a
// 1x1 Var walks the tape in reverse and leaves d(root)/d(node) in each node's
// gradient buffer. Parameters live in a ParamSet owned by the caller; binding
// one to a tape creates a leaf node and Tape::accumulate copies the leaf
// gradients back into a Gradients vector aligned with the set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edge/tensor.hpp"

namespace edge::ad {

template <typename T>
class Tape;

template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Matrix<T>& value() const { return tape->value(*this); }
  const Matrix<T>& grad() const { return tape->grad(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename T>
class ParamSet {
 public:
  std::size_t add(std::string name, Matrix<T> value, bool trainable = true) {
    if (find(name)) throw std::invalid_argument("duplicate parameter: " + name);
    entries_.push_back({std::move(name), std::move(value), trainable});
    return entries_.size() - 1;
  }

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  Matrix<T>& value(std::size_t i) { return entries_.at(i).value; }
  const Matrix<T>& value(std::size_t i) const { return entries_.at(i).value; }
  bool trainable(std::size_t i) const { return entries_.at(i).trainable; }
  void set_trainable(std::size_t i, bool on) { entries_.at(i).trainable = on; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
  }

 private:
  struct Entry {
    std::string name;
    Matrix<T> value;
    bool trainable;
  };
  std::vector<Entry> entries_;
};

template <typename T>
using Gradients = std::vector<Matrix<T>>;

template <typename T>
Gradients<T> zero_gradients(const ParamSet<T>& params) {
  Gradients<T> g;
  g.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    g.push_back(Matrix<T>::Zero(params.value(i).rows(), params.value(i).cols()));
  return g;
}

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  // With record=false nothing requires gradients and no closures are kept.
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var<T> constant(Matrix<T> value) { return push(std::move(value), false, {}); }

  Var<T> variable(Matrix<T> value) { return push(std::move(value), record_, {}); }

  // The set must outlive the tape and stay unmodified while it is in use.
  Var<T> param(const ParamSet<T>& set, std::size_t index) {
    if (params_ && params_ != &set)
      throw std::logic_error("a tape binds parameters from one ParamSet only");
    params_ = &set;
    auto it = bound_.find(index);
    if (it != bound_.end()) return Var<T>{this, it->second};
    Node n;
    n.external = &set.value(index);
    n.requires_grad = record_ && set.trainable(index);
    nodes_.push_back(std::move(n));
    bound_.emplace(index, nodes_.size() - 1);
    return Var<T>{this, nodes_.size() - 1};
  }

  const Matrix<T>& value(Var<T> v) const { return nodes_.at(v.id).val(); }
  const Matrix<T>& grad(Var<T> v) const { return nodes_.at(v.id).grad; }
  bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Internal: record an op. `fn` is dropped when no input requires a gradient.
  Var<T> push(Matrix<T> value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var<T>{this, nodes_.size() - 1};
  }

  bool any_requires(std::initializer_list<Var<T>> vars) const {
    for (auto v : vars)
      if (nodes_.at(v.id).requires_grad) return true;
    return false;
  }

  // Adds `g` into the gradient buffer of `v` if it takes gradients.
  template <typename Expr>
  void add_grad(Var<T> v, const Expr& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    n.grad += g;
  }

  Matrix<T>& grad_buffer(std::size_t id) { return nodes_[id].grad; }

  void backward(Var<T> root) {
    if (value(root).size() != 1) throw ShapeError("backward() needs a 1x1 root");
    for (std::size_t i = 0; i <= root.id; ++i) {
      Node& n = nodes_[i];
      if (n.requires_grad) n.grad = Matrix<T>::Zero(n.val().rows(), n.val().cols());
    }
    if (!nodes_[root.id].requires_grad) return;
    nodes_[root.id].grad(0, 0) = T(1);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }
  }

  // Adds gradients of bound parameters into `grads` (aligned with the set).
  void accumulate(Gradients<T>& grads) const {
    for (const auto& [index, node] : bound_) {
      const Node& n = nodes_[node];
      if (n.requires_grad && n.grad.size() == n.val().size()) grads.at(index) += n.grad;
    }
  }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* external = nullptr;  // bound parameters alias the ParamSet
    Matrix<T> grad;

    const Matrix<T>& val() const { return external ? *external : value; }
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool record_;
  std::vector<Node> nodes_;
  const ParamSet<T>* params_ = nullptr;
  std::unordered_map<std::size_t, std::size_t> bound_;
};

namespace detail {

template <typename T>
void check_same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::logic_error("vars from different tapes");
}

template <typename T>
void check_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.rows(), a.cols()) +
                     " vs " + shape_str(b.rows(), b.cols()));
}

}  // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  auto& t = *a.tape;
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_str(a.rows(), a.cols()) + " * " + shape_str(b.rows(), b.cols()));
  Matrix<T> out = a.value() * b.value();
  return t.push(std::move(out), t.any_requires({a, b}), [a, b](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    if (tp.requires_grad(a)) tp.add_grad(a, g * b.value().transpose());
    if (tp.requires_grad(b)) tp.add_grad(b, a.value().transpose() * g);
  });
}

// a * b^T
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  auto& t = *a.tape;
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + shape_str(a.rows(), a.cols()) + " * " + shape_str(b.rows(), b.cols()) + "^T");
  Matrix<T> out = a.value() * b.value().transpose();
  return t.push(std::move(out), t.any_requires({a, b}), [a, b](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    if (tp.requires_grad(a)) tp.add_grad(a, g * b.value());
    if (tp.requires_grad(b)) tp.add_grad(b, g.transpose() * a.value());
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  auto& t = *a.tape;
  Matrix<T> out = a.value().transpose();
  return t.push(std::move(out), t.any_requires({a}), [a](Tape<T>& tp, std::size_t self) {
    tp.add_grad(a, tp.grad_buffer(self).transpose());
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a.value(), b.value(), "add");
  auto& t = *a.tape;
  Matrix<T> out = a.value() + b.value();
  return t.push(std::move(out), t.any_requires({a, b}), [a, b](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    tp.add_grad(a, g);
    tp.add_grad(b, g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a.value(), b.value(), "sub");
  auto& t = *a.tape;
  Matrix<T> out = a.value() - b.value();
  return t.push(std::move(out), t.any_requires({a, b}), [a, b](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    tp.add_grad(a, g);
    tp.add_grad(b, -g);
  });
}

// Element-wise product.
template <typename T>
Var<T> cmul(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::check_same_shape(a.value(), b.value(), "cmul");
  auto& t = *a.tape;
  Matrix<T> out = a.value().cwiseProduct(b.value());
  return t.push(std::move(out), t.any_requires({a, b}), [a, b](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    if (tp.requires_grad(a)) tp.add_grad(a, g.cwiseProduct(b.value()));
    if (tp.requires_grad(b)) tp.add_grad(b, g.cwiseProduct(a.value()));
  });
}

// Element-wise product with a constant matrix (dropout masks).
template <typename T>
Var<T> cmul_const(Var<T> a, Matrix<T> c) {
  detail::check_same_shape(a.value(), c, "cmul_const");
  auto& t = *a.tape;
  Matrix<T> out = a.value().cwiseProduct(c);
  return t.push(std::move(out), t.any_requires({a}), [a, c = std::move(c)](Tape<T>& tp, std::size_t self) {
    tp.add_grad(a, tp.grad_buffer(self).cwiseProduct(c));
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  auto& t = *a.tape;
  Matrix<T> out = a.value() * s;
  return t.push(std::move(out), t.any_requires({a}), [a, s](Tape<T>& tp, std::size_t self) {
    tp.add_grad(a, tp.grad_buffer(self) * s);
  });
}

// Adds a 1xN row to every row of `a`, or a 1x1 scalar to every entry.
template <typename T>
Var<T> add_bias(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  auto& t = *a.tape;
  const bool scalar = b.rows() == 1 && b.cols() == 1;
  if (!scalar && (b.rows() != 1 || b.cols() != a.cols()))
    throw ShapeError("add_bias: bias " + shape_str(b.rows(), b.cols()) + " for " + shape_str(a.rows(), a.cols()));
  Matrix<T> out = a.value();
  if (scalar)
    out.array() += b.value()(0, 0);
  else
    out.rowwise() += b.value().row(0);
  return t.push(std::move(out), t.any_requires({a, b}), [a, b, scalar](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    tp.add_grad(a, g);
    if (!tp.requires_grad(b)) return;
    if (scalar) {
      Matrix<T> s(1, 1);
      s(0, 0) = g.sum();
      tp.add_grad(b, s);
    } else {
      tp.add_grad(b, g.colwise().sum());
    }
  });
}

namespace detail {

template <typename T>
Var<T> unary(Var<T> a, Matrix<T> out, Matrix<T> local_grad) {
  auto& t = *a.tape;
  return t.push(std::move(out), t.any_requires({a}), [a, lg = std::move(local_grad)](Tape<T>& tp, std::size_t self) {
    tp.add_grad(a, tp.grad_buffer(self).cwiseProduct(lg));
  });
}

}  // namespace detail

template <typename T>
Var<T> tanh(Var<T> a) {
  Matrix<T> y = a.value().array().tanh().matrix();
  Matrix<T> lg = (T(1) - y.array().square()).matrix();
  return detail::unary(a, std::move(y), std::move(lg));
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  Matrix<T> y = (T(1) / (T(1) + (-a.value().array()).exp())).matrix();
  Matrix<T> lg = (y.array() * (T(1) - y.array())).matrix();
  return detail::unary(a, std::move(y), std::move(lg));
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  auto& t = *parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool req = false;
  for (auto p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p.cols();
    req = req || t.requires_grad(p);
  }
  Matrix<T> out(rows, cols);
  Eigen::Index off = 0;
  for (auto p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return t.push(std::move(out), req, [parts](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    Eigen::Index o = 0;
    for (auto p : parts) {
      tp.add_grad(p, g.middleCols(o, p.cols()));
      o += p.cols();
    }
  });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  auto& t = *parts.front().tape;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool req = false;
  for (auto p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
    req = req || t.requires_grad(p);
  }
  Matrix<T> out(rows, cols);
  Eigen::Index off = 0;
  for (auto p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return t.push(std::move(out), req, [parts](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    Eigen::Index o = 0;
    for (auto p : parts) {
      tp.add_grad(p, g.middleRows(o, p.rows()));
      o += p.rows();
    }
  });
}

template <typename T>
Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index count) {
  auto& t = *a.tape;
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols out of range");
  Matrix<T> out = a.value().middleCols(start, count);
  return t.push(std::move(out), t.any_requires({a}), [a, start, count](Tape<T>& tp, std::size_t self) {
    Matrix<T>& ga = tp.grad_buffer(a.id);
    ga.middleCols(start, count) += tp.grad_buffer(self);
  });
}

template <typename T>
Var<T> slice_rows(Var<T> a, Eigen::Index start, Eigen::Index count) {
  auto& t = *a.tape;
  if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeError("slice_rows out of range");
  Matrix<T> out = a.value().middleRows(start, count);
  return t.push(std::move(out), t.any_requires({a}), [a, start, count](Tape<T>& tp, std::size_t self) {
    Matrix<T>& ga = tp.grad_buffer(a.id);
    ga.middleRows(start, count) += tp.grad_buffer(self);
  });
}

// Row-wise softmax. Columns with mask[j] == false get probability exactly 0.
// An empty mask means every column is visible.
template <typename T>
Matrix<T> softmax_rows_value(const Matrix<T>& s, const Mask& mask) {
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != s.cols())
    throw ShapeError("softmax mask length " + std::to_string(mask.size()) + " != " + std::to_string(s.cols()));
  if (!mask.empty() && count_true(mask) == 0) throw std::invalid_argument("softmax: every position is masked");
  Matrix<T> out = Matrix<T>::Zero(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (mask.empty() || mask[j]) mx = std::max(mx, s(i, j));
    T z = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      if (mask.empty() || mask[j]) {
        out(i, j) = std::exp(s(i, j) - mx);
        z += out(i, j);
      }
    }
    out.row(i) /= z;
  }
  return out;
}

template <typename T>
Var<T> softmax_rows(Var<T> a, const Mask& mask = {}) {
  auto& t = *a.tape;
  Matrix<T> y = softmax_rows_value(a.value(), mask);
  Var<T> r = t.push(y, t.any_requires({a}), [a](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    const Matrix<T>& yv = tp.value(Var<T>{&tp, self});
    Matrix<T> dot = g.cwiseProduct(yv).rowwise().sum();
    Matrix<T> ga = yv.cwiseProduct(g - dot.replicate(1, g.cols()));
    tp.add_grad(a, ga);
  });
  return r;
}

// Row i of the output is s(i) * row i of `a`; `s` is an m x 1 column.
template <typename T>
Var<T> scale_rows(Var<T> a, Var<T> s) {
  detail::check_same_tape(a, s);
  if (s.cols() != 1 || s.rows() != a.rows()) throw ShapeError("scale_rows: factor shape");
  auto& t = *a.tape;
  Matrix<T> out = a.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= s.value()(i, 0);
  return t.push(std::move(out), t.any_requires({a, s}), [a, s](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    if (tp.requires_grad(a)) {
      Matrix<T> ga = g;
      for (Eigen::Index i = 0; i < ga.rows(); ++i) ga.row(i) *= s.value()(i, 0);
      tp.add_grad(a, ga);
    }
    if (tp.requires_grad(s)) tp.add_grad(s, g.cwiseProduct(a.value()).rowwise().sum());
  });
}

// Mean over the rows whose mask entry is true; result is 1 x cols.
template <typename T>
Var<T> mean_rows(Var<T> a, const Mask& mask = {}) {
  auto& t = *a.tape;
  const Eigen::Index m = a.rows();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != m) throw ShapeError("mean_rows: mask length");
  const std::size_t n = mask.empty() ? static_cast<std::size_t>(m) : count_true(mask);
  if (n == 0) throw std::invalid_argument("mean_rows: every row is masked");
  Matrix<T> out = Matrix<T>::Zero(1, a.cols());
  for (Eigen::Index i = 0; i < m; ++i)
    if (mask.empty() || mask[i]) out += a.value().row(i);
  const T inv = T(1) / static_cast<T>(n);
  out *= inv;
  return t.push(std::move(out), t.any_requires({a}), [a, mask, inv](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    Matrix<T>& ga = tp.grad_buffer(a.id);
    for (Eigen::Index i = 0; i < ga.rows(); ++i)
      if (mask.empty() || mask[i]) ga.row(i) += g.row(0) * inv;
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  auto& t = *a.tape;
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  return t.push(std::move(out), t.any_requires({a}), [a](Tape<T>& tp, std::size_t self) {
    const T g = tp.grad_buffer(self)(0, 0);
    tp.grad_buffer(a.id).array() += g;
  });
}

// Embedding lookup: row k of the output is row ids[k] of `table`.
template <typename T>
Var<T> gather_rows(Var<T> table, const std::vector<TokenId>& ids) {
  auto& t = *table.tape;
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= table.rows()) throw std::out_of_range("gather_rows: id " + std::to_string(ids[k]));
    out.row(static_cast<Eigen::Index>(k)) = table.value().row(ids[k]);
  }
  return t.push(std::move(out), t.any_requires({table}), [table, ids](Tape<T>& tp, std::size_t self) {
    const Matrix<T>& g = tp.grad_buffer(self);
    Matrix<T>& gt = tp.grad_buffer(table.id);
    for (std::size_t k = 0; k < ids.size(); ++k) gt.row(ids[k]) += g.row(static_cast<Eigen::Index>(k));
  });
}

template <typename T>
Matrix<T> log_softmax_rows_value(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    const T lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

// Sum over rows of -log softmax(logits)[row, targets[row]]; result is 1x1.
template <typename T>
Var<T> cross_entropy(Var<T> logits, const std::vector<TokenId>& targets) {
  auto& t = *logits.tape;
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) throw ShapeError("cross_entropy: target count");
  Matrix<T> logp = log_softmax_rows_value(logits.value());
  Matrix<T> out(1, 1);
  out(0, 0) = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k] < 0 || targets[k] >= logits.cols()) throw std::out_of_range("cross_entropy: target id");
    out(0, 0) -= logp(static_cast<Eigen::Index>(k), targets[k]);
  }
  return t.push(std::move(out), t.any_requires({logits}),
                [logits, targets, logp = std::move(logp)](Tape<T>& tp, std::size_t self) {
                  const T g = tp.grad_buffer(self)(0, 0);
                  Matrix<T> gl = logp.array().exp().matrix();
                  for (std::size_t k = 0; k < targets.size(); ++k) gl(static_cast<Eigen::Index>(k), targets[k]) -= T(1);
                  tp.add_grad(logits, gl * g);
                });
}

}  // namespace edge::ad
