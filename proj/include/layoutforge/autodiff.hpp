#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "random.hpp"

// Reverse-mode automatic differentiation over dense float64 arrays.
//
// A Tape records every value produced during one forward evaluation. Nodes
// only ever reference earlier nodes, so the record is topologically ordered
// by construction and backward is a single reverse sweep.
namespace layoutforge::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Eigen::Index size() const { return value().size(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  std::vector<int> parents;
  // Pushes this node's grad into its parents.
  std::function<void(Tape&, const Node&)> backward;
  const char* op = "leaf";
  bool requires_grad = false;
};

class Tape {
 public:
  Tape() { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  Var constant(Matrix value) { return leaf(std::move(value), false); }

  Var scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  Var record(Matrix value, std::vector<int> parents, const char* op,
             std::function<void(Tape&, const Node&)> backward) {
    Node n;
    n.value = std::move(value);
    n.op = op;
    for (int p : parents) {
      if (p < 0 || p >= static_cast<int>(nodes_.size())) throw CycleDetected(std::string("bad parent in ") + op);
      n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
    }
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  const Node& node(int id) const { return nodes_[id]; }
  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Adds `g` into the gradient of node `id` if it participates in backward.
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Gradient buffer of `id`, zero-initialized on first touch.
  Matrix& grad_buffer(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  const Matrix& grad(int id) {
    return grad_buffer(id);
  }

  // Reverse sweep from a scalar root. Every node is visited once, after all
  // of its consumers (they have larger ids).
  void backward(Var root) {
    if (root.tape() != this) throw CycleDetected("root belongs to another tape");
    const Node& r = nodes_[root.id()];
    if (r.value.size() != 1) throw ShapeMismatch("backward root must be scalar");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[root.id()].grad = Matrix::Ones(1, 1);
    for (int id = root.id(); id >= 0; --id) {
      const Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
      for (int p : n.parents)
        if (p >= id) throw CycleDetected(std::string("node ") + n.op + " consumes a later node");
      n.backward(*this, n);
    }
  }

 private:
  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }

namespace detail {

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(op) + ": shape mismatch");
}

inline Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ShapeMismatch("operation on an unbound Var");
  return *a.tape();
}

inline Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw ShapeMismatch("operands live on different tapes");
  return tape_of(a);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

inline Var add(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "add");
  Tape& t = detail::tape_of(a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), {ia, ib}, "add", [ia, ib](Tape& t, const Node& n) {
    t.accumulate(ia, n.grad);
    t.accumulate(ib, n.grad);
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "sub");
  Tape& t = detail::tape_of(a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), {ia, ib}, "sub", [ia, ib](Tape& t, const Node& n) {
    t.accumulate(ia, n.grad);
    t.accumulate(ib, -n.grad);
  });
}

inline Var mul(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "mul");
  Tape& t = detail::tape_of(a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseProduct(b.value()), {ia, ib}, "mul", [ia, ib](Tape& t, const Node& n) {
    t.accumulate(ia, n.grad.cwiseProduct(t.value(ib)));
    t.accumulate(ib, n.grad.cwiseProduct(t.value(ia)));
  });
}

inline Var scale(const Var& a, double k) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  return t.record(a.value() * k, {ia}, "scale", [ia, k](Tape& t, const Node& n) { t.accumulate(ia, n.grad * k); });
}

inline Var add_scalar(const Var& a, double k) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  return t.record((a.value().array() + k).matrix(), {ia}, "add_scalar",
                  [ia](Tape& t, const Node& n) { t.accumulate(ia, n.grad); });
}

inline Var square(const Var& a) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  return t.record(a.value().cwiseAbs2(), {ia}, "square",
                  [ia](Tape& t, const Node& n) { t.accumulate(ia, 2.0 * n.grad.cwiseProduct(t.value(ia))); });
}

// Subgradient at a tie goes to the first operand.
inline Var minimum(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "minimum");
  Tape& t = detail::tape_of(a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseMin(b.value()), {ia, ib}, "minimum", [ia, ib](Tape& t, const Node& n) {
    const Matrix& va = t.value(ia);
    const Matrix& vb = t.value(ib);
    Matrix ga = Matrix::Zero(va.rows(), va.cols());
    Matrix gb = ga;
    for (Eigen::Index i = 0; i < va.size(); ++i) (va(i) <= vb(i) ? ga(i) : gb(i)) = n.grad(i);
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

inline Var maximum(const Var& a, const Var& b) {
  detail::check_same_shape(a, b, "maximum");
  Tape& t = detail::tape_of(a, b);
  const int ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseMax(b.value()), {ia, ib}, "maximum", [ia, ib](Tape& t, const Node& n) {
    const Matrix& va = t.value(ia);
    const Matrix& vb = t.value(ib);
    Matrix ga = Matrix::Zero(va.rows(), va.cols());
    Matrix gb = ga;
    for (Eigen::Index i = 0; i < va.size(); ++i) (va(i) >= vb(i) ? ga(i) : gb(i)) = n.grad(i);
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

// ---------------------------------------------------------------------------
// Reductions and structure

inline Var sum(const Var& a) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return t.record(std::move(v), {ia}, "sum", [ia](Tape& t, const Node& n) {
    const Matrix& va = t.value(ia);
    t.accumulate(ia, Matrix::Constant(va.rows(), va.cols(), n.grad(0, 0)));
  });
}

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

// Column vectors stacked top to bottom.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  Tape& t = detail::tape_of(parts.front());
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> lens;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ShapeMismatch("concat across tapes");
    if (p.cols() != 1) throw ShapeMismatch("concat expects column vectors");
    rows += p.rows();
    ids.push_back(p.id());
    lens.push_back(p.rows());
  }
  Matrix v(rows, 1);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    v.block(off, 0, p.rows(), 1) = p.value();
    off += p.rows();
  }
  return t.record(std::move(v), ids, "concat", [ids, lens](Tape& t, const Node& n) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.accumulate(ids[i], n.grad.block(off, 0, lens[i], 1));
      off += lens[i];
    }
  });
}

inline Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

inline Var slice(const Var& a, Eigen::Index offset, Eigen::Index length) {
  if (a.cols() != 1 || offset < 0 || length < 0 || offset + length > a.rows())
    throw ShapeMismatch("slice out of range");
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  return t.record(a.value().block(offset, 0, length, 1), {ia}, "slice", [ia, offset, length](Tape& t, const Node& n) {
    t.grad_buffer(ia).block(offset, 0, length, 1) += n.grad;
  });
}

inline Var matvec(const Var& w, const Var& x) {
  if (x.cols() != 1 || w.cols() != x.rows()) throw ShapeMismatch("matvec: shape mismatch");
  Tape& t = detail::tape_of(w, x);
  const int iw = w.id(), ix = x.id();
  return t.record(w.value() * x.value(), {iw, ix}, "matvec", [iw, ix](Tape& t, const Node& n) {
    if (t.requires_grad(iw)) t.grad_buffer(iw).noalias() += n.grad * t.value(ix).transpose();
    if (t.requires_grad(ix)) t.grad_buffer(ix).noalias() += t.value(iw).transpose() * n.grad;
  });
}

// ---------------------------------------------------------------------------
// Activations

inline double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Var sigmoid(const Var& a) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  Matrix v = a.value().unaryExpr([](double x) { return sigmoid_value(x); });
  return t.record(std::move(v), {ia}, "sigmoid", [ia](Tape& t, const Node& n) {
    t.accumulate(ia, n.grad.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
  });
}

inline Var tanh(const Var& a) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  Matrix v = a.value().array().tanh().matrix();
  return t.record(std::move(v), {ia}, "tanh", [ia](Tape& t, const Node& n) {
    t.accumulate(ia, n.grad.cwiseProduct((1.0 - n.value.array().square()).matrix()));
  });
}

// Derivative at exactly 0 is 0.
inline Var relu(const Var& a) {
  Tape& t = detail::tape_of(a);
  const int ia = a.id();
  return t.record(a.value().cwiseMax(0.0), {ia}, "relu", [ia](Tape& t, const Node& n) {
    const Matrix& x = t.value(ia);
    t.accumulate(ia, n.grad.cwiseProduct(x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; })));
  });
}

// Inverted dropout: kept entries are scaled by 1/(1-p) while training, and the
// op is the identity otherwise.
inline Var dropout(const Var& a, double p, bool train, std::uint64_t seed) {
  if (!train || p <= 0.0) return a;
  Tape& t = detail::tape_of(a);
  Rng rng(seed);
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = rng.uniform() < p ? 0.0 : keep;
  const int ia = a.id();
  return t.record(a.value().cwiseProduct(mask), {ia}, "dropout",
                  [ia, mask](Tape& t, const Node& n) { t.accumulate(ia, n.grad.cwiseProduct(mask)); });
}

// ---------------------------------------------------------------------------
// LSTM

struct LstmState {
  Var h;
  Var c;
};

// Fused LSTM cell. Gate rows are ordered input, forget, candidate, output:
//   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c).
// Returns [h; c] as one column so the recurrence stays a single node.
inline Var lstm_cell_packed(const Var& x, const Var& hc_prev, const Var& w_in, const Var& w_rec, const Var& bias) {
  const Eigen::Index hidden = w_rec.cols();
  if (x.cols() != 1 || hc_prev.cols() != 1 || hc_prev.rows() != 2 * hidden || w_in.rows() != 4 * hidden ||
      w_in.cols() != x.rows() || w_rec.rows() != 4 * hidden || bias.rows() != 4 * hidden || bias.cols() != 1)
    throw ShapeMismatch("lstm_cell: inconsistent dimensions");
  Tape& t = detail::tape_of(x);
  const Matrix& hc = hc_prev.value();
  const auto h_prev = hc.block(0, 0, hidden, 1);
  const auto c_prev = hc.block(hidden, 0, hidden, 1);

  Vector pre = w_in.value() * x.value() + w_rec.value() * h_prev + bias.value();
  Vector gates(4 * hidden);
  for (Eigen::Index k = 0; k < hidden; ++k) {
    gates(k) = sigmoid_value(pre(k));
    gates(hidden + k) = sigmoid_value(pre(hidden + k));
    gates(2 * hidden + k) = std::tanh(pre(2 * hidden + k));
    gates(3 * hidden + k) = sigmoid_value(pre(3 * hidden + k));
  }
  Matrix out(2 * hidden, 1);
  Vector tanh_c(hidden);
  for (Eigen::Index k = 0; k < hidden; ++k) {
    const double c = gates(hidden + k) * c_prev(k, 0) + gates(k) * gates(2 * hidden + k);
    tanh_c(k) = std::tanh(c);
    out(hidden + k, 0) = c;
    out(k, 0) = gates(3 * hidden + k) * tanh_c(k);
  }

  const int ix = x.id(), ihc = hc_prev.id(), iwi = w_in.id(), iwr = w_rec.id(), ib = bias.id();
  return t.record(std::move(out), {ix, ihc, iwi, iwr, ib}, "lstm_cell",
                  [=, gates = std::move(gates), tanh_c = std::move(tanh_c)](Tape& t, const Node& n) {
                    const Matrix& hcp = t.value(ihc);
                    Vector dpre(4 * hidden);
                    Vector dc_prev(hidden);
                    for (Eigen::Index k = 0; k < hidden; ++k) {
                      const double i = gates(k), f = gates(hidden + k), g = gates(2 * hidden + k),
                                   o = gates(3 * hidden + k);
                      const double dh = n.grad(k, 0);
                      const double dc = n.grad(hidden + k, 0) + dh * o * (1.0 - tanh_c(k) * tanh_c(k));
                      dpre(k) = dc * g * i * (1.0 - i);
                      dpre(hidden + k) = dc * hcp(hidden + k, 0) * f * (1.0 - f);
                      dpre(2 * hidden + k) = dc * i * (1.0 - g * g);
                      dpre(3 * hidden + k) = dh * tanh_c(k) * o * (1.0 - o);
                      dc_prev(k) = dc * f;
                    }
                    if (t.requires_grad(iwi)) t.grad_buffer(iwi).noalias() += dpre * t.value(ix).transpose();
                    if (t.requires_grad(iwr))
                      t.grad_buffer(iwr).noalias() += dpre * hcp.block(0, 0, hidden, 1).transpose();
                    if (t.requires_grad(ib)) t.grad_buffer(ib) += dpre;
                    if (t.requires_grad(ix)) t.grad_buffer(ix).noalias() += t.value(iwi).transpose() * dpre;
                    if (t.requires_grad(ihc)) {
                      Matrix& g = t.grad_buffer(ihc);
                      g.block(0, 0, hidden, 1).noalias() += t.value(iwr).transpose() * dpre;
                      g.block(hidden, 0, hidden, 1) += dc_prev;
                    }
                  });
}

inline LstmState lstm_cell(const Var& x, const Var& h_prev, const Var& c_prev, const Var& w_in, const Var& w_rec,
                           const Var& bias) {
  const Eigen::Index hidden = w_rec.cols();
  const Var hc = lstm_cell_packed(x, concat({h_prev, c_prev}), w_in, w_rec, bias);
  return {slice(hc, 0, hidden), slice(hc, hidden, hidden)};
}

// ---------------------------------------------------------------------------
// Finite-difference checking

// Builds the scalar function on a fresh tape from leaf Vars.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // Denominator floor of the relative error.
  double floor = 1e-8;
  // Coordinates checked per leaf; 0 checks all of them.
  std::size_t samples_per_leaf = 0;
  std::uint64_t seed = 7;
  // Optional filter (leaf index, flat coordinate) -> check it?
  std::function<bool(std::size_t, Eigen::Index)> include;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

inline double evaluate(const ScalarFn& f, std::span<const Matrix> values) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(values.size());
  for (const auto& v : values) leaves.push_back(tape.leaf(v, false));
  return f(tape, leaves).scalar();
}

// Max over checked coordinates of |analytic - numeric| / max(floor, |numeric|)
// with central differences.
inline GradCheckResult grad_check(const ScalarFn& f, std::vector<Matrix> values, const GradCheckOptions& opt = {}) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const auto& v : values) leaves.push_back(tape.leaf(v, true));
    const Var root = f(tape, leaves);
    tape.backward(root);
    for (const auto& l : leaves) analytic.push_back(l.grad());
  }
  GradCheckResult result;
  Rng rng(opt.seed);
  for (std::size_t li = 0; li < values.size(); ++li) {
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(values[li].size()));
    for (std::size_t k = 0; k < coords.size(); ++k) coords[k] = static_cast<Eigen::Index>(k);
    if (opt.samples_per_leaf > 0 && coords.size() > opt.samples_per_leaf) {
      rng.shuffle(coords);
      coords.resize(opt.samples_per_leaf);
    }
    for (Eigen::Index c : coords) {
      if (opt.include && !opt.include(li, c)) continue;
      const double x0 = values[li](c);
      values[li](c) = x0 + opt.eps;
      const double fp = evaluate(f, values);
      values[li](c) = x0 - opt.eps;
      const double fm = evaluate(f, values);
      values[li](c) = x0;
      const double numeric = (fp - fm) / (2.0 * opt.eps);
      const double err = std::abs(analytic[li](c) - numeric) / std::max(opt.floor, std::abs(numeric));
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace layoutforge::ad
