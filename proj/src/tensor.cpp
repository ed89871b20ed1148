//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include "rxncond/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "rxncond/error.hpp"

namespace rxncond {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor &t) {
  return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

MatrixMap as_matrix(Tensor &t) {
  return MatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

std::size_t product(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t { 1 },
                         std::multiplies<> { });
}

Tape &common_tape(const Var &a, const Var &b) {
  if (!a.valid() || a.tape() != b.tape())
    throw UsageError("operands recorded on different tapes");
  return *a.tape();
}

void require_same_shape(const char *op, const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch "
                         + shape_string(a.shape()) + " vs "
                         + shape_string(b.shape()));
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0)
      os << "x";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/* Tensor */

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) { }

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " needs "
                         + std::to_string(product(shape_)) + " values, got "
                         + std::to_string(values_.size()));
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({ 1, n }, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto &row: rows) {
    if (row.size() != c)
      throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({ r, c }, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() < 2)
    return 1;
  return values_.size() / shape_.back();
}

std::size_t Tensor::cols() const {
  if (shape_.empty())
    return 1;
  return shape_.back();
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_string(shape_));
  }
  return values_[0];
}

/* Tape */

const Tensor &Var::value() const {
  return tape_->value(*this);
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node { std::move(value), Tensor(), std::move(fn),
                          requires_grad });
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  return push(std::move(value), true, nullptr);
}

Var Tape::constant(Tensor value) {
  return push(std::move(value), false, nullptr);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool any = false;
  for (const Var &v: inputs) {
    if (!owns(v))
      throw UsageError("operand not recorded on this tape");
    any = any || nodes_[v.id_].requires_grad;
  }
  return push(std::move(value), any, any ? std::move(fn) : nullptr);
}

Var Tape::record(Tensor value, const std::vector<Var> &inputs, BackwardFn fn) {
  bool any = false;
  for (const Var &v: inputs) {
    if (!owns(v))
      throw UsageError("operand not recorded on this tape");
    any = any || nodes_[v.id_].requires_grad;
  }
  return push(std::move(value), any, any ? std::move(fn) : nullptr);
}

const Tensor &Tape::value(const Var &v) const {
  return nodes_[v.id_].value;
}

bool Tape::requires_grad(const Var &v) const {
  return nodes_[v.id_].requires_grad;
}

void Tape::accumulate(const Var &v, const Tensor &g) {
  Node &node = nodes_[v.id_];
  if (!node.requires_grad)
    return;
  if (g.size() != node.value.size()) {
    throw DimensionError("gradient of shape " + shape_string(g.shape())
                         + " for value of shape "
                         + shape_string(node.value.shape()));
  }
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Tensor(node.value.shape(), std::vector<double>(g.values().begin(),
                                                               g.values().end()));
    return;
  }
  auto dst = node.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] += src[i];
}

void Tape::backward(const Var &root) {
  if (!owns(root))
    throw UsageError("backward root was not produced on this tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw UsageError("backward root must be a scalar, got shape "
                     + shape_string(nodes_[root.id_].value.shape()));
  }
  for (Node &n: nodes_)
    n.grad = Tensor();
  visits_ = 0;

  Node &r = nodes_[root.id_];
  if (!r.requires_grad)
    return;
  r.grad = Tensor(r.value.shape(), 1.0);

  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node &node = nodes_[i];
    if (!node.backward || node.grad.empty())
      continue;
    node.backward(*this, node.grad);
    ++visits_;
  }
}

Tensor Tape::grad(const Var &v) const {
  if (!owns(v))
    throw UsageError("gradient requested for a value not on this tape");
  const Node &node = nodes_[v.id_];
  if (node.grad.empty())
    return Tensor(node.value.shape(), 0.0);
  return node.grad;
}

/* Operations */

Var matmul(const Var &a, const Var &b) {
  Tape &tape = common_tape(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  if (av.cols() != bv.rows() || bv.rank() > 2 || av.rank() > 2) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(av.shape())
                         + " and " + shape_string(bv.shape()));
  }
  Tensor out({ av.rows(), bv.cols() });
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);

  return tape.record(std::move(out), { a, b },
                     [a, b](Tape &t, const Tensor &g) {
                       const Tensor &av = a.value();
                       const Tensor &bv = b.value();
                       if (t.requires_grad(a)) {
                         Tensor ga(av.shape());
                         as_matrix(ga).noalias() =
                             as_matrix(g) * as_matrix(bv).transpose();
                         t.accumulate(a, ga);
                       }
                       if (t.requires_grad(b)) {
                         Tensor gb(bv.shape());
                         as_matrix(gb).noalias() =
                             as_matrix(av).transpose() * as_matrix(g);
                         t.accumulate(b, gb);
                       }
                     });
}

Var add(const Var &a, const Var &b) {
  Tape &tape = common_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  as_matrix(out) += as_matrix(b.value());
  return tape.record(std::move(out), { a, b }, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var &a, const Var &b) {
  Tape &tape = common_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  as_matrix(out) -= as_matrix(b.value());
  return tape.record(std::move(out), { a, b }, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a, g);
    Tensor neg = g;
    for (double &v: neg.values())
      v = -v;
    t.accumulate(b, neg);
  });
}

Var mul(const Var &a, const Var &b) {
  Tape &tape = common_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  as_matrix(out).array() *= as_matrix(b.value()).array();
  return tape.record(std::move(out), { a, b }, [a, b](Tape &t, const Tensor &g) {
    if (t.requires_grad(a)) {
      Tensor ga = g;
      as_matrix(ga).array() *= as_matrix(b.value()).array();
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Tensor gb = g;
      as_matrix(gb).array() *= as_matrix(a.value()).array();
      t.accumulate(b, gb);
    }
  });
}

Var scale(const Var &a, double factor) {
  Tensor out = a.value();
  for (double &v: out.values())
    v *= factor;
  return a.tape()->record(std::move(out), { a },
                          [a, factor](Tape &t, const Tensor &g) {
                            Tensor ga = g;
                            for (double &v: ga.values())
                              v *= factor;
                            t.accumulate(a, ga);
                          });
}

Var one_minus(const Var &a) {
  Tensor out = a.value();
  for (double &v: out.values())
    v = 1.0 - v;
  return a.tape()->record(std::move(out), { a }, [a](Tape &t, const Tensor &g) {
    Tensor ga = g;
    for (double &v: ga.values())
      v = -v;
    t.accumulate(a, ga);
  });
}

Var add_bias(const Var &x, const Var &bias) {
  Tape &tape = common_tape(x, bias);
  const Tensor &xv = x.value();
  const Tensor &bv = bias.value();
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape())
                         + " does not match " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  auto m = as_matrix(out);
  const Eigen::Map<const Eigen::RowVectorXd> b(bv.data(),
                                               static_cast<Eigen::Index>(bv.size()));
  m.rowwise() += b;
  return tape.record(std::move(out), { x, bias },
                     [x, bias](Tape &t, const Tensor &g) {
                       t.accumulate(x, g);
                       if (t.requires_grad(bias)) {
                         Tensor gb(bias.value().shape());
                         Eigen::Map<Eigen::RowVectorXd>(
                             gb.data(), static_cast<Eigen::Index>(gb.size())) =
                             as_matrix(g).colwise().sum();
                         t.accumulate(bias, gb);
                       }
                     });
}

Var scale_rows(const Var &x, std::vector<double> weights) {
  const Tensor &xv = x.value();
  if (weights.size() != xv.rows()) {
    throw DimensionError("scale_rows: " + std::to_string(weights.size())
                         + " weights for " + shape_string(xv.shape()));
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(),
                                            static_cast<Eigen::Index>(weights.size()));
  Tensor out = xv;
  as_matrix(out) = w.asDiagonal() * as_matrix(xv);
  return x.tape()->record(std::move(out), { x },
                          [x, weights = std::move(weights)](Tape &t,
                                                            const Tensor &g) {
                            const Eigen::Map<const Eigen::VectorXd> w(
                                weights.data(),
                                static_cast<Eigen::Index>(weights.size()));
                            Tensor gx = g;
                            as_matrix(gx) = w.asDiagonal() * as_matrix(g);
                            t.accumulate(x, gx);
                          });
}

Var relu(const Var &a) {
  Tensor out = a.value();
  for (double &v: out.values())
    v = v > 0 ? v : 0.0;
  return a.tape()->record(std::move(out), { a }, [a](Tape &t, const Tensor &g) {
    Tensor ga = g;
    const auto x = a.value().values();
    auto gv = ga.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
      if (x[i] <= 0)
        gv[i] = 0.0;
    }
    t.accumulate(a, ga);
  });
}

Var sigmoid(const Var &a) {
  Tensor out = a.value();
  for (double &v: out.values())
    v = sigmoid_scalar(v);
  Tensor y = out;
  return a.tape()->record(std::move(out), { a },
                          [a, y = std::move(y)](Tape &t, const Tensor &g) {
                            Tensor ga = g;
                            const auto yv = y.values();
                            auto gv = ga.values();
                            for (std::size_t i = 0; i < gv.size(); ++i)
                              gv[i] *= yv[i] * (1.0 - yv[i]);
                            t.accumulate(a, ga);
                          });
}

Var tanh(const Var &a) {
  Tensor out = a.value();
  for (double &v: out.values())
    v = std::tanh(v);
  return a.tape()->record(std::move(out), { a }, [a](Tape &t, const Tensor &g) {
    Tensor ga = g;
    const auto x = a.value().values();
    auto gv = ga.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
      const double y = std::tanh(x[i]);
      gv[i] *= 1.0 - y * y;
    }
    t.accumulate(a, ga);
  });
}

Var softmax_rows(const Var &a) {
  const Tensor &av = a.value();
  Tensor out = av;
  const std::size_t rows = out.rows(), cols = out.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < cols; ++c)
      mx = std::max(mx, out(r, c));
    double s = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = std::exp(out(r, c) - mx);
      s += out(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c)
      out(r, c) /= s;
  }
  Tensor y = out;
  return a.tape()->record(std::move(out), { a },
                          [a, y = std::move(y)](Tape &t, const Tensor &g) {
                            Tensor ga = g;
                            const std::size_t rows = y.rows(), cols = y.cols();
                            for (std::size_t r = 0; r < rows; ++r) {
                              double dot = 0;
                              for (std::size_t c = 0; c < cols; ++c)
                                dot += g(r, c) * y(r, c);
                              for (std::size_t c = 0; c < cols; ++c)
                                ga(r, c) = y(r, c) * (g(r, c) - dot);
                            }
                            t.accumulate(a, ga);
                          });
}

Var sum_rows(const Var &a) {
  const Tensor &av = a.value();
  Tensor out({ 1, av.cols() });
  Eigen::Map<Eigen::RowVectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
      as_matrix(av).colwise().sum();
  return a.tape()->record(std::move(out), { a }, [a](Tape &t, const Tensor &g) {
    const Tensor &av = a.value();
    Tensor ga(av.shape());
    const Eigen::Map<const Eigen::RowVectorXd> gr(g.data(),
                                                  static_cast<Eigen::Index>(g.size()));
    as_matrix(ga).rowwise() = gr;
    t.accumulate(a, ga);
  });
}

Var sum(const Var &a) {
  const auto v = a.value().values();
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  return a.tape()->record(Tensor::scalar(s), { a }, [a](Tape &t, const Tensor &g) {
    t.accumulate(a, Tensor(a.value().shape(), g[0]));
  });
}

Var concat_cols(const std::vector<Var> &parts) {
  if (parts.empty())
    throw DimensionError("concat_cols: no operands");
  Tape &tape = *parts.front().tape();
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  for (const Var &p: parts) {
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch "
                           + shape_string(parts.front().shape()) + " vs "
                           + shape_string(p.shape()));
    }
    cols += p.value().cols();
  }
  Tensor out({ rows, cols });
  std::size_t offset = 0;
  for (const Var &p: parts) {
    const Tensor &pv = p.value();
    as_matrix(out).middleCols(static_cast<Eigen::Index>(offset),
                              static_cast<Eigen::Index>(pv.cols())) = as_matrix(pv);
    offset += pv.cols();
  }
  return tape.record(std::move(out), parts, [parts](Tape &t, const Tensor &g) {
    std::size_t offset = 0;
    for (const Var &p: parts) {
      const Tensor &pv = p.value();
      if (t.requires_grad(p)) {
        Tensor gp(pv.shape());
        as_matrix(gp) = as_matrix(g).middleCols(static_cast<Eigen::Index>(offset),
                                                static_cast<Eigen::Index>(pv.cols()));
        t.accumulate(p, gp);
      }
      offset += pv.cols();
    }
  });
}

Var concat_rows(const std::vector<Var> &parts) {
  if (parts.empty())
    throw DimensionError("concat_rows: no operands");
  Tape &tape = *parts.front().tape();
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const Var &p: parts) {
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: column mismatch "
                           + shape_string(parts.front().shape()) + " vs "
                           + shape_string(p.shape()));
    }
    rows += p.value().rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const Var &p: parts) {
    const auto v = p.value().values();
    values.insert(values.end(), v.begin(), v.end());
  }
  return tape.record(Tensor({ rows, cols }, std::move(values)), parts,
                     [parts](Tape &t, const Tensor &g) {
                       std::size_t offset = 0;
                       for (const Var &p: parts) {
                         const Tensor &pv = p.value();
                         if (t.requires_grad(p)) {
                           std::vector<double> slice(
                               g.values().begin() + static_cast<std::ptrdiff_t>(offset),
                               g.values().begin()
                                   + static_cast<std::ptrdiff_t>(offset + pv.size()));
                           t.accumulate(p, Tensor(pv.shape(), std::move(slice)));
                         }
                         offset += pv.size();
                       }
                     });
}

Var gather_rows(const Var &table, std::vector<std::size_t> indices) {
  const Tensor &tv = table.value();
  const std::size_t cols = tv.cols();
  Tensor out({ indices.size(), cols });
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tv.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i])
                           + " out of range for " + shape_string(tv.shape()));
    }
    std::copy_n(tv.data() + indices[i] * cols, cols, out.data() + i * cols);
  }
  return table.tape()->record(
      std::move(out), { table },
      [table, indices = std::move(indices)](Tape &t, const Tensor &g) {
        const Tensor &tv = table.value();
        const std::size_t cols = tv.cols();
        Tensor gt(tv.shape());
        for (std::size_t i = 0; i < indices.size(); ++i) {
          for (std::size_t c = 0; c < cols; ++c)
            gt[indices[i] * cols + c] += g[i * cols + c];
        }
        t.accumulate(table, gt);
      });
}

Var sigmoid_cross_entropy(const Var &logits, const Tensor &targets) {
  const Tensor &z = logits.value();
  require_same_shape("sigmoid_cross_entropy", z, targets);
  if (z.empty())
    throw DimensionError("sigmoid_cross_entropy: empty logits");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] != 0.0 && targets[i] != 1.0) {
      throw ValidationError("sigmoid_cross_entropy: target " + std::to_string(i)
                            + " is " + std::to_string(targets[i])
                            + ", expected 0 or 1");
    }
  }
  double total = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = z[i];
    total += std::max(x, 0.0) - x * targets[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(z.size());
  return logits.tape()->record(
      Tensor::scalar(total / n), { logits },
      [logits, targets, n](Tape &t, const Tensor &g) {
        const Tensor &z = logits.value();
        Tensor gz(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i)
          gz[i] = g[0] * (sigmoid_scalar(z[i]) - targets[i]) / n;
        t.accumulate(logits, gz);
      });
}

Var gru_cell(const Var &input, const Var &hidden, const GruParams &p) {
  if (input.value().rows() != hidden.value().rows()) {
    throw DimensionError("gru_cell: input " + shape_string(input.shape())
                         + " and hidden " + shape_string(hidden.shape())
                         + " have different row counts");
  }
  const Var z = sigmoid(add_bias(add(matmul(input, p.w_z), matmul(hidden, p.u_z)),
                                 p.b_z));
  const Var r = sigmoid(add_bias(add(matmul(input, p.w_r), matmul(hidden, p.u_r)),
                                 p.b_r));
  const Var candidate = tanh(add_bias(
      add(matmul(input, p.w_h), matmul(mul(r, hidden), p.u_h)), p.b_h));
  return add(mul(one_minus(z), hidden), mul(z, candidate));
}

/* Parameters */

void Parameters::add(std::string name, Tensor value) {
  if (index_.contains(name))
    throw UsageError("duplicate parameter name '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool Parameters::contains(const std::string &name) const {
  return index_.contains(name);
}

std::size_t Parameters::index_of(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw UsageError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor &Parameters::get(const std::string &name) const {
  return values_[index_of(name)];
}

Tensor &Parameters::get(const std::string &name) {
  return values_[index_of(name)];
}

std::size_t Parameters::element_count() const {
  std::size_t n = 0;
  for (const Tensor &t: values_)
    n += t.size();
  return n;
}

BoundParameters Parameters::bind(Tape &tape, bool track_gradients) const {
  std::vector<Var> vars;
  vars.reserve(values_.size());
  for (const Tensor &t: values_)
    vars.push_back(track_gradients ? tape.variable(t) : tape.constant(t));
  return BoundParameters(*this, std::move(vars));
}

Var BoundParameters::operator[](const std::string &name) const {
  return vars_[params_->index_of(name)];
}

std::vector<Tensor> BoundParameters::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const Var &v: vars_)
    out.push_back(v.tape()->grad(v));
  return out;
}

Tensor uniform_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double &v: t.values())
    v = dist(rng);
  return t;
}

/* Adam */

AdamState::AdamState(const Parameters &params, AdamConfig config)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.value(i).shape());
    v_.emplace_back(params.value(i).shape());
  }
}

void adam_step(Parameters &params, std::span<const Tensor> grads, AdamState &state) {
  if (grads.size() != params.size() || state.m_.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(grads.size())
                         + " gradients for " + std::to_string(params.size())
                         + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params.value(i).shape()) {
      throw DimensionError("adam_step: gradient " + shape_string(grads[i].shape())
                           + " for parameter '" + params.name(i) + "' of shape "
                           + shape_string(params.value(i).shape()));
    }
    for (double g: grads[i].values()) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient for parameter '"
                            + params.name(i) + "'");
      }
    }
  }

  ++state.step_;
  const AdamConfig &c = state.config_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = grads[i].values();
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; }))
      continue;
    auto p = params.value(i).values();
    auto m = state.m_[i].values();
    auto v = state.v_[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace rxncond
