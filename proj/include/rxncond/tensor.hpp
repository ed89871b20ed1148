//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNCOND_TENSOR_HPP_
#define RXNCOND_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rxncond {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape &shape);

/// Dense row-major tensor of doubles. Rank 1 tensors behave as a single row
/// wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor({ }, { value }); }
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Matrix view of the tensor; higher ranks fold all leading axes into rows.
  std::size_t rows() const;
  std::size_t cols() const;

  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double &operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }

  double item() const;

  friend bool operator==(const Tensor &, const Tensor &) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  Tape *tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape *tape, std::size_t id): tape_(tape), id_(id) { }

  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode autodiff tape. Operations append nodes in evaluation order and
/// `backward` replays their rules in reverse, so every path that consumed a
/// value contributes to its gradient.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape &, const Tensor &out_grad)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// Leaf whose gradient is tracked (parameters, inputs under test).
  Var variable(Tensor value);
  /// Leaf that never receives a gradient (adjacency, targets, masks).
  Var constant(Tensor value);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var> &inputs, BackwardFn fn);

  void backward(const Var &root);

  /// Gradient of the last backward root w.r.t. `v`; zeros if `v` did not
  /// participate.
  Tensor grad(const Var &v) const;

  const Tensor &value(const Var &v) const;
  bool requires_grad(const Var &v) const;
  void accumulate(const Var &v, const Tensor &g);
  bool owns(const Var &v) const { return v.tape_ == this && v.id_ < nodes_.size(); }

  std::size_t size() const { return nodes_.size(); }
  std::size_t last_backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn fn);

  std::deque<Node> nodes_;
  std::size_t visits_ = 0;
};

// Differentiable operations. All operands must live on the same tape.
Var matmul(const Var &a, const Var &b);
Var add(const Var &a, const Var &b);
Var sub(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
Var scale(const Var &a, double factor);
Var one_minus(const Var &a);
/// x[n×m] + bias broadcast over rows (bias has m entries).
Var add_bias(const Var &x, const Var &bias);
/// Multiplies row i of x by the constant weights[i].
Var scale_rows(const Var &x, std::vector<double> weights);
Var relu(const Var &a);
Var sigmoid(const Var &a);
Var tanh(const Var &a);
Var softmax_rows(const Var &a);
/// Column sums: [n×m] -> [1×m].
Var sum_rows(const Var &a);
/// Sum of all entries -> scalar.
Var sum(const Var &a);
Var concat_cols(const std::vector<Var> &parts);
Var concat_rows(const std::vector<Var> &parts);
/// Row lookup into a table, e.g. an embedding matrix.
Var gather_rows(const Var &table, std::vector<std::size_t> indices);

/// Mean over all entries of the numerically stable binary cross-entropy
/// max(z,0) - z*t + log(1 + exp(-|z|)). Targets must be 0 or 1.
Var sigmoid_cross_entropy(const Var &logits, const Tensor &targets);

struct GruParams {
  Var w_z, u_z, b_z;
  Var w_r, u_r, b_r;
  Var w_h, u_h, b_h;
};

/// GRU update on row vectors. Each row of `input`/`hidden` is one node.
///   z = sig(x Wz + h Uz + bz), r = sig(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r*h) Uh + bh), out = (1-z)*h + z*h~
Var gru_cell(const Var &input, const Var &hidden, const GruParams &p);

class BoundParameters;

/// Ordered, named parameter tensors.
class Parameters {
 public:
  void add(std::string name, Tensor value);

  bool contains(const std::string &name) const;
  std::size_t index_of(const std::string &name) const;
  const Tensor &get(const std::string &name) const;
  Tensor &get(const std::string &name);

  std::size_t size() const { return values_.size(); }
  const std::string &name(std::size_t i) const { return names_[i]; }
  const Tensor &value(std::size_t i) const { return values_[i]; }
  Tensor &value(std::size_t i) { return values_[i]; }
  std::size_t element_count() const;

  /// Registers every tensor on `tape`; untracked bindings skip gradients.
  BoundParameters bind(Tape &tape, bool track_gradients = true) const;

  friend bool operator==(const Parameters &a, const Parameters &b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parameters registered as variables on one tape.
class BoundParameters {
 public:
  BoundParameters(const Parameters &params, std::vector<Var> vars)
      : params_(&params), vars_(std::move(vars)) { }

  Var operator[](const std::string &name) const;
  Var at(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }
  std::vector<Tensor> gradients() const;

 private:
  const Parameters *params_;
  std::vector<Var> vars_;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64 &rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(const Parameters &params, AdamConfig config = { });

  std::uint64_t step() const { return step_; }
  const AdamConfig &config() const { return config_; }
  const Tensor &first_moment(std::size_t i) const { return m_[i]; }
  const Tensor &second_moment(std::size_t i) const { return v_[i]; }

 private:
  friend void adam_step(Parameters &, std::span<const Tensor>, AdamState &);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// Bias-corrected Adam update. A parameter whose gradient is identically zero
/// is left untouched, moments included; the step counter always advances.
void adam_step(Parameters &params, std::span<const Tensor> grads, AdamState &state);

}  // namespace rxncond

#endif  // RXNCOND_TENSOR_HPP_
