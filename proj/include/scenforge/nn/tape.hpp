#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scenforge::nn
{

using Matrix = Eigen::MatrixXd;

/// Trainable array. `grad` accumulates across backward passes until zeroed.
struct Parameter
{
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

using ParameterPtr = std::shared_ptr<Parameter>;
using ParameterList = std::vector<ParameterPtr>;

ParameterPtr make_parameter(std::string name, Matrix value);
void zero_grad(const ParameterList & params);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var
{
public:
  Var() = default;
  Var(Tape * tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix & value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  Tape * tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

private:
  Tape * tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape over dense 2-D matrices. Nodes are appended in evaluation
/// order, which is therefore a topological order; backward walks it once in
/// reverse. Every forward value is checked for NaN/Inf when it is recorded.
class Tape
{
public:
  using BackwardFn = std::function<void(Tape &, std::size_t self)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf whose gradient is kept and can be read with grad().
  Var input(Matrix value);
  /// Leaf bound to a parameter; one node per parameter per tape.
  Var param(const ParameterPtr & p);

  /// Records an op result. `backward` is dropped when no input needs a gradient.
  Var record(const char * op, Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(const char * op, Matrix value, const std::vector<Var> & inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
  /// into Parameter::grad. Throws ShapeError for a non-scalar loss and
  /// NumericError naming the op when a gradient turns non-finite.
  void backward(Var loss);

  const Matrix & value(std::size_t id) const { return nodes_[id].value; }
  const Matrix & grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Adds `delta` into the gradient buffer of node `id` (used by op backwards).
  void accumulate(std::size_t id, const Matrix & delta);
  template <typename Expr>
  void accumulate_expr(std::size_t id, const Expr & delta)
  {
    auto & n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = delta;
    } else {
      n.grad += delta;
    }
  }
  const Matrix & node_grad(std::size_t id) const { return nodes_[id].grad; }

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node
  {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    const char * op = "";
    BackwardFn backward;
    Parameter * param = nullptr;
  };

  std::size_t push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::pair<const Parameter *, std::size_t>> param_nodes_;
};

// Ops. All shapes are checked; mismatches throw ShapeError.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// x (n x m) + row (1 x m) broadcast over rows.
Var add_row(Var x, Var row);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope);
Var square(Var a);
Var sqrt(Var a);
Var log(Var a);
Var exp(Var a);
/// Sum of all entries -> 1 x 1.
Var sum(Var a);
Var mean(Var a);
/// Per-row sum -> n x 1.
Var row_sum(Var a);
Var concat_cols(const std::vector<Var> & parts);
Var concat_rows(const std::vector<Var> & parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
/// Mean squared difference against a constant target -> 1 x 1.
Var mse(Var prediction, const Matrix & target);
/// Mean binary cross-entropy of sigmoid(logits) against a constant label -> 1 x 1.
Var bce_with_logits(Var logits, double label);
/// Fused LSTM cell: gate pre-activations (n x 4H, order i,f,g,o) and c_prev
/// (n x H) -> [h | c] (n x 2H).
Var lstm_cell(Var gates, Var c_prev);

}  // namespace scenforge::nn
