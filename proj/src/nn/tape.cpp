#include "scenforge/nn/tape.hpp"

#include <string>

#include "scenforge/errors.hpp"

namespace scenforge::nn
{
namespace
{
std::string shape_of(const Matrix & m)
{
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const char * op, const std::string & detail)
{
  if (!ok) {
    throw ShapeError(std::string(op) + ": " + detail);
  }
}

void require_same_shape(const char * op, Var a, Var b)
{
  require(
    a.rows() == b.rows() && a.cols() == b.cols(), op,
    "shape mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
}

Tape & tape_of(Var a)
{
  return *a.tape();
}

Eigen::ArrayXXd sigmoid_array(const Eigen::ArrayXXd & x)
{
  return 1.0 / (1.0 + (-x).exp());
}
}  // namespace

ParameterPtr make_parameter(std::string name, Matrix value)
{
  return std::make_shared<Parameter>(std::move(name), std::move(value));
}

void zero_grad(const ParameterList & params)
{
  for (const auto & p : params) {
    p->grad.setZero(p->value.rows(), p->value.cols());
  }
}

const Matrix & Var::value() const
{
  return tape_->value(id_);
}

double Var::scalar() const
{
  const auto & v = value();
  if (v.size() != 1) {
    throw ShapeError("scalar(): node is " + shape_of(v));
  }
  return v(0, 0);
}

std::size_t Tape::push(Node node)
{
  if (!node.value.allFinite()) {
    throw NumericError(std::string("non-finite value produced by op '") + node.op + "'");
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Var Tape::constant(Matrix value)
{
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  return {this, push(std::move(n))};
}

Var Tape::input(Matrix value)
{
  Node n;
  n.value = std::move(value);
  n.op = "input";
  n.requires_grad = true;
  return {this, push(std::move(n))};
}

Var Tape::param(const ParameterPtr & p)
{
  for (const auto & [ptr, id] : param_nodes_) {
    if (ptr == p.get()) {
      return {this, id};
    }
  }
  Node n;
  n.value = p->value;
  n.op = "param";
  n.requires_grad = true;
  n.param = p.get();
  const auto id = push(std::move(n));
  param_nodes_.emplace_back(p.get(), id);
  return {this, id};
}

Var Tape::record(const char * op, Matrix value, std::initializer_list<Var> inputs, BackwardFn backward)
{
  return record(op, std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(const char * op, Matrix value, const std::vector<Var> & inputs, BackwardFn backward)
{
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const auto & in : inputs) {
    if (in.tape() != this) {
      throw ShapeError(std::string(op) + ": input belongs to a different tape");
    }
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) {
    n.backward = std::move(backward);
  }
  return {this, push(std::move(n))};
}

void Tape::accumulate(std::size_t id, const Matrix & delta)
{
  accumulate_expr(id, delta);
}

const Matrix & Tape::grad(Var v) const
{
  return nodes_[v.id()].grad;
}

void Tape::backward(Var loss)
{
  if (loss.tape() != this) {
    throw ShapeError("backward: loss belongs to a different tape");
  }
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + shape_of(loss.value()));
  }
  for (auto & n : nodes_) {
    n.grad.resize(0, 0);
  }
  if (!nodes_[loss.id()].requires_grad) {
    return;
  }
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node & n = nodes_[i];
    if (n.grad.size() == 0) {
      continue;
    }
    if (!n.grad.allFinite()) {
      throw NumericError(std::string("non-finite gradient at op '") + n.op + "'");
    }
    if (n.backward) {
      n.backward(*this, i);
    }
  }
  for (auto & n : nodes_) {
    if (n.param != nullptr && n.grad.size() != 0) {
      n.param->grad += n.grad;
    }
  }
}

Var matmul(Var a, Var b)
{
  require(a.cols() == b.rows(), "matmul", shape_of(a.value()) + " * " + shape_of(b.value()));
  return tape_of(a).record("matmul", a.value() * b.value(), {a, b}, [a, b](Tape & t, std::size_t self) {
    const Matrix & g = t.node_grad(self);
    if (t.requires_grad(a.id())) t.accumulate_expr(a.id(), g * b.value().transpose());
    if (t.requires_grad(b.id())) t.accumulate_expr(b.id(), a.value().transpose() * g);
  });
}

Var add(Var a, Var b)
{
  require_same_shape("add", a, b);
  return tape_of(a).record("add", a.value() + b.value(), {a, b}, [a, b](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), t.node_grad(self));
    t.accumulate_expr(b.id(), t.node_grad(self));
  });
}

Var sub(Var a, Var b)
{
  require_same_shape("sub", a, b);
  return tape_of(a).record("sub", a.value() - b.value(), {a, b}, [a, b](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), t.node_grad(self));
    t.accumulate_expr(b.id(), -t.node_grad(self));
  });
}

Var mul(Var a, Var b)
{
  require_same_shape("mul", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return tape_of(a).record("mul", std::move(out), {a, b}, [a, b](Tape & t, std::size_t self) {
    const Matrix & g = t.node_grad(self);
    t.accumulate_expr(a.id(), g.cwiseProduct(b.value()));
    t.accumulate_expr(b.id(), g.cwiseProduct(a.value()));
  });
}

Var add_row(Var x, Var row)
{
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row", shape_of(x.value()) + " + " + shape_of(row.value()));
  Matrix out = x.value().rowwise() + row.value().row(0);
  return tape_of(x).record("add_row", std::move(out), {x, row}, [x, row](Tape & t, std::size_t self) {
    const Matrix & g = t.node_grad(self);
    t.accumulate_expr(x.id(), g);
    if (t.requires_grad(row.id())) t.accumulate_expr(row.id(), g.colwise().sum());
  });
}

Var scale(Var a, double s)
{
  return tape_of(a).record("scale", a.value() * s, {a}, [a, s](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), t.node_grad(self) * s);
  });
}

Var add_scalar(Var a, double s)
{
  Matrix out = a.value().array() + s;
  return tape_of(a).record("add_scalar", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), t.node_grad(self));
  });
}

Var sigmoid(Var a)
{
  Matrix out = sigmoid_array(a.value().array()).matrix();
  return tape_of(a).record("sigmoid", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    const auto y = t.value(self).array();
    t.accumulate_expr(a.id(), (t.node_grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a)
{
  Matrix out = a.value().array().tanh().matrix();
  return tape_of(a).record("tanh", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    const auto y = t.value(self).array();
    t.accumulate_expr(a.id(), (t.node_grad(self).array() * (1.0 - y.square())).matrix());
  });
}

Var leaky_relu(Var a, double slope)
{
  Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return tape_of(a).record("leaky_relu", std::move(out), {a}, [a, slope](Tape & t, std::size_t self) {
    const auto & x = a.value();
    Matrix g = t.node_grad(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (!(x(i) > 0.0)) g(i) *= slope;
    }
    t.accumulate_expr(a.id(), g);
  });
}

Var square(Var a)
{
  Matrix out = a.value().array().square().matrix();
  return tape_of(a).record("square", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), (2.0 * t.node_grad(self).array() * a.value().array()).matrix());
  });
}

Var sqrt(Var a)
{
  Matrix out = a.value().array().sqrt().matrix();
  return tape_of(a).record("sqrt", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), (0.5 * t.node_grad(self).array() / t.value(self).array()).matrix());
  });
}

Var log(Var a)
{
  Matrix out = a.value().array().log().matrix();
  return tape_of(a).record("log", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), (t.node_grad(self).array() / a.value().array()).matrix());
  });
}

Var exp(Var a)
{
  Matrix out = a.value().array().exp().matrix();
  return tape_of(a).record("exp", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), (t.node_grad(self).array() * t.value(self).array()).matrix());
  });
}

Var sum(Var a)
{
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).record("sum", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), Matrix::Constant(a.rows(), a.cols(), t.node_grad(self)(0, 0)));
  });
}

Var mean(Var a)
{
  require(a.value().size() > 0, "mean", "empty input");
  const double n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return tape_of(a).record("mean", std::move(out), {a}, [a, n](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), Matrix::Constant(a.rows(), a.cols(), t.node_grad(self)(0, 0) / n));
  });
}

Var row_sum(Var a)
{
  Matrix out = a.value().rowwise().sum();
  return tape_of(a).record("row_sum", std::move(out), {a}, [a](Tape & t, std::size_t self) {
    t.accumulate_expr(a.id(), t.node_grad(self).replicate(1, a.cols()));
  });
}

Var concat_cols(const std::vector<Var> & parts)
{
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto & p : parts) {
    require(p.rows() == rows, "concat_cols", "row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto & p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape_of(parts.front()).record("concat_cols", std::move(out), parts, [parts](Tape & tp, std::size_t self) {
    const Matrix & g = tp.node_grad(self);
    Eigen::Index off = 0;
    for (const auto & p : parts) {
      if (tp.requires_grad(p.id())) tp.accumulate_expr(p.id(), g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var> & parts)
{
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto & p : parts) {
    require(p.cols() == cols, "concat_rows", "column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto & p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return tape_of(parts.front()).record("concat_rows", std::move(out), parts, [parts](Tape & tp, std::size_t self) {
    const Matrix & g = tp.node_grad(self);
    Eigen::Index off = 0;
    for (const auto & p : parts) {
      if (tp.requires_grad(p.id())) tp.accumulate_expr(p.id(), g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count)
{
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", "range out of bounds");
  Matrix out = a.value().middleCols(start, count);
  return tape_of(a).record("slice_cols", std::move(out), {a}, [a, start, count](Tape & t, std::size_t self) {
    Matrix g = Matrix::Zero(a.rows(), a.cols());
    g.middleCols(start, count) = t.node_grad(self);
    t.accumulate_expr(a.id(), g);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count)
{
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows", "range out of bounds");
  Matrix out = a.value().middleRows(start, count);
  return tape_of(a).record("slice_rows", std::move(out), {a}, [a, start, count](Tape & t, std::size_t self) {
    Matrix g = Matrix::Zero(a.rows(), a.cols());
    g.middleRows(start, count) = t.node_grad(self);
    t.accumulate_expr(a.id(), g);
  });
}

Var mse(Var prediction, const Matrix & target)
{
  require(
    prediction.rows() == target.rows() && prediction.cols() == target.cols(), "mse",
    shape_of(prediction.value()) + " vs target " + shape_of(target));
  require(target.size() > 0, "mse", "empty input");
  Matrix diff = prediction.value() - target;
  const double n = static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return tape_of(prediction).record(
    "mse", std::move(out), {prediction}, [prediction, diff = std::move(diff), n](Tape & t, std::size_t self) {
      t.accumulate_expr(prediction.id(), diff * (2.0 * t.node_grad(self)(0, 0) / n));
    });
}

Var bce_with_logits(Var logits, double label)
{
  require(logits.value().size() > 0, "bce_with_logits", "empty input");
  const auto & z = logits.value().array();
  // log(1 + exp(-|z|)) + max(z, 0) - z * y, stable for large |z|.
  const Eigen::ArrayXXd loss = (1.0 + (-z.abs()).exp()).log() + z.max(0.0) - z * label;
  const double n = static_cast<double>(z.size());
  Matrix out(1, 1);
  out(0, 0) = loss.sum() / n;
  return tape_of(logits).record("bce_with_logits", std::move(out), {logits}, [logits, label, n](Tape & t, std::size_t self) {
    const Eigen::ArrayXXd p = sigmoid_array(logits.value().array());
    t.accumulate_expr(logits.id(), ((p - label) * (t.node_grad(self)(0, 0) / n)).matrix());
  });
}

Var lstm_cell(Var gates, Var c_prev)
{
  const Eigen::Index h = c_prev.cols();
  require(
    gates.rows() == c_prev.rows() && gates.cols() == 4 * h, "lstm_cell",
    "gates " + shape_of(gates.value()) + " vs cell " + shape_of(c_prev.value()));
  const auto & g = gates.value();
  const Eigen::ArrayXXd i = sigmoid_array(g.middleCols(0, h).array());
  const Eigen::ArrayXXd f = sigmoid_array(g.middleCols(h, h).array());
  const Eigen::ArrayXXd cand = g.middleCols(2 * h, h).array().tanh();
  const Eigen::ArrayXXd o = sigmoid_array(g.middleCols(3 * h, h).array());
  const Eigen::ArrayXXd c = f * c_prev.value().array() + i * cand;
  Matrix out(g.rows(), 2 * h);
  out.leftCols(h) = (o * c.tanh()).matrix();
  out.rightCols(h) = c.matrix();
  return tape_of(gates).record("lstm_cell", std::move(out), {gates, c_prev}, [gates, c_prev, h](Tape & t, std::size_t self) {
    const auto & gv = gates.value();
    const Eigen::ArrayXXd ig = sigmoid_array(gv.middleCols(0, h).array());
    const Eigen::ArrayXXd fg = sigmoid_array(gv.middleCols(h, h).array());
    const Eigen::ArrayXXd cg = gv.middleCols(2 * h, h).array().tanh();
    const Eigen::ArrayXXd og = sigmoid_array(gv.middleCols(3 * h, h).array());
    const Eigen::ArrayXXd c_new = t.value(self).rightCols(h).array();
    const Eigen::ArrayXXd tc = c_new.tanh();
    const Matrix & grad = t.node_grad(self);
    const Eigen::ArrayXXd dh = grad.leftCols(h).array();
    const Eigen::ArrayXXd dc = grad.rightCols(h).array() + dh * og * (1.0 - tc.square());
    if (t.requires_grad(gates.id())) {
      Matrix dg(gv.rows(), 4 * h);
      dg.middleCols(0, h) = (dc * cg * ig * (1.0 - ig)).matrix();
      dg.middleCols(h, h) = (dc * c_prev.value().array() * fg * (1.0 - fg)).matrix();
      dg.middleCols(2 * h, h) = (dc * ig * (1.0 - cg.square())).matrix();
      dg.middleCols(3 * h, h) = (dh * tc * og * (1.0 - og)).matrix();
      t.accumulate_expr(gates.id(), dg);
    }
    if (t.requires_grad(c_prev.id())) {
      t.accumulate_expr(c_prev.id(), (dc * fg).matrix());
    }
  });
}

}  // namespace scenforge::nn
