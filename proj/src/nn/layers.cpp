#include "scenforge/nn/layers.hpp"

#include <cmath>

#include "scenforge/errors.hpp"

namespace scenforge::nn
{
namespace
{
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng & rng)
{
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
  return m;
}
}  // namespace

Var activate(Var x, Activation act)
{
  switch (act) {
    case Activation::Linear:
      return x;
    case Activation::Tanh:
      return tanh(x);
    case Activation::LeakyRelu:
      return leaky_relu(x, kLeakySlope);
    case Activation::Sigmoid:
      return sigmoid(x);
  }
  return x;
}

Linear Linear::create(const std::string & name, int in, int out, Rng & rng)
{
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = make_parameter(name + ".w", uniform_matrix(in, out, bound, rng));
  l.bias = make_parameter(name + ".b", uniform_matrix(1, out, bound, rng));
  return l;
}

Var Linear::forward(Tape & tape, Var x) const
{
  return add_row(matmul(x, tape.param(weight)), tape.param(bias));
}

void Linear::append_parameters(ParameterList & out) const
{
  out.push_back(weight);
  out.push_back(bias);
}

MlpParams MlpParams::create(
  const std::string & prefix, const std::vector<int> & widths, Activation hidden, Activation output, Rng & rng)
{
  if (widths.size() < 2) {
    throw ShapeError("mlp needs at least an input and an output width");
  }
  MlpParams m;
  m.hidden = hidden;
  m.output = output;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.layers.push_back(Linear::create(prefix + ".l" + std::to_string(i), widths[i], widths[i + 1], rng));
  }
  return m;
}

Var MlpParams::forward(Tape & tape, Var x) const
{
  if (x.cols() != in_width()) {
    throw ShapeError("mlp input width " + std::to_string(x.cols()) + " != " + std::to_string(in_width()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i].forward(tape, x);
    x = activate(x, i + 1 < layers.size() ? hidden : output);
  }
  return x;
}

ParameterList MlpParams::parameters() const
{
  ParameterList out;
  for (const auto & l : layers) l.append_parameters(out);
  return out;
}

ResNetParams ResNetParams::create(
  const std::string & prefix, int in, int width, int num_blocks, int out, Activation hidden, Activation output,
  Rng & rng)
{
  ResNetParams r;
  r.hidden = hidden;
  r.output = output;
  r.input = Linear::create(prefix + ".in", in, width, rng);
  for (int b = 0; b < num_blocks; ++b) {
    const std::string name = prefix + ".block" + std::to_string(b);
    r.blocks.push_back({Linear::create(name + ".a", width, width, rng), Linear::create(name + ".b", width, width, rng)});
  }
  r.head = Linear::create(prefix + ".out", width, out, rng);
  return r;
}

Var ResNetParams::forward(Tape & tape, Var x) const
{
  if (x.cols() != in_width()) {
    throw ShapeError("resnet input width " + std::to_string(x.cols()) + " != " + std::to_string(in_width()));
  }
  Var h = activate(input.forward(tape, x), hidden);
  for (const auto & block : blocks) {
    const Var branch = block.second.forward(tape, activate(block.first.forward(tape, h), hidden));
    h = add(h, branch);
  }
  return activate(head.forward(tape, h), output);
}

ParameterList ResNetParams::parameters() const
{
  ParameterList out;
  input.append_parameters(out);
  for (const auto & b : blocks) {
    b.first.append_parameters(out);
    b.second.append_parameters(out);
  }
  head.append_parameters(out);
  return out;
}

Var forward_mlp(const FeedForward & net, Var x, Tape & tape)
{
  return std::visit([&](const auto & n) { return n.forward(tape, x); }, net);
}

ParameterList parameters_of(const FeedForward & net)
{
  return std::visit([](const auto & n) { return n.parameters(); }, net);
}

int in_width(const FeedForward & net)
{
  return std::visit([](const auto & n) { return n.in_width(); }, net);
}

int out_width(const FeedForward & net)
{
  return std::visit([](const auto & n) { return n.out_width(); }, net);
}

LstmParams LstmParams::create(const std::string & prefix, int input_size, int hidden_size, Rng & rng)
{
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_size + hidden_size));
  p.weight = make_parameter(prefix + ".w", uniform_matrix(input_size + hidden_size, 4 * hidden_size, bound, rng));
  Matrix b = uniform_matrix(1, 4 * hidden_size, bound, rng);
  b.middleCols(hidden_size, hidden_size).setOnes();
  p.bias = make_parameter(prefix + ".b", std::move(b));
  return p;
}

void LstmParams::append_parameters(ParameterList & out) const
{
  out.push_back(weight);
  out.push_back(bias);
}

LstmState zero_state(Tape & tape, Eigen::Index batch, int hidden_size)
{
  return {tape.constant(Matrix::Zero(batch, hidden_size)), tape.constant(Matrix::Zero(batch, hidden_size))};
}

LstmState lstm_step(Tape & tape, const LstmParams & params, Var x, LstmState state)
{
  if (x.cols() != params.input_size || x.rows() != state.h.rows()) {
    throw ShapeError(
      "lstm step input " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", expected " +
      std::to_string(state.h.rows()) + "x" + std::to_string(params.input_size));
  }
  const auto h = static_cast<Eigen::Index>(params.hidden_size);
  const Var gates = add_row(matmul(concat_cols({x, state.h}), tape.param(params.weight)), tape.param(params.bias));
  const Var hc = lstm_cell(gates, state.c);
  return {slice_cols(hc, 0, h), slice_cols(hc, h, h)};
}

LstmOutput forward_lstm(Tape & tape, const LstmParams & params, const std::vector<Var> & steps, LstmState init)
{
  LstmOutput out;
  if (steps.empty()) {
    out.final = init;
    return out;
  }
  const Eigen::Index batch = steps.front().rows();
  LstmState state = init.h.valid() ? init : zero_state(tape, batch, params.hidden_size);
  if (state.h.rows() != batch || state.h.cols() != params.hidden_size || state.c.rows() != batch ||
      state.c.cols() != params.hidden_size) {
    throw ShapeError("lstm initial state does not match batch/hidden size");
  }
  out.outputs.reserve(steps.size());
  for (const auto & x : steps) {
    state = lstm_step(tape, params, x, state);
    out.outputs.push_back(state.h);
  }
  out.final = state;
  return out;
}

std::vector<Var> rows_as_steps(Var seq)
{
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(seq.rows()));
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    steps.push_back(slice_rows(seq, t, 1));
  }
  return steps;
}

Var forward_lstm(Tape & tape, const LstmParams & params, Var seq)
{
  return concat_rows(forward_lstm(tape, params, rows_as_steps(seq)).outputs);
}

std::vector<Var> forward_bilstm(
  Tape & tape, const LstmParams & forward, const LstmParams & backward, const std::vector<Var> & steps)
{
  const auto fwd = forward_lstm(tape, forward, steps);
  const std::vector<Var> reversed(steps.rbegin(), steps.rend());
  const auto bwd = forward_lstm(tape, backward, reversed);
  std::vector<Var> out;
  out.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    out.push_back(concat_cols({fwd.outputs[t], bwd.outputs[steps.size() - 1 - t]}));
  }
  return out;
}

Var forward_bilstm(Tape & tape, const LstmParams & forward, const LstmParams & backward, Var seq)
{
  return concat_rows(forward_bilstm(tape, forward, backward, rows_as_steps(seq)));
}

}  // namespace scenforge::nn
