#pragma once

#include <string>
#include <variant>
#include <vector>

#include "scenforge/nn/tape.hpp"
#include "scenforge/rng.hpp"

namespace scenforge::nn
{

enum class Activation { Linear, Tanh, LeakyRelu, Sigmoid };

constexpr double kLeakySlope = 0.2;

Var activate(Var x, Activation act);

/// y = x W + b, W is (in x out). Weights and bias start uniform in +-1/sqrt(in).
struct Linear
{
  ParameterPtr weight;
  ParameterPtr bias;

  static Linear create(const std::string & name, int in, int out, Rng & rng);
  Var forward(Tape & tape, Var x) const;
  int in_width() const { return static_cast<int>(weight->value.rows()); }
  int out_width() const { return static_cast<int>(weight->value.cols()); }
  void append_parameters(ParameterList & out) const;
};

/// Plain feed-forward stack: hidden activation after every layer but the last.
struct MlpParams
{
  std::vector<Linear> layers;
  Activation hidden{Activation::Tanh};
  Activation output{Activation::Linear};

  /// widths = {in, h1, ..., out}; needs at least two entries.
  static MlpParams create(
    const std::string & prefix, const std::vector<int> & widths, Activation hidden, Activation output, Rng & rng);
  Var forward(Tape & tape, Var x) const;
  int in_width() const { return layers.front().in_width(); }
  int out_width() const { return layers.back().out_width(); }
  ParameterList parameters() const;
};

/// Two-layer residual block: x + W2 act(W1 x + b1) + b2.
struct ResidualBlock
{
  Linear first;
  Linear second;
};

/// Input projection, residual blocks of fixed width, output projection.
struct ResNetParams
{
  Linear input;
  std::vector<ResidualBlock> blocks;
  Linear head;
  Activation hidden{Activation::Tanh};
  Activation output{Activation::Linear};

  static ResNetParams create(
    const std::string & prefix, int in, int width, int num_blocks, int out, Activation hidden, Activation output,
    Rng & rng);
  Var forward(Tape & tape, Var x) const;
  int in_width() const { return input.in_width(); }
  int out_width() const { return head.out_width(); }
  ParameterList parameters() const;
};

using FeedForward = std::variant<MlpParams, ResNetParams>;

Var forward_mlp(const FeedForward & net, Var x, Tape & tape);
ParameterList parameters_of(const FeedForward & net);
int in_width(const FeedForward & net);
int out_width(const FeedForward & net);

/// One LSTM layer. weight is ((input + hidden) x 4 hidden) with gate blocks in
/// the order input, forget, candidate, output; the forget bias starts at 1.
struct LstmParams
{
  int input_size{0};
  int hidden_size{0};
  ParameterPtr weight;
  ParameterPtr bias;

  static LstmParams create(const std::string & prefix, int input_size, int hidden_size, Rng & rng);
  void append_parameters(ParameterList & out) const;
};

struct LstmState
{
  Var h;
  Var c;
};

struct LstmOutput
{
  std::vector<Var> outputs;  // one (batch x hidden) node per step
  LstmState final;
};

LstmState zero_state(Tape & tape, Eigen::Index batch, int hidden_size);

/// One recurrence step; x is (batch x input_size).
LstmState lstm_step(Tape & tape, const LstmParams & params, Var x, LstmState state);

/// Runs the recurrence over `steps` (each batch x input_size). An invalid
/// `init` means zero h0/c0.
LstmOutput forward_lstm(Tape & tape, const LstmParams & params, const std::vector<Var> & steps, LstmState init = {});

/// Sequence form: seq is (time x features), returns (time x hidden).
Var forward_lstm(Tape & tape, const LstmParams & params, Var seq);

/// Forward pass and time-reversed pass, concatenated per step -> batch x 2H.
std::vector<Var> forward_bilstm(
  Tape & tape, const LstmParams & forward, const LstmParams & backward, const std::vector<Var> & steps);

/// Sequence form: (time x features) -> (time x 2 hidden).
Var forward_bilstm(Tape & tape, const LstmParams & forward, const LstmParams & backward, Var seq);

/// Splits a (time x features) node into per-step (1 x features) rows.
std::vector<Var> rows_as_steps(Var seq);

}  // namespace scenforge::nn
