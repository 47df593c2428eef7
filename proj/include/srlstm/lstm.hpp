#pragma once

#include <random>

#include "srlstm/params.hpp"
#include "srlstm/tape.hpp"

namespace srlstm {

struct ModelDims {
  std::size_t embed = 32;
  std::size_t hidden = 64;
  std::size_t relative = 32;
};

/// Parameter names for the shared encoder/decoder. Gate order is u, f, o, c.
namespace lstm_names {
inline constexpr const char* embed_weight = "embed.W";
inline constexpr const char* embed_bias = "embed.b";
inline constexpr const char* decoder = "decoder.W_p";
inline constexpr const char* gates[4] = {"u", "f", "o", "c"};
std::string input_weight(const char* gate);
std::string recurrent_weight(const char* gate);
std::string bias(const char* gate);
}  // namespace lstm_names

/// Registers embedding, LSTM and decoder parameters. Weights are uniform in
/// ±1/sqrt(fan_in), as is the embedding bias; the forget-gate bias starts at 1
/// and the other gate biases at 0.
void init_lstm_params(ParamStore& store, const ModelDims& dims, std::mt19937_64& rng);

/// Per-pedestrian states, one row per pedestrian.
struct LstmState {
  Tensor2 h;
  Tensor2 c;
};

/// Tape handles for the shared parameters of one forward pass.
struct LstmVars {
  Var embed_weight, embed_bias;
  Var input_weight[4], recurrent_weight[4], bias[4];
  Var decoder;

  static LstmVars bind(Tape& tape, ParamStore& store);
};

struct LstmStepVars {
  Var h;
  Var c;
  Var output_gate;
};

Var embed_position(Tape& tape, const LstmVars& p, Var xy, Activation act);
LstmStepVars lstm_step(Tape& tape, const LstmVars& p, Var e, Var h_prev, Var c_prev);
/// [x̂, ŷ] = W_p · h, no bias.
Var project_output(Tape& tape, const LstmVars& p, Var h);

// Value-level entry points; rows are pedestrians.
Tensor2 embed_position(const Tensor2& xy, ParamStore& store, Activation act = Activation::relu);

struct LstmStepResult {
  LstmState state;
  Tensor2 output_gate;
};
LstmStepResult lstm_step(const Tensor2& e, const LstmState& prev, ParamStore& store);
Tensor2 project_output(const Tensor2& h, ParamStore& store);

}  // namespace srlstm
