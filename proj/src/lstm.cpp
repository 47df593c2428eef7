#include "srlstm/lstm.hpp"

#include <cmath>

namespace srlstm {

namespace lstm_names {
std::string input_weight(const char* gate) { return std::string("lstm.W_") + gate; }
std::string recurrent_weight(const char* gate) { return std::string("lstm.U_") + gate; }
std::string bias(const char* gate) { return std::string("lstm.b_") + gate; }
}  // namespace lstm_names

void init_lstm_params(ParamStore& store, const ModelDims& dims, std::mt19937_64& rng) {
  store.add(lstm_names::embed_weight, uniform_tensor(dims.embed, 2, 1.0 / std::sqrt(2.0), rng));
  store.add(lstm_names::embed_bias, uniform_tensor(1, dims.embed, 1.0 / std::sqrt(2.0), rng));
  for (const char* g : lstm_names::gates) {
    store.add(lstm_names::input_weight(g),
              uniform_tensor(dims.hidden, dims.embed, 1.0 / std::sqrt(double(dims.embed)), rng));
    store.add(lstm_names::recurrent_weight(g),
              uniform_tensor(dims.hidden, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng));
    const double b = std::string(g) == "f" ? 1.0 : 0.0;
    store.add(lstm_names::bias(g), Tensor2(1, dims.hidden, b));
  }
  store.add(lstm_names::decoder,
            uniform_tensor(2, dims.hidden, 1.0 / std::sqrt(double(dims.hidden)), rng));
}

LstmVars LstmVars::bind(Tape& tape, ParamStore& store) {
  LstmVars v;
  v.embed_weight = tape.parameter(store, lstm_names::embed_weight);
  v.embed_bias = tape.parameter(store, lstm_names::embed_bias);
  for (int k = 0; k < 4; ++k) {
    const char* g = lstm_names::gates[k];
    v.input_weight[k] = tape.parameter(store, lstm_names::input_weight(g));
    v.recurrent_weight[k] = tape.parameter(store, lstm_names::recurrent_weight(g));
    v.bias[k] = tape.parameter(store, lstm_names::bias(g));
  }
  v.decoder = tape.parameter(store, lstm_names::decoder);
  return v;
}

Var embed_position(Tape& tape, const LstmVars& p, Var xy, Activation act) {
  return tape.activate(tape.linear(xy, p.embed_weight, p.embed_bias), act);
}

LstmStepVars lstm_step(Tape& tape, const LstmVars& p, Var e, Var h_prev, Var c_prev) {
  auto pre = [&](int k) {
    return tape.add(tape.linear(e, p.input_weight[k], p.bias[k]),
                    tape.linear(h_prev, p.recurrent_weight[k]));
  };
  Var update = tape.sigmoid(pre(0));
  Var forget = tape.sigmoid(pre(1));
  Var output = tape.sigmoid(pre(2));
  Var cell = tape.tanh(pre(3));
  Var c = tape.add(tape.hadamard(forget, c_prev), tape.hadamard(update, cell));
  Var h = tape.hadamard(output, tape.tanh(c));
  return {h, c, output};
}

Var project_output(Tape& tape, const LstmVars& p, Var h) { return tape.linear(h, p.decoder); }

Tensor2 embed_position(const Tensor2& xy, ParamStore& store, Activation act) {
  Tape tape(false);
  LstmVars p = LstmVars::bind(tape, store);
  return tape.value(embed_position(tape, p, tape.constant(xy), act));
}

LstmStepResult lstm_step(const Tensor2& e, const LstmState& prev, ParamStore& store) {
  require_finite(prev.h, "lstm_step previous h");
  require_finite(prev.c, "lstm_step previous c");
  Tape tape(false);
  LstmVars p = LstmVars::bind(tape, store);
  LstmStepVars s = lstm_step(tape, p, tape.constant(e), tape.constant(prev.h), tape.constant(prev.c));
  return {{tape.value(s.h), tape.value(s.c)}, tape.value(s.output_gate)};
}

Tensor2 project_output(const Tensor2& h, ParamStore& store) {
  Tape tape(false);
  LstmVars p = LstmVars::bind(tape, store);
  return tape.value(project_output(tape, p, tape.constant(h)));
}

}  // namespace srlstm
