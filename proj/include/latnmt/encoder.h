#pragma once

#include <vector>

#include "latnmt/graph.h"

namespace latnmt {

struct LstmState {
  Expr h, c;
};

// Parameter ids for one LSTM layer (one direction).
struct LstmLayerIds {
  int Wi, Wf, Wo, Wu;  // input weights
  int Ui, Uf, Uo, Uu;  // recurrent weights
  int bi, bf, bo, bu;  // biases
};

struct LatticePredecessor {
  LstmState state;
  double weight = 1.0;  // pre-normalized over the predecessor group
};

// Per-mechanism score-integration switch.
enum class PeakinessMode { kFixed0, kFixed1, kLearned };
struct MechanismConfig {
  bool enabled = true;
  PeakinessMode mode = PeakinessMode::kLearned;
};

// Plain LSTM step. prev == nullptr is the sequence start (no recurrent term).
LstmState lstm_step(Graph& g, Expr x, const LstmState* prev, const LstmLayerIds& p);

// LatticeLSTM step over one or more predecessors.
//   wcs on:  h~ = sum_k (w_k^{S_h}/Z_h) (.) h_k, off: plain child-sum
//   bfg on:  f_k = sigma(W_f x + U_f h_k + [S_f ln w_k - Z_f] + b_f)
//   cell     c = i (.) u + sum_k f_k (.) c_k
// S_h / S_f are per-hidden-unit exponent expressions (parameter or constant);
// they are only read when the corresponding mechanism is enabled.
LstmState lattice_lstm_step(Graph& g, Expr x, const std::vector<LatticePredecessor>& preds,
                            const LstmLayerIds& p, const MechanismConfig& wcs,
                            const MechanismConfig& bfg, Expr S_h, Expr S_f);

// Encoder output: one state per lattice node plus what the decoder needs.
struct EncodedSource {
  std::vector<Expr> states;        // concat(fwd_top, bwd_top) per node
  std::vector<Expr> attn_keys;     // W_att_h h_i + b_att per node
  std::vector<double> ln_wm;       // floored log marginal per node
  std::vector<LstmState> dec_init; // initial decoder state per decoder layer
  int num_nodes() const { return static_cast<int>(states.size()); }
};

}  // namespace latnmt
