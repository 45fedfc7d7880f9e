#pragma once

#include <string>
#include <vector>

#include "latnmt/encoder.h"
#include "latnmt/graph.h"
#include "latnmt/lattice.h"
#include "latnmt/lattice_scores.h"
#include "latnmt/param_store.h"
#include "latnmt/rng.h"

namespace latnmt {

struct ModelConfig {
  int src_vocab = 0;
  int trg_vocab = 0;
  int embed_dim = 512;
  int enc_hidden = 256;  // per direction
  int dec_hidden = 512;  // 2 * enc_hidden
  int attn_hidden = 512;
  int layers = 2;
  MechanismConfig wcs, bfg, batt;

  void validate() const;
  // The checkpoint config digest; parse() inverts it.
  std::string serialize() const;
  static ModelConfig parse(const std::string& s);
};

// "off" disables a mechanism; "0"/"1" fix its peakiness; "learn" trains it.
MechanismConfig parse_mechanism(const std::string& s);
std::string mechanism_to_string(const MechanismConfig& m);

struct DecoderState {
  std::vector<LstmState> layers;
  Expr top_h() const { return layers.back().h; }
};

struct DecodeStep {
  DecoderState state;
  Expr logits;  // pre-softmax output scores
  Expr alpha;   // attention weights over source nodes
  Expr context;
};

// Attentional encoder-decoder over sequential or lattice input. Parameters
// live in an external ParamStore so checkpoints and optimizers see them all.
class TranslationModel {
 public:
  // Creates and initializes all parameters in `store`.
  TranslationModel(const ModelConfig& cfg, ParamStore& store, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& store() const { return *store_; }

  // Bidirectional stacked encoder; bos/eos are prepended/appended here.
  EncodedSource encode_sequence(Graph& g, const std::vector<int>& tokens) const;
  // LatticeLSTM encoder: forward direction weights predecessors by their
  // renormalized marginals, backward direction by forward scores.
  EncodedSource encode_lattice(Graph& g, const Lattice& lat, const NodeScores& scores) const;

  DecoderState initial_state(Graph& g, const EncodedSource& enc) const;
  // Attention over all lattice nodes from the previous decoder state; with
  // batt enabled the logits carry the S_a * ln wm bias.
  Expr attend(Graph& g, const EncodedSource& enc, Expr s_prev_top, Expr* alpha_out = nullptr) const;
  DecodeStep decode_step(Graph& g, const EncodedSource& enc, const DecoderState& prev,
                         int y_prev) const;
  // Teacher-forced negative log-likelihood; target must end with eos.
  Expr sequence_loss(Graph& g, const EncodedSource& enc, const std::vector<int>& target) const;

 private:
  Expr s_h_expr(Graph& g, int layer) const;
  Expr s_f_expr(Graph& g, int layer) const;
  Expr s_a_expr(Graph& g) const;
  Expr embed(Graph& g, int table, int token) const;
  void encode_direction(Graph& g, const Lattice& lat, bool forward,
                        const std::vector<std::vector<double>>& weights,
                        std::vector<std::vector<LstmState>>* states) const;

  ModelConfig cfg_;
  ParamStore* store_;

  int e_fwd_, e_bwd_, e_trg_;
  std::vector<LstmLayerIds> enc_fwd_, enc_bwd_, dec_;
  int attn_Ws_, attn_Wh_, attn_b_, attn_v_;
  int W_hs_, b_hs_, W_so_, b_so_;
  int S_a_ = -1;
  std::vector<int> S_h_, S_f_;
};

}  // namespace latnmt
