#include "latnmt/model.h"

#include <cmath>
#include <sstream>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

void ModelConfig::validate() const {
  if (src_vocab <= 0 || trg_vocab <= 0) LATNMT_THROW("model needs vocabulary sizes");
  if (dec_hidden != 2 * enc_hidden)
    LATNMT_THROW("decoder width " << dec_hidden << " must be twice the per-direction encoder width "
                                  << enc_hidden);
  if (layers < 1) LATNMT_THROW("at least one layer required");
}

MechanismConfig parse_mechanism(const string& s) {
  MechanismConfig m;
  if (s == "off") {
    m.enabled = false;
  } else if (s == "0") {
    m.mode = PeakinessMode::kFixed0;
  } else if (s == "1") {
    m.mode = PeakinessMode::kFixed1;
  } else if (s == "learn") {
    m.mode = PeakinessMode::kLearned;
  } else {
    LATNMT_THROW("bad mechanism setting '" << s << "' (want off|0|1|learn)");
  }
  return m;
}

string mechanism_to_string(const MechanismConfig& m) {
  if (!m.enabled) return "off";
  switch (m.mode) {
    case PeakinessMode::kFixed0: return "0";
    case PeakinessMode::kFixed1: return "1";
    case PeakinessMode::kLearned: return "learn";
  }
  return "learn";
}

string ModelConfig::serialize() const {
  ostringstream os;
  os << "src_vocab=" << src_vocab << ";trg_vocab=" << trg_vocab << ";embed_dim=" << embed_dim
     << ";enc_hidden=" << enc_hidden << ";dec_hidden=" << dec_hidden
     << ";attn_hidden=" << attn_hidden << ";layers=" << layers
     << ";wcs=" << mechanism_to_string(wcs) << ";bfg=" << mechanism_to_string(bfg)
     << ";batt=" << mechanism_to_string(batt);
  return os.str();
}

ModelConfig ModelConfig::parse(const string& s) {
  ModelConfig cfg;
  istringstream is(s);
  string kv;
  while (getline(is, kv, ';')) {
    auto eq = kv.find('=');
    if (eq == string::npos) LATNMT_THROW("bad config entry '" << kv << "'");
    string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "src_vocab") cfg.src_vocab = stoi(val);
    else if (key == "trg_vocab") cfg.trg_vocab = stoi(val);
    else if (key == "embed_dim") cfg.embed_dim = stoi(val);
    else if (key == "enc_hidden") cfg.enc_hidden = stoi(val);
    else if (key == "dec_hidden") cfg.dec_hidden = stoi(val);
    else if (key == "attn_hidden") cfg.attn_hidden = stoi(val);
    else if (key == "layers") cfg.layers = stoi(val);
    else if (key == "wcs") cfg.wcs = parse_mechanism(val);
    else if (key == "bfg") cfg.bfg = parse_mechanism(val);
    else if (key == "batt") cfg.batt = parse_mechanism(val);
    else LATNMT_THROW("unknown config key '" << key << "'");
  }
  cfg.validate();
  return cfg;
}

namespace {

LstmLayerIds make_lstm_layer(ParamStore& ps, const string& prefix, int input_dim, int hidden,
                             Rng& rng) {
  LstmLayerIds ids;
  ids.Wi = ps.add_glorot(prefix + ".Wi", hidden, input_dim, rng);
  ids.Wf = ps.add_glorot(prefix + ".Wf", hidden, input_dim, rng);
  ids.Wo = ps.add_glorot(prefix + ".Wo", hidden, input_dim, rng);
  ids.Wu = ps.add_glorot(prefix + ".Wu", hidden, input_dim, rng);
  ids.Ui = ps.add_glorot(prefix + ".Ui", hidden, hidden, rng);
  ids.Uf = ps.add_glorot(prefix + ".Uf", hidden, hidden, rng);
  ids.Uo = ps.add_glorot(prefix + ".Uo", hidden, hidden, rng);
  ids.Uu = ps.add_glorot(prefix + ".Uu", hidden, hidden, rng);
  ids.bi = ps.add_zeros(prefix + ".bi", hidden, 1);
  // forget gate biases start at 1
  ids.bf = ps.add_zeros(prefix + ".bf", hidden, 1, 1.0);
  ids.bo = ps.add_zeros(prefix + ".bo", hidden, 1);
  ids.bu = ps.add_zeros(prefix + ".bu", hidden, 1);
  return ids;
}

}  // namespace

TranslationModel::TranslationModel(const ModelConfig& cfg, ParamStore& store, Rng& rng)
    : cfg_(cfg), store_(&store) {
  cfg_.validate();
  e_fwd_ = store.add_glorot("E_fwd", cfg.src_vocab, cfg.embed_dim, rng);
  e_bwd_ = store.add_glorot("E_bwd", cfg.src_vocab, cfg.embed_dim, rng);
  e_trg_ = store.add_glorot("E_trg", cfg.trg_vocab, cfg.embed_dim, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    int in = l == 0 ? cfg.embed_dim : cfg.enc_hidden;
    enc_fwd_.push_back(make_lstm_layer(store, "enc_fwd.l" + to_string(l), in, cfg.enc_hidden, rng));
    enc_bwd_.push_back(make_lstm_layer(store, "enc_bwd.l" + to_string(l), in, cfg.enc_hidden, rng));
  }
  for (int l = 0; l < cfg.layers; ++l) {
    int in = l == 0 ? cfg.embed_dim : cfg.dec_hidden;
    dec_.push_back(make_lstm_layer(store, "dec.l" + to_string(l), in, cfg.dec_hidden, rng));
  }
  int src_state = 2 * cfg.enc_hidden;
  attn_Ws_ = store.add_glorot("attn.Ws", cfg.attn_hidden, cfg.dec_hidden, rng);
  attn_Wh_ = store.add_glorot("attn.Wh", cfg.attn_hidden, src_state, rng);
  attn_b_ = store.add_zeros("attn.b", cfg.attn_hidden, 1);
  attn_v_ = store.add_glorot("attn.v", cfg.attn_hidden, 1, rng);
  W_hs_ = store.add_glorot("W_hs", cfg.dec_hidden, cfg.dec_hidden + src_state, rng);
  b_hs_ = store.add_zeros("b_hs", cfg.dec_hidden, 1);
  W_so_ = store.add_glorot("W_so", cfg.trg_vocab, cfg.dec_hidden, rng);
  b_so_ = store.add_zeros("b_so", cfg.trg_vocab, 1);
  // peakiness coefficients start at the neutral value 1
  if (cfg.batt.enabled && cfg.batt.mode == PeakinessMode::kLearned)
    S_a_ = store.add_zeros("S_a", 1, 1, 1.0);
  for (int l = 0; l < cfg.layers; ++l) {
    if (cfg.wcs.enabled && cfg.wcs.mode == PeakinessMode::kLearned)
      S_h_.push_back(store.add_zeros("S_h.l" + to_string(l), cfg.enc_hidden, 1, 1.0));
    if (cfg.bfg.enabled && cfg.bfg.mode == PeakinessMode::kLearned)
      S_f_.push_back(store.add_zeros("S_f.l" + to_string(l), cfg.enc_hidden, 1, 1.0));
  }
}

Expr TranslationModel::s_h_expr(Graph& g, int layer) const {
  if (cfg_.wcs.mode == PeakinessMode::kLearned) return g.param(S_h_[layer]);
  double v = cfg_.wcs.mode == PeakinessMode::kFixed0 ? 0.0 : 1.0;
  return g.input(Tensor(cfg_.enc_hidden, 1, v));
}

Expr TranslationModel::s_f_expr(Graph& g, int layer) const {
  if (cfg_.bfg.mode == PeakinessMode::kLearned) return g.param(S_f_[layer]);
  double v = cfg_.bfg.mode == PeakinessMode::kFixed0 ? 0.0 : 1.0;
  return g.input(Tensor(cfg_.enc_hidden, 1, v));
}

Expr TranslationModel::s_a_expr(Graph& g) const {
  if (cfg_.batt.mode == PeakinessMode::kLearned) return g.param(S_a_);
  return g.input_scalar(cfg_.batt.mode == PeakinessMode::kFixed0 ? 0.0 : 1.0);
}

Expr TranslationModel::embed(Graph& g, int table, int token) const {
  return g.lookup(table, token);
}

EncodedSource TranslationModel::encode_sequence(Graph& g, const vector<int>& tokens) const {
  vector<int> seq;
  seq.reserve(tokens.size() + 2);
  seq.push_back(Vocabulary::kBos);
  seq.insert(seq.end(), tokens.begin(), tokens.end());
  seq.push_back(Vocabulary::kEos);
  int n = static_cast<int>(seq.size());

  // states[dir][layer][pos]
  vector<vector<vector<LstmState>>> states(2, vector<vector<LstmState>>(cfg_.layers));
  for (int dir = 0; dir < 2; ++dir) {
    bool fwd = dir == 0;
    const auto& layers = fwd ? enc_fwd_ : enc_bwd_;
    for (int l = 0; l < cfg_.layers; ++l) {
      auto& out = states[dir][l];
      out.resize(n);
      for (int step = 0; step < n; ++step) {
        int pos = fwd ? step : n - 1 - step;
        Expr x = l == 0 ? embed(g, fwd ? e_fwd_ : e_bwd_, seq[pos])
                        : states[dir][l - 1][pos].h;
        const LstmState* prev = step == 0 ? nullptr : &out[fwd ? pos - 1 : pos + 1];
        out[pos] = lstm_step(g, x, prev, layers[l]);
      }
    }
  }

  EncodedSource enc;
  enc.states.resize(n);
  enc.attn_keys.resize(n);
  enc.ln_wm.assign(n, 0.0);  // all marginals are 1 on a sequence
  int top = cfg_.layers - 1;
  for (int i = 0; i < n; ++i) {
    enc.states[i] = g.concat({states[0][top][i].h, states[1][top][i].h});
    enc.attn_keys[i] = g.affine({g.param(attn_b_), g.param(attn_Wh_), enc.states[i]});
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    LstmState init;
    init.h = g.concat({states[0][l][n - 1].h, states[1][l][0].h});
    init.c = g.input(Tensor(cfg_.dec_hidden, 1));
    enc.dec_init.push_back(init);
  }
  return enc;
}

void TranslationModel::encode_direction(Graph& g, const Lattice& lat, bool forward,
                                        const vector<vector<double>>& weights,
                                        vector<vector<LstmState>>* states) const {
  int n = lat.num_nodes();
  const auto& layers = forward ? enc_fwd_ : enc_bwd_;
  states->assign(cfg_.layers, vector<LstmState>(n));
  for (int l = 0; l < cfg_.layers; ++l) {
    auto& out = (*states)[l];
    vector<LatticePredecessor> preds;
    for (int step = 0; step < n; ++step) {
      int i = forward ? step : n - 1 - step;
      const auto& group = forward ? lat.preds[i] : lat.succs[i];
      Expr x = l == 0 ? embed(g, forward ? e_fwd_ : e_bwd_, lat.nodes[i].word)
                      : (*states)[l - 1][i].h;
      if (group.empty()) {
        out[i] = lstm_step(g, x, nullptr, layers[l]);
        continue;
      }
      preds.clear();
      for (size_t k = 0; k < group.size(); ++k)
        preds.push_back({out[group[k]], weights[i][k]});
      out[i] = lattice_lstm_step(g, x, preds, layers[l], cfg_.wcs, cfg_.bfg, s_h_expr(g, l),
                                 s_f_expr(g, l));
    }
  }
}

EncodedSource TranslationModel::encode_lattice(Graph& g, const Lattice& lat,
                                               const NodeScores& scores) const {
  int n = lat.num_nodes();
  // forward direction: predecessor marginals renormalized per consuming node;
  // backward direction: forward-normalized scores over outgoing connections
  vector<vector<double>> w_fwd = incoming_weights(lat, scores.wm);
  vector<vector<double>> w_bwd(n);
  for (int i = 0; i < n; ++i) {
    if (lat.succs[i].empty()) continue;
    vector<double> raw(lat.succs[i].size());
    for (size_t k = 0; k < raw.size(); ++k) raw[k] = scores.wf[lat.succs[i][k]];
    w_bwd[i] = apply_peakiness(raw, 1.0);
  }

  vector<vector<LstmState>> fwd, bwd;
  encode_direction(g, lat, true, w_fwd, &fwd);
  encode_direction(g, lat, false, w_bwd, &bwd);

  EncodedSource enc;
  enc.states.resize(n);
  enc.attn_keys.resize(n);
  enc.ln_wm.resize(n);
  int top = cfg_.layers - 1;
  for (int i = 0; i < n; ++i) {
    enc.states[i] = g.concat({fwd[top][i].h, bwd[top][i].h});
    enc.attn_keys[i] = g.affine({g.param(attn_b_), g.param(attn_Wh_), enc.states[i]});
    enc.ln_wm[i] = log(max(scores.wm[i], kScoreFloor));
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    LstmState init;
    init.h = g.concat({fwd[l][lat.eos()].h, bwd[l][lat.bos()].h});
    init.c = g.input(Tensor(cfg_.dec_hidden, 1));
    enc.dec_init.push_back(init);
  }
  return enc;
}

DecoderState TranslationModel::initial_state(Graph& g, const EncodedSource& enc) const {
  (void)g;
  DecoderState s;
  s.layers = enc.dec_init;
  return s;
}

Expr TranslationModel::attend(Graph& g, const EncodedSource& enc, Expr s_prev_top,
                              Expr* alpha_out) const {
  Expr q = g.matmul(g.param(attn_Ws_), s_prev_top);
  Expr v = g.param(attn_v_);
  Expr s_a;
  if (cfg_.batt.enabled) s_a = s_a_expr(g);
  vector<Expr> logits(enc.states.size());
  for (size_t i = 0; i < enc.states.size(); ++i) {
    Expr e = g.dot(v, g.tanh(g.add(enc.attn_keys[i], q)));
    if (cfg_.batt.enabled)
      e = g.add(e, g.scalar_mul(s_a, g.input_scalar(enc.ln_wm[i])));
    logits[i] = e;
  }
  Expr alpha = g.softmax(g.concat(logits));
  if (alpha_out) *alpha_out = alpha;
  return g.weighted_sum(alpha, enc.states);
}

DecodeStep TranslationModel::decode_step(Graph& g, const EncodedSource& enc,
                                         const DecoderState& prev, int y_prev) const {
  DecodeStep out;
  out.context = attend(g, enc, prev.top_h(), &out.alpha);
  Expr x = embed(g, e_trg_, y_prev);
  out.state.layers.resize(cfg_.layers);
  for (int l = 0; l < cfg_.layers; ++l) {
    out.state.layers[l] = lstm_step(g, x, &prev.layers[l], dec_[l]);
    x = out.state.layers[l].h;
  }
  Expr stilde = g.tanh(
      g.affine({g.param(b_hs_), g.param(W_hs_), g.concat({out.state.top_h(), out.context})}));
  out.logits = g.affine({g.param(b_so_), g.param(W_so_), stilde});
  return out;
}

Expr TranslationModel::sequence_loss(Graph& g, const EncodedSource& enc,
                                     const vector<int>& target) const {
  if (target.empty()) LATNMT_THROW("empty target sequence");
  if (target.back() != Vocabulary::kEos) LATNMT_THROW("target must end with eos");
  DecoderState state = initial_state(g, enc);
  int y_prev = Vocabulary::kBos;
  vector<Expr> losses;
  for (int t : target) {
    DecodeStep step = decode_step(g, enc, state, y_prev);
    losses.push_back(g.pick_neg_log_softmax(step.logits, t));
    state = step.state;
    y_prev = t;
  }
  return g.sum(losses);
}

}  // namespace latnmt
