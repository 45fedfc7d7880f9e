#include "latnmt/encoder.h"

#include <cmath>

#include "latnmt/error.h"
#include "latnmt/lattice_scores.h"

using namespace std;

namespace latnmt {

LstmState lstm_step(Graph& g, Expr x, const LstmState* prev, const LstmLayerIds& p) {
  Expr i, o, u, f;
  if (prev) {
    i = g.sigmoid(g.affine({g.param(p.bi), g.param(p.Wi), x, g.param(p.Ui), prev->h}));
    f = g.sigmoid(g.affine({g.param(p.bf), g.param(p.Wf), x, g.param(p.Uf), prev->h}));
    o = g.sigmoid(g.affine({g.param(p.bo), g.param(p.Wo), x, g.param(p.Uo), prev->h}));
    u = g.tanh(g.affine({g.param(p.bu), g.param(p.Wu), x, g.param(p.Uu), prev->h}));
  } else {
    i = g.sigmoid(g.affine({g.param(p.bi), g.param(p.Wi), x}));
    o = g.sigmoid(g.affine({g.param(p.bo), g.param(p.Wo), x}));
    u = g.tanh(g.affine({g.param(p.bu), g.param(p.Wu), x}));
  }
  LstmState s;
  s.c = prev ? g.add(g.cmult(i, u), g.cmult(f, prev->c)) : g.cmult(i, u);
  s.h = g.cmult(o, g.tanh(s.c));
  return s;
}

LstmState lattice_lstm_step(Graph& g, Expr x, const vector<LatticePredecessor>& preds,
                            const LstmLayerIds& p, const MechanismConfig& wcs,
                            const MechanismConfig& bfg, Expr S_h, Expr S_f) {
  if (preds.empty()) LATNMT_THROW("lattice_lstm_step needs at least one predecessor");
  int K = static_cast<int>(preds.size());

  vector<double> lnw(K);
  for (int k = 0; k < K; ++k) lnw[k] = log(max(preds[k].weight, kScoreFloor));

  // recurrent input
  Expr htilde;
  if (wcs.enabled) {
    Expr B = g.peaked_log_weights(S_h, lnw);  // H x K log weights
    vector<Expr> terms(K);
    for (int k = 0; k < K; ++k)
      terms[k] = g.cmult(g.exp(g.pick_col(B, k)), preds[k].state.h);
    htilde = g.sum(terms);
  } else {
    vector<Expr> hs(K);
    for (int k = 0; k < K; ++k) hs[k] = preds[k].state.h;
    htilde = g.sum(hs);
  }

  Expr i = g.sigmoid(g.affine({g.param(p.bi), g.param(p.Wi), x, g.param(p.Ui), htilde}));
  Expr o = g.sigmoid(g.affine({g.param(p.bo), g.param(p.Wo), x, g.param(p.Uo), htilde}));
  Expr u = g.tanh(g.affine({g.param(p.bu), g.param(p.Wu), x, g.param(p.Uu), htilde}));

  // one forget gate per predecessor
  Expr Bf;
  if (bfg.enabled) Bf = g.peaked_log_weights(S_f, lnw);
  vector<Expr> cell_terms;
  cell_terms.push_back(g.cmult(i, u));
  for (int k = 0; k < K; ++k) {
    Expr pre = g.affine({g.param(p.bf), g.param(p.Wf), x, g.param(p.Uf), preds[k].state.h});
    if (bfg.enabled) pre = g.add(pre, g.pick_col(Bf, k));
    Expr f = g.sigmoid(pre);
    cell_terms.push_back(g.cmult(f, preds[k].state.c));
  }

  LstmState s;
  s.c = g.sum(cell_terms);
  s.h = g.cmult(o, g.tanh(s.c));
  return s;
}

}  // namespace latnmt
