#include "latnmt/lattice_scores.h"

#include <cmath>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

namespace {

double log_sum_exp(const vector<double>& xs) {
  double m = xs[0];
  for (double x : xs) m = max(m, x);
  if (!isfinite(m)) return m;
  double z = 0.0;
  for (double x : xs) z += exp(x - m);
  return m + log(z);
}

double floored_log(double w) { return log(max(w, kScoreFloor)); }

}  // namespace

vector<double> compute_marginals(const Lattice& lat) {
  int n = lat.num_nodes();
  vector<double> log_wm(n, -HUGE_VAL);
  log_wm[lat.bos()] = 0.0;
  vector<double> acc;
  for (int i = 1; i < n; ++i) {
    acc.clear();
    for (int k : lat.preds[i]) acc.push_back(log_wm[k]);
    log_wm[i] = floored_log(lat.nodes[i].wf) + log_sum_exp(acc);
  }
  vector<double> wm(n);
  for (int i = 0; i < n; ++i) wm[i] = exp(log_wm[i]);
  return wm;
}

vector<double> backward_normalize(const Lattice& lat, const vector<double>& wm) {
  int n = lat.num_nodes();
  vector<double> wb(n, 1.0);
  for (int i = 0; i < n; ++i) {
    if (wm[i] <= 0.0) LATNMT_THROW("zero marginal at node " << i << " (invalid lattice)");
    if (lat.succs[i].empty()) continue;  // eos
    double z = 0.0;
    for (int k : lat.succs[i]) z += wm[k];
    if (z <= 0.0) LATNMT_THROW("zero successor marginal mass at node " << i);
    wb[i] = wm[i] / z;
  }
  return wb;
}

NodeScores compute_scores(const Lattice& lat) {
  NodeScores s;
  s.wf.resize(lat.num_nodes());
  for (int i = 0; i < lat.num_nodes(); ++i) s.wf[i] = lat.nodes[i].wf;
  s.wm = compute_marginals(lat);
  s.wb = backward_normalize(lat, s.wm);
  return s;
}

vector<vector<double>> incoming_weights(const Lattice& lat, const vector<double>& raw) {
  int n = lat.num_nodes();
  vector<vector<double>> w(n);
  vector<double> logs;
  for (int i = 0; i < n; ++i) {
    if (lat.preds[i].empty()) continue;
    logs.clear();
    for (int k : lat.preds[i]) logs.push_back(floored_log(raw[k]));
    double lz = log_sum_exp(logs);
    w[i].resize(logs.size());
    for (size_t j = 0; j < logs.size(); ++j) w[i][j] = exp(logs[j] - lz);
  }
  return w;
}

vector<double> apply_peakiness(const vector<double>& weights, double S) {
  return apply_peakiness(weights, vector<double>(weights.size(), S));
}

vector<double> apply_peakiness(const vector<double>& weights, const vector<double>& S) {
  if (S.size() != weights.size()) LATNMT_THROW("peakiness exponent count mismatch");
  vector<double> logs(weights.size());
  for (size_t k = 0; k < weights.size(); ++k) logs[k] = S[k] * floored_log(weights[k]);
  double lz = log_sum_exp(logs);
  vector<double> out(weights.size());
  for (size_t k = 0; k < weights.size(); ++k) out[k] = exp(logs[k] - lz);
  return out;
}

}  // namespace latnmt
