#include "latnmt/inference.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

double softmax_entropy(const Tensor& logits) {
  double m = logits[0];
  for (int i = 1; i < logits.size(); ++i) m = max(m, logits[i]);
  double z = 0.0, s1 = 0.0;
  for (int i = 0; i < logits.size(); ++i) {
    double e = exp(logits[i] - m);
    z += e;
    s1 += (logits[i] - m) * e;
  }
  return log(z) - s1 / z;
}

vector<int> beam_search(const TranslationModel& model, Graph& g, const EncodedSource& enc,
                        int beam_size, int max_len) {
  if (beam_size < 1) LATNMT_THROW("beam size must be positive");
  if (max_len < 0) max_len = 3 * enc.num_nodes();

  Hypothesis start;
  start.state = model.initial_state(g, enc);
  vector<Hypothesis> live = {start};
  vector<Hypothesis> finished;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    vector<Hypothesis> candidates;
    for (const Hypothesis& hyp : live) {
      int y_prev = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
      DecodeStep ds = model.decode_step(g, enc, hyp.state, y_prev);
      const Tensor& logits = g.value(ds.logits);
      // log softmax by value
      double m = logits[0];
      for (int i = 1; i < logits.size(); ++i) m = max(m, logits[i]);
      double z = 0.0;
      for (int i = 0; i < logits.size(); ++i) z += exp(logits[i] - m);
      double lz = m + log(z);
      // best beam_size continuations of this hypothesis
      vector<int> idx(logits.size());
      for (int i = 0; i < logits.size(); ++i) idx[i] = i;
      int take = min<int>(beam_size, logits.size());
      partial_sort(idx.begin(), idx.begin() + take, idx.end(), [&](int a, int b) {
        if (logits[a] != logits[b]) return logits[a] > logits[b];
        return a < b;
      });
      for (int r = 0; r < take; ++r) {
        Hypothesis cand = hyp;
        cand.tokens.push_back(idx[r]);
        cand.log_prob += logits[idx[r]] - lz;
        cand.state = ds.state;
        cand.finished = idx[r] == Vocabulary::kEos;
        candidates.push_back(move(cand));
      }
    }
    stable_sort(candidates.begin(), candidates.end(),
                [](const Hypothesis& a, const Hypothesis& b) { return a.log_prob > b.log_prob; });
    if (static_cast<int>(candidates.size()) > beam_size) candidates.resize(beam_size);
    live.clear();
    for (Hypothesis& cand : candidates) {
      if (cand.finished)
        finished.push_back(move(cand));
      else
        live.push_back(move(cand));
    }
  }

  const Hypothesis* best = nullptr;
  for (const Hypothesis& h : finished)
    if (!best || h.log_prob > best->log_prob) best = &h;
  if (!best)
    for (const Hypothesis& h : live)
      if (!best || h.log_prob > best->log_prob) best = &h;
  if (!best) return {};
  vector<int> out = best->tokens;
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

vector<int> translate_sequence(const TranslationModel& model, const vector<int>& src,
                               int beam_size, int max_len) {
  Graph g(&model.store());
  EncodedSource enc = model.encode_sequence(g, src);
  return beam_search(model, g, enc, beam_size, max_len);
}

vector<int> translate_lattice(const TranslationModel& model, const Lattice& lat,
                              const NodeScores& scores, int beam_size, int max_len) {
  Graph g(&model.store());
  EncodedSource enc = model.encode_lattice(g, lat, scores);
  return beam_search(model, g, enc, beam_size, max_len);
}

namespace {

struct TeacherStats {
  double nll = 0.0;
  long tokens = 0;
  double entropy = 0.0;
  long steps = 0;
};

using EncodeFn = function<EncodedSource(Graph&, size_t)>;

TeacherStats teacher_forced_stats(const TranslationModel& model, const EncodeFn& encode,
                                  size_t count,
                                  const function<const vector<int>&(size_t)>& target_of,
                                  bool want_entropy) {
  TeacherStats stats;
  for (size_t n = 0; n < count; ++n) {
    Graph g(&model.store());
    EncodedSource enc = encode(g, n);
    vector<int> target = target_of(n);
    target.push_back(Vocabulary::kEos);
    DecoderState state = model.initial_state(g, enc);
    int y_prev = Vocabulary::kBos;
    for (int t : target) {
      DecodeStep ds = model.decode_step(g, enc, state, y_prev);
      Expr nll = g.pick_neg_log_softmax(ds.logits, t);
      stats.nll += g.value(nll)[0];
      if (want_entropy) stats.entropy += softmax_entropy(g.value(ds.logits));
      ++stats.steps;
      state = ds.state;
      y_prev = t;
    }
    stats.tokens += static_cast<long>(target.size());
  }
  return stats;
}

}  // namespace

double perplexity(const TranslationModel& model, const vector<SeqExample>& corpus) {
  TeacherStats s = teacher_forced_stats(
      model,
      [&](Graph& g, size_t n) { return model.encode_sequence(g, corpus[n].src); }, corpus.size(),
      nullptr, [&](size_t n) -> const vector<int>& { return corpus[n].trg; }, false);
  return exp(s.nll / static_cast<double>(s.tokens));
}

double perplexity(const TranslationModel& model, const vector<LatExample>& corpus) {
  TeacherStats s = teacher_forced_stats(
      model,
      [&](Graph& g, size_t n) { return model.encode_lattice(g, corpus[n].lat, corpus[n].scores); },
      corpus.size(), nullptr, [&](size_t n) -> const vector<int>& { return corpus[n].trg; }, false);
  return exp(s.nll / static_cast<double>(s.tokens));
}

double decoder_entropy(const TranslationModel& model, const vector<SeqExample>& corpus,
                       int n_sentences) {
  size_t count = min<size_t>(corpus.size(), n_sentences);
  TeacherStats s = teacher_forced_stats(
      model,
      [&](Graph& g, size_t n) { return model.encode_sequence(g, corpus[n].src); }, count, nullptr,
      [&](size_t n) -> const vector<int>& { return corpus[n].trg; }, true);
  return s.entropy / static_cast<double>(s.steps);
}

double decoder_entropy(const TranslationModel& model, const vector<LatExample>& corpus,
                       int n_sentences) {
  size_t count = min<size_t>(corpus.size(), n_sentences);
  TeacherStats s = teacher_forced_stats(
      model,
      [&](Graph& g, size_t n) { return model.encode_lattice(g, corpus[n].lat, corpus[n].scores); },
      count, nullptr, [&](size_t n) -> const vector<int>& { return corpus[n].trg; }, true);
  return s.entropy / static_cast<double>(s.steps);
}

}  // namespace latnmt
