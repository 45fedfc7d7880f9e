#pragma once

#include <vector>

#include "latnmt/corpus.h"
#include "latnmt/model.h"

namespace latnmt {

// Beam-search partial output.
struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;
  DecoderState state;
  bool finished = false;
};

// Standard beam search; hypotheses are compared by total log-probability
// (no length normalization) and finished ones retire to a pool. Returns the
// best finished hypothesis, or the best live one at max_len. max_len < 0
// defaults to 3x the source node count. Output excludes the final eos.
std::vector<int> beam_search(const TranslationModel& model, Graph& g, const EncodedSource& enc,
                             int beam_size = 5, int max_len = -1);

std::vector<int> translate_sequence(const TranslationModel& model, const std::vector<int>& src,
                                    int beam_size = 5, int max_len = -1);
std::vector<int> translate_lattice(const TranslationModel& model, const Lattice& lat,
                                   const NodeScores& scores, int beam_size = 5, int max_len = -1);

// exp(total NLL / total target tokens)
double perplexity(const TranslationModel& model, const std::vector<SeqExample>& corpus);
double perplexity(const TranslationModel& model, const std::vector<LatExample>& corpus);

// Mean decoder softmax entropy over teacher-forced steps of the first
// n_sentences examples.
double decoder_entropy(const TranslationModel& model, const std::vector<SeqExample>& corpus,
                       int n_sentences = 100);
double decoder_entropy(const TranslationModel& model, const std::vector<LatExample>& corpus,
                       int n_sentences = 100);

// Entropy of softmax(logits), computed as lnZ - sum((x-m)e^(x-m))/Z so a
// uniform logit vector returns ln(n) exactly.
double softmax_entropy(const Tensor& logits);

}  // namespace latnmt
