#pragma once

#include <vector>

#include "latnmt/lattice.h"

namespace latnmt {

// Floor applied to any probability before taking its log, so underflowed
// scores never reach ln() inside the network.
constexpr double kScoreFloor = 1e-10;

// Forward-normalized, marginal, and backward-normalized per-node scores.
struct NodeScores {
  std::vector<double> wf;
  std::vector<double> wm;
  std::vector<double> wb;
};

// Marginal probability of each node: total probability of the complete paths
// running through it. Forward algorithm in log space over topological ids.
std::vector<double> compute_marginals(const Lattice& lat);

// Per-node backward-normalized score wm(i) / sum of wm over successors of i;
// eos, having no successors, gets 1. Throws on a zero-marginal node.
std::vector<double> backward_normalize(const Lattice& lat, const std::vector<double>& wm);

NodeScores compute_scores(const Lattice& lat);

// Per-consuming-node weights: for node i, the raw scores of its predecessors
// renormalized to sum to one. result[i][j] pairs with lat.preds[i][j].
// This is what the encoder forward direction consumes with raw = wm; running
// it on the reversed lattice with raw = wf gives the backward direction's
// outgoing-connection normalization.
std::vector<std::vector<double>> incoming_weights(const Lattice& lat,
                                                  const std::vector<double>& raw);

// w_k^S / sum_k' w_k'^S, computed in log space. S is broadcast when scalar.
// Weights of zero are floored at kScoreFloor, never an error.
std::vector<double> apply_peakiness(const std::vector<double>& weights, double S);
std::vector<double> apply_peakiness(const std::vector<double>& weights,
                                    const std::vector<double>& S_per_element);

}  // namespace latnmt
