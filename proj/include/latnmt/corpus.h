#pragma once

#include <string>
#include <vector>

#include "latnmt/lattice.h"
#include "latnmt/lattice_scores.h"

namespace latnmt {

// One parallel example with a sequential source.
struct SeqExample {
  std::vector<int> src;  // raw token ids, no bos/eos
  std::vector<int> trg;
};

// One parallel example with a lattice source; scores are precomputed once.
struct LatExample {
  Lattice lat;
  NodeScores scores;
  std::vector<int> trg;
};

std::vector<std::string> split_tokens(const std::string& line);
std::vector<std::vector<std::string>> load_token_lines(const std::string& path);

std::vector<int> tokens_to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::string ids_to_line(const std::vector<int>& ids, const Vocabulary& vocab);

std::vector<SeqExample> load_seq_corpus(const std::string& src_path, const std::string& trg_path,
                                        const Vocabulary& src_vocab, const Vocabulary& trg_vocab);
std::vector<LatExample> load_lat_corpus(const std::string& lat_path, const std::string& trg_path,
                                        const Vocabulary& src_vocab, const Vocabulary& trg_vocab,
                                        bool strict = true);

}  // namespace latnmt
