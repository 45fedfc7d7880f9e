#include "latnmt/corpus.h"

#include <fstream>
#include <sstream>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

vector<string> split_tokens(const string& line) {
  vector<string> out;
  istringstream is(line);
  string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

vector<vector<string>> load_token_lines(const string& path) {
  ifstream is(path);
  if (!is) LATNMT_THROW("cannot open " << path);
  vector<vector<string>> lines;
  string line;
  while (getline(is, line)) lines.push_back(split_tokens(line));
  return lines;
}

vector<int> tokens_to_ids(const vector<string>& tokens, const Vocabulary& vocab) {
  vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.get(t));
  return ids;
}

string ids_to_line(const vector<int>& ids, const Vocabulary& vocab) {
  string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

vector<SeqExample> load_seq_corpus(const string& src_path, const string& trg_path,
                                   const Vocabulary& src_vocab, const Vocabulary& trg_vocab) {
  auto src = load_token_lines(src_path);
  auto trg = load_token_lines(trg_path);
  if (src.size() != trg.size())
    LATNMT_THROW("parallel corpus size mismatch: " << src.size() << " vs " << trg.size());
  vector<SeqExample> out(src.size());
  for (size_t i = 0; i < src.size(); ++i) {
    out[i].src = tokens_to_ids(src[i], src_vocab);
    out[i].trg = tokens_to_ids(trg[i], trg_vocab);
  }
  return out;
}

vector<LatExample> load_lat_corpus(const string& lat_path, const string& trg_path,
                                   const Vocabulary& src_vocab, const Vocabulary& trg_vocab,
                                   bool strict) {
  Vocabulary vocab_view = src_vocab;  // frozen copy so unknown words map to unk
  vocab_view.freeze();
  auto lats = load_lattice_file(lat_path, vocab_view, strict);
  auto trg = load_token_lines(trg_path);
  if (lats.size() != trg.size())
    LATNMT_THROW("parallel corpus size mismatch: " << lats.size() << " vs " << trg.size());
  vector<LatExample> out(lats.size());
  for (size_t i = 0; i < lats.size(); ++i) {
    out[i].scores = compute_scores(lats[i]);
    out[i].lat = move(lats[i]);
    out[i].trg = tokens_to_ids(trg[i], trg_vocab);
  }
  return out;
}

}  // namespace latnmt
