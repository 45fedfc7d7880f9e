#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace latnmt {

// Token <-> index map with reserved unk/bos/eos entries.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kReserved = 3;

  Vocabulary();

  // Adds when growable, otherwise returns unk for unseen tokens.
  int get_or_add(const std::string& token);
  int get(const std::string& token) const;  // unk when unseen
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void save(const std::string& path) const;
  static Vocabulary load_file(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  bool frozen_ = false;
};

// Node-labeled word lattice: a connected DAG with one word and one
// forward-normalized score per node, a unique bos and a unique eos, and
// node ids 0..n-1 in topological order.
struct Lattice {
  struct Node {
    int word = 0;      // vocabulary index
    double wf = 1.0;   // probability of this node given any predecessor
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;  // (from, to), from < to

  // filled by finalize()
  std::vector<std::vector<int>> preds;
  std::vector<std::vector<int>> succs;

  int bos() const { return 0; }
  int eos() const { return static_cast<int>(nodes.size()) - 1; }
  int num_nodes() const { return static_cast<int>(nodes.size()); }

  // Rebuilds adjacency and checks all structural invariants. In lenient mode
  // drifting out-edge score sums are renormalized (warning to stderr) instead
  // of rejected; sums that stay inconsistent after renormalization still fail.
  void finalize(bool strict = true);
};

// Edge-labeled lattice in the PLF sense: words and scores live on edges and
// parallel edges are allowed.
struct EdgeLabeledLattice {
  struct Arc {
    int from = 0, to = 0;
    std::string word;
    double score = 1.0;
  };
  int num_nodes = 0;
  std::vector<Arc> arcs;
};

struct Path {
  std::vector<int> node_ids;  // interior nodes only (bos/eos excluded)
  std::vector<int> tokens;
  double prob = 1.0;
};

// PLF text: a tuple of positions, each a tuple of (word, score, span) arcs.
// Words unknown to a frozen vocabulary are replaced by the unk token.
EdgeLabeledLattice parse_plf(const std::string& text, Vocabulary& vocab, bool strict = true);
std::string serialize_plf(const EdgeLabeledLattice& ell);

// Line-graph conversion: one lattice node per arc, plus fresh bos/eos nodes.
// Preserves the multiset of (label sequence, path probability) pairs.
Lattice to_node_labeled(const EdgeLabeledLattice& ell, const Vocabulary& vocab);

// Chain lattice bos -> t1 -> ... -> tn -> eos, all scores 1.
Lattice from_token_sequence(const std::vector<int>& tokens);

// Edge-reversed lattice with bos/eos swapped, renumbered topologically.
// old_to_new, when given, receives the id mapping.
Lattice reverse(const Lattice& lat, std::vector<int>* old_to_new = nullptr);

// Deterministic topological order (Kahn with ascending-id tie-break); throws
// naming one offending edge when a cycle exists.
std::vector<int> topological_order(int num_nodes, const std::vector<std::pair<int, int>>& edges);

// All bos->eos paths with joint probabilities; throws beyond max_paths.
std::vector<Path> enumerate_paths(const Lattice& lat, size_t max_paths);

// Highest-probability complete path (max-product over wf).
Path best_path(const Lattice& lat);

// One lattice per line as JSON:
// {"nodes":[{"id":0,"word":"<s>","wf":1.0},...],"edges":[[0,1],...]}
std::string lattice_to_json(const Lattice& lat, const Vocabulary& vocab);
Lattice lattice_from_json(const std::string& line, Vocabulary& vocab, bool strict = true);

std::vector<Lattice> load_lattice_file(const std::string& path, Vocabulary& vocab,
                                       bool strict = true);

}  // namespace latnmt
