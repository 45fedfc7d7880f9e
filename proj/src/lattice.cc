#include "latnmt/lattice.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "latnmt/error.h"

using namespace std;
using json = nlohmann::json;

namespace latnmt {

Vocabulary::Vocabulary() {
  tokens_ = {"<unk>", "<s>", "</s>"};
  for (int i = 0; i < kReserved; ++i) index_[tokens_[i]] = i;
}

int Vocabulary::get_or_add(const string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  if (frozen_) return kUnk;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

int Vocabulary::get(const string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) LATNMT_THROW("vocabulary id " << id << " out of range");
  return tokens_[id];
}

void Vocabulary::save(const string& path) const {
  ofstream os(path);
  if (!os) LATNMT_THROW("cannot write vocabulary: " << path);
  for (int i = kReserved; i < size(); ++i) os << tokens_[i] << "\n";
}

Vocabulary Vocabulary::load_file(const string& path) {
  ifstream is(path);
  if (!is) LATNMT_THROW("cannot open vocabulary: " << path);
  Vocabulary v;
  string line;
  while (getline(is, line)) {
    if (!line.empty()) v.get_or_add(line);
  }
  v.freeze();
  return v;
}

namespace {

constexpr double kSumTol = 1e-6;
constexpr double kLenientTol = 1e-3;

void check_out_sums(Lattice& lat, bool strict) {
  // Group k: the wf of succs(k) must sum to one. After line-graph conversion
  // all groups that share a node agree on the sum, so lenient renormalization
  // scales each node once via its first predecessor's group.
  int n = lat.num_nodes();
  bool renormalized = false;
  for (int k = 0; k < n; ++k) {
    if (lat.succs[k].empty()) continue;
    double s = 0.0;
    for (int j : lat.succs[k]) s += lat.nodes[j].wf;
    if (fabs(s - 1.0) <= kSumTol) continue;
    if (strict || fabs(s - 1.0) > kLenientTol || s <= 0.0)
      LATNMT_THROW("out-edge scores of node " << k << " sum to " << s << " != 1");
    for (int j : lat.succs[k]) lat.nodes[j].wf /= s;
    renormalized = true;
  }
  if (renormalized) {
    cerr << "warning: renormalized drifting lattice scores\n";
    // a second strict pass catches groups that disagree
    for (int k = 0; k < n; ++k) {
      if (lat.succs[k].empty()) continue;
      double s = 0.0;
      for (int j : lat.succs[k]) s += lat.nodes[j].wf;
      if (fabs(s - 1.0) > kSumTol)
        LATNMT_THROW("inconsistent out-edge scores at node " << k << " (sum " << s << ")");
    }
  }
}

}  // namespace

void Lattice::finalize(bool strict) {
  int n = num_nodes();
  if (n < 2) LATNMT_THROW("lattice needs at least bos and eos");
  preds.assign(n, {});
  succs.assign(n, {});
  set<pair<int, int>> seen;
  for (auto [from, to] : edges) {
    if (from < 0 || to >= n || from >= to)
      LATNMT_THROW("edge (" << from << "," << to << ") violates topological node ids");
    if (!seen.insert({from, to}).second)
      LATNMT_THROW("duplicate edge (" << from << "," << to << ")");
    succs[from].push_back(to);
    preds[to].push_back(from);
  }
  for (int i = 0; i < n; ++i) {
    sort(preds[i].begin(), preds[i].end());
    sort(succs[i].begin(), succs[i].end());
  }
  for (int i = 0; i < n; ++i) {
    if (i == bos()) {
      if (!preds[i].empty()) LATNMT_THROW("bos has incoming edges");
      if (succs[i].empty()) LATNMT_THROW("bos has no outgoing edges");
    } else if (preds[i].empty()) {
      LATNMT_THROW("node " << i << " has no predecessors (second source)");
    }
    if (i == eos()) {
      if (!succs[i].empty()) LATNMT_THROW("eos has outgoing edges");
    } else if (succs[i].empty()) {
      LATNMT_THROW("node " << i << " has no successors (second sink)");
    }
    if (!(nodes[i].wf >= 0.0 && nodes[i].wf <= 1.0 + kSumTol))
      LATNMT_THROW("node " << i << " score " << nodes[i].wf << " outside [0,1]");
  }
  check_out_sums(*this, strict);
}

// ---------------------------------------------------------------------------
// PLF parsing

namespace {

struct PlfParser {
  const string& text;
  size_t pos = 0;

  explicit PlfParser(const string& t) : text(t) {}

  [[noreturn]] void fail(const string& what) {
    LATNMT_THROW("PLF syntax error at position " << pos << ": " << what);
  }
  void skip_ws() {
    while (pos < text.size() && isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  void expect(char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c) fail(string("expected '") + c + "'");
    ++pos;
  }
  bool peek(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }
  string quoted_word() {
    skip_ws();
    if (pos >= text.size() || text[pos] != '\'') fail("expected quoted word");
    ++pos;
    string w;
    while (pos < text.size() && text[pos] != '\'') {
      if (text[pos] == '\\' && pos + 1 < text.size()) ++pos;
      w += text[pos++];
    }
    if (pos >= text.size()) fail("unterminated word");
    ++pos;
    return w;
  }
  double number() {
    skip_ws();
    size_t used = 0;
    double x;
    try {
      x = stod(text.substr(pos), &used);
    } catch (const exception&) {
      fail("expected a number");
    }
    pos += used;
    return x;
  }
};

}  // namespace

EdgeLabeledLattice parse_plf(const string& text, Vocabulary& vocab, bool strict) {
  PlfParser p(text);
  EdgeLabeledLattice ell;
  vector<vector<size_t>> arcs_by_pos;  // arc indices per source position

  p.expect('(');
  while (!p.peek(')')) {
    int from = static_cast<int>(arcs_by_pos.size());
    arcs_by_pos.emplace_back();
    p.expect('(');
    while (!p.peek(')')) {
      p.expect('(');
      EdgeLabeledLattice::Arc arc;
      arc.from = from;
      arc.word = vocab.token(vocab.get_or_add(p.quoted_word()));
      p.expect(',');
      arc.score = p.number();
      p.expect(',');
      double span = p.number();
      if (span != floor(span) || span < 1) p.fail("span must be a positive integer");
      arc.to = from + static_cast<int>(span);
      p.expect(')');
      if (arc.score <= 0.0) LATNMT_THROW("non-positive arc score " << arc.score);
      arcs_by_pos[from].push_back(ell.arcs.size());
      ell.arcs.push_back(move(arc));
      if (p.peek(',')) p.expect(',');
    }
    p.expect(')');
    if (p.peek(',')) p.expect(',');
  }
  p.expect(')');
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing characters");

  ell.num_nodes = static_cast<int>(arcs_by_pos.size()) + 1;
  if (ell.arcs.empty()) LATNMT_THROW("PLF lattice has no arcs");
  int sink = ell.num_nodes - 1;
  for (const auto& arc : ell.arcs)
    if (arc.to > sink)
      LATNMT_THROW("arc span escapes the lattice (" << arc.from << " -> " << arc.to << " with "
                                                    << sink << " positions)");
  // every interior position needs both in- and out-arcs
  vector<int> indeg(ell.num_nodes, 0);
  for (const auto& arc : ell.arcs) ++indeg[arc.to];
  for (int i = 1; i < sink; ++i) {
    if (indeg[i] == 0) LATNMT_THROW("position " << i << " is unreachable");
    if (arcs_by_pos[i].empty()) LATNMT_THROW("position " << i << " has no outgoing arcs");
  }
  // per-source-position score normalization
  for (int i = 0; i < sink; ++i) {
    double s = 0.0;
    for (size_t a : arcs_by_pos[i]) s += ell.arcs[a].score;
    if (fabs(s - 1.0) <= kSumTol) continue;
    if (strict) LATNMT_THROW("out-edge scores at position " << i << " sum to " << s << " != 1");
    cerr << "warning: renormalizing PLF scores at position " << i << " (sum " << s << ")\n";
    for (size_t a : arcs_by_pos[i]) ell.arcs[a].score /= s;
  }
  return ell;
}

string serialize_plf(const EdgeLabeledLattice& ell) {
  vector<vector<const EdgeLabeledLattice::Arc*>> by_pos(ell.num_nodes - 1);
  for (const auto& arc : ell.arcs) by_pos[arc.from].push_back(&arc);
  string out = "(";
  for (const auto& arcs : by_pos) {
    out += "(";
    for (const auto* arc : arcs) {
      string w;
      for (char c : arc->word) {
        if (c == '\'' || c == '\\') w += '\\';
        w += c;
      }
      char buf[64];
      snprintf(buf, sizeof(buf), "%.17g", arc->score);
      out += "('" + w + "'," + buf + "," + to_string(arc->to - arc->from) + "),";
    }
    out += "),";
  }
  out += ")";
  return out;
}

// ---------------------------------------------------------------------------

Lattice to_node_labeled(const EdgeLabeledLattice& ell, const Vocabulary& vocab) {
  if (ell.arcs.empty()) LATNMT_THROW("cannot convert a lattice with no edges");
  int sink = ell.num_nodes - 1;

  // Line graph: one node per arc, ordered by (from, to, input order), framed
  // by fresh bos/eos nodes. PLF positions are topological, so this ordering
  // is too.
  vector<size_t> order(ell.arcs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (ell.arcs[a].from != ell.arcs[b].from) return ell.arcs[a].from < ell.arcs[b].from;
    return ell.arcs[a].to < ell.arcs[b].to;
  });
  vector<int> arc_node(ell.arcs.size());
  for (size_t r = 0; r < order.size(); ++r) arc_node[order[r]] = static_cast<int>(r) + 1;

  Lattice lat;
  lat.nodes.resize(ell.arcs.size() + 2);
  lat.nodes[0] = {Vocabulary::kBos, 1.0};
  lat.nodes.back() = {Vocabulary::kEos, 1.0};
  for (size_t a = 0; a < ell.arcs.size(); ++a)
    lat.nodes[arc_node[a]] = {vocab.get(ell.arcs[a].word), ell.arcs[a].score};

  vector<vector<int>> arcs_into(ell.num_nodes);
  for (size_t a = 0; a < ell.arcs.size(); ++a) arcs_into[ell.arcs[a].to].push_back(arc_node[a]);

  for (size_t a = 0; a < ell.arcs.size(); ++a) {
    const auto& arc = ell.arcs[a];
    if (arc.from == 0) lat.edges.push_back({0, arc_node[a]});
    for (int p : arcs_into[arc.from]) lat.edges.push_back({p, arc_node[a]});
    if (arc.to == sink) lat.edges.push_back({arc_node[a], lat.eos()});
  }
  lat.finalize();
  return lat;
}

Lattice from_token_sequence(const vector<int>& tokens) {
  if (tokens.empty()) LATNMT_THROW("cannot build a lattice from an empty token sequence");
  Lattice lat;
  lat.nodes.push_back({Vocabulary::kBos, 1.0});
  for (int t : tokens) lat.nodes.push_back({t, 1.0});
  lat.nodes.push_back({Vocabulary::kEos, 1.0});
  for (int i = 0; i + 1 < lat.num_nodes(); ++i) lat.edges.push_back({i, i + 1});
  lat.finalize();
  return lat;
}

Lattice reverse(const Lattice& lat, vector<int>* old_to_new) {
  int n = lat.num_nodes();
  // ids are topological, so n-1-i is topological for the reversed graph.
  // Interior words and scores are carried over unchanged; the carried wf
  // values are generally not forward-normalized on the reversed structure,
  // so no score validation happens here.
  Lattice rev;
  rev.nodes.resize(n);
  for (int i = 0; i < n; ++i) rev.nodes[n - 1 - i] = lat.nodes[i];
  rev.nodes[0].word = Vocabulary::kBos;
  rev.nodes[n - 1].word = Vocabulary::kEos;
  for (auto [from, to] : lat.edges) rev.edges.push_back({n - 1 - to, n - 1 - from});
  sort(rev.edges.begin(), rev.edges.end());
  rev.preds.assign(n, {});
  rev.succs.assign(n, {});
  for (auto [from, to] : rev.edges) {
    rev.succs[from].push_back(to);
    rev.preds[to].push_back(from);
  }
  for (int i = 0; i < n; ++i) {
    sort(rev.preds[i].begin(), rev.preds[i].end());
    sort(rev.succs[i].begin(), rev.succs[i].end());
  }
  if (old_to_new) {
    old_to_new->resize(n);
    for (int i = 0; i < n; ++i) (*old_to_new)[i] = n - 1 - i;
  }
  return rev;
}

vector<int> topological_order(int num_nodes, const vector<pair<int, int>>& edges) {
  vector<vector<int>> succ(num_nodes);
  vector<int> indeg(num_nodes, 0);
  for (auto [from, to] : edges) {
    succ[from].push_back(to);
    ++indeg[to];
  }
  priority_queue<int, vector<int>, greater<int>> ready;
  for (int i = 0; i < num_nodes; ++i)
    if (indeg[i] == 0) ready.push(i);
  vector<int> order;
  order.reserve(num_nodes);
  while (!ready.empty()) {
    int i = ready.top();
    ready.pop();
    order.push_back(i);
    for (int j : succ[i])
      if (--indeg[j] == 0) ready.push(j);
  }
  if (static_cast<int>(order.size()) != num_nodes) {
    for (auto [from, to] : edges)
      if (indeg[to] > 0 && indeg[from] > 0)
        LATNMT_THROW("cycle detected through edge (" << from << "," << to << ")");
    LATNMT_THROW("cycle detected");
  }
  return order;
}

vector<Path> enumerate_paths(const Lattice& lat, size_t max_paths) {
  vector<Path> paths;
  Path cur;
  // iterative DFS over (node, next-successor-index)
  vector<pair<int, size_t>> stack = {{lat.bos(), 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node == lat.eos()) {
      if (paths.size() >= max_paths)
        LATNMT_THROW("lattice has more than " << max_paths << " paths");
      cur.prob = 1.0;
      for (int id : cur.node_ids) cur.prob *= lat.nodes[id].wf;
      paths.push_back(cur);
      stack.pop_back();
      continue;
    }
    if (next >= lat.succs[node].size()) {
      stack.pop_back();
      if (node != lat.bos()) {
        cur.node_ids.pop_back();
        cur.tokens.pop_back();
      }
      continue;
    }
    int child = lat.succs[node][next++];
    if (child != lat.eos()) {
      cur.node_ids.push_back(child);
      cur.tokens.push_back(lat.nodes[child].word);
    }
    stack.push_back({child, 0});
  }
  return paths;
}

Path best_path(const Lattice& lat) {
  int n = lat.num_nodes();
  vector<double> score(n, -HUGE_VAL);
  vector<int> back(n, -1);
  score[lat.bos()] = 0.0;
  for (int i = 1; i < n; ++i) {
    for (int k : lat.preds[i]) {
      double s = score[k] + log(lat.nodes[i].wf);
      if (s > score[i]) {
        score[i] = s;
        back[i] = k;
      }
    }
  }
  Path p;
  for (int i = back[lat.eos()]; i > lat.bos(); i = back[i]) {
    p.node_ids.push_back(i);
    p.tokens.push_back(lat.nodes[i].word);
  }
  std::reverse(p.node_ids.begin(), p.node_ids.end());
  std::reverse(p.tokens.begin(), p.tokens.end());
  p.prob = 1.0;
  for (int id : p.node_ids) p.prob *= lat.nodes[id].wf;
  return p;
}

// ---------------------------------------------------------------------------
// JSON round trip

string lattice_to_json(const Lattice& lat, const Vocabulary& vocab) {
  json nodes = json::array();
  for (int i = 0; i < lat.num_nodes(); ++i) {
    nodes.push_back(
        {{"id", i}, {"word", vocab.token(lat.nodes[i].word)}, {"wf", lat.nodes[i].wf}});
  }
  json edges = json::array();
  for (auto [from, to] : lat.edges) edges.push_back({from, to});
  return json{{"nodes", nodes}, {"edges", edges}}.dump();
}

Lattice lattice_from_json(const string& line, Vocabulary& vocab, bool strict) {
  json j = json::parse(line);
  Lattice lat;
  lat.nodes.resize(j.at("nodes").size());
  for (const auto& jn : j.at("nodes")) {
    int id = jn.at("id").get<int>();
    if (id < 0 || id >= lat.num_nodes()) LATNMT_THROW("lattice node id " << id << " out of range");
    lat.nodes[id].word = vocab.frozen() ? vocab.get(jn.at("word").get<string>())
                                        : vocab.get_or_add(jn.at("word").get<string>());
    lat.nodes[id].wf = jn.at("wf").get<double>();
  }
  for (const auto& je : j.at("edges")) lat.edges.push_back({je.at(0).get<int>(), je.at(1).get<int>()});
  lat.finalize(strict);
  return lat;
}

vector<Lattice> load_lattice_file(const string& path, Vocabulary& vocab, bool strict) {
  ifstream is(path);
  if (!is) LATNMT_THROW("cannot open lattice file: " << path);
  vector<Lattice> lats;
  string line;
  size_t lineno = 0;
  while (getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      lats.push_back(lattice_from_json(line, vocab, strict));
    } catch (const exception& e) {
      LATNMT_THROW(path << ":" << lineno << ": " << e.what());
    }
  }
  return lats;
}

}  // namespace latnmt
