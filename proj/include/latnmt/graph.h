#pragma once

#include <cstdint>
#include <vector>

#include "latnmt/param_store.h"
#include "latnmt/tensor.h"

namespace latnmt {

class Graph;

// Lightweight handle to a graph node.
struct Expr {
  Graph* g = nullptr;
  int i = -1;
  bool valid() const { return g != nullptr && i >= 0; }
};

// Per-example dynamic computation graph with reverse-mode gradients.
// Nodes are appended in construction order, which is a topological order by
// definition; forward values are computed eagerly and backward() walks the
// node list in descending index order, accumulating gradients additively.
class Graph {
 public:
  explicit Graph(ParamStore* params = nullptr) : params_(params) {}

  // leaves
  Expr input(Tensor t);
  Expr input_scalar(double x) { return input(Tensor::scalar(x)); }
  Expr input_vec(std::vector<double> v) { return input(Tensor::vec(std::move(v))); }
  Expr param(int param_id);
  // Row `row` of a parameter matrix as a column vector (embedding lookup).
  Expr lookup(int param_id, int row);

  // terms = {t0, W1, x1, W2, x2, ...}: t0 + sum_i Wi*xi
  Expr affine(const std::vector<Expr>& terms);
  Expr matmul(Expr a, Expr b);
  Expr add(Expr a, Expr b);
  Expr sub(Expr a, Expr b);
  Expr cmult(Expr a, Expr b);           // elementwise product
  Expr scalar_mul(Expr s, Expr x);      // s is 1x1
  Expr concat(const std::vector<Expr>& xs);  // vertical stack of column vectors
  Expr sum(const std::vector<Expr>& xs);     // elementwise sum, same shapes
  Expr dot(Expr a, Expr b);             // 1x1

  Expr sigmoid(Expr x);
  Expr tanh(Expr x);
  Expr exp(Expr x);
  Expr log(Expr x);

  Expr softmax(Expr x);                       // column vector, max-subtracted
  Expr pick_neg_log_softmax(Expr x, int idx);  // 1x1

  // sum_k w[k] * h_k for column vectors h_k
  Expr weighted_sum(Expr w, const std::vector<Expr>& hs);
  // HxK matrix B with B[d,k] = log softmax_k(S[d]*lnw[k]); exponentiating a
  // column gives the peakiness-normalized weight w_k^{S}/Z for that column.
  Expr peaked_log_weights(Expr S, const std::vector<double>& lnw);
  Expr pick_col(Expr m, int col);

  const Tensor& value(Expr e) const { return nodes_[e.i].val; }
  const Tensor& gradient(Expr e) const { return nodes_[e.i].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Accumulates d(loss)/d(theta) into the ParamStore gradient buffers for
  // every parameter reachable from `loss`; other parameters are untouched.
  void backward(Expr loss);

 private:
  enum class Op : uint8_t {
    kInput,
    kParam,
    kLookup,
    kAffine,
    kMatmul,
    kAdd,
    kSub,
    kCmult,
    kScalarMul,
    kConcat,
    kSum,
    kDot,
    kSigmoid,
    kTanh,
    kExp,
    kLog,
    kSoftmax,
    kPickNLS,
    kWeightedSum,
    kPeakedLogWeights,
    kPickCol,
  };

  struct Node {
    Op op;
    std::vector<int> in;
    Tensor val;
    Tensor grad;
    int aux = -1;                // param id, pick/lookup index, ...
    std::vector<double> consts;  // lnw payload
  };

  Expr push(Node n);
  void backward_node(int i);

  ParamStore* params_;
  std::vector<Node> nodes_;
};

}  // namespace latnmt
