#include "latnmt/graph.h"

#include <cassert>
#include <cmath>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

Expr Graph::push(Node n) {
#ifndef NDEBUG
  assert(n.val.all_finite() && "non-finite value in forward pass");
#endif
  nodes_.push_back(move(n));
  return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Graph::input(Tensor t) {
  Node n;
  n.op = Op::kInput;
  n.val = move(t);
  return push(move(n));
}

Expr Graph::param(int param_id) {
  if (!params_) LATNMT_THROW("graph has no parameter store");
  Node n;
  n.op = Op::kParam;
  n.aux = param_id;
  n.val = params_->value(param_id);
  return push(move(n));
}

Expr Graph::lookup(int param_id, int row) {
  if (!params_) LATNMT_THROW("graph has no parameter store");
  const Tensor& table = params_->value(param_id);
  if (row < 0 || row >= table.rows) LATNMT_THROW("lookup row " << row << " out of range");
  Node n;
  n.op = Op::kLookup;
  n.aux = param_id;
  n.consts.push_back(row);
  n.val = Tensor(table.cols, 1);
  for (int c = 0; c < table.cols; ++c) n.val[c] = table(row, c);
  return push(move(n));
}

Expr Graph::affine(const vector<Expr>& terms) {
  if (terms.empty() || terms.size() % 2 == 0) LATNMT_THROW("affine expects {t0, W1, x1, ...}");
  Node n;
  n.op = Op::kAffine;
  const Tensor& t0 = nodes_[terms[0].i].val;
  if (!t0.is_vector()) LATNMT_THROW("affine bias term must be a column vector");
  n.val = t0;
  for (size_t i = 1; i < terms.size(); i += 2) {
    const Tensor& W = nodes_[terms[i].i].val;
    const Tensor& x = nodes_[terms[i + 1].i].val;
    if (W.cols != x.rows || x.cols != 1 || W.rows != n.val.rows)
      LATNMT_THROW("affine shape mismatch: " << W.rows << "x" << W.cols << " * " << x.rows << "x"
                                             << x.cols << " vs " << n.val.rows);
    matvec_acc(W, x, n.val);
  }
  for (Expr e : terms) n.in.push_back(e.i);
  return push(move(n));
}

Expr Graph::matmul(Expr a, Expr b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (A.cols != B.rows) LATNMT_THROW("matmul shape mismatch: " << A.cols << " vs " << B.rows);
  Node n;
  n.op = Op::kMatmul;
  n.in = {a.i, b.i};
  n.val = Tensor(A.rows, B.cols);
  for (int r = 0; r < A.rows; ++r)
    for (int k = 0; k < A.cols; ++k) {
      double av = A(r, k);
      if (av == 0.0) continue;
      for (int c = 0; c < B.cols; ++c) n.val(r, c) += av * B(k, c);
    }
  return push(move(n));
}

Expr Graph::add(Expr a, Expr b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (!A.same_shape(B)) LATNMT_THROW("add shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.in = {a.i, b.i};
  n.val = A;
  for (int i = 0; i < B.size(); ++i) n.val[i] += B[i];
  return push(move(n));
}

Expr Graph::sub(Expr a, Expr b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (!A.same_shape(B)) LATNMT_THROW("sub shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.in = {a.i, b.i};
  n.val = A;
  for (int i = 0; i < B.size(); ++i) n.val[i] -= B[i];
  return push(move(n));
}

Expr Graph::cmult(Expr a, Expr b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (!A.same_shape(B)) LATNMT_THROW("cmult shape mismatch");
  Node n;
  n.op = Op::kCmult;
  n.in = {a.i, b.i};
  n.val = A;
  for (int i = 0; i < B.size(); ++i) n.val[i] *= B[i];
  return push(move(n));
}

Expr Graph::scalar_mul(Expr s, Expr x) {
  const Tensor& S = nodes_[s.i].val;
  if (!S.is_scalar()) LATNMT_THROW("scalar_mul needs a 1x1 first argument");
  Node n;
  n.op = Op::kScalarMul;
  n.in = {s.i, x.i};
  n.val = nodes_[x.i].val;
  for (double& v : n.val.v) v *= S[0];
  return push(move(n));
}

Expr Graph::concat(const vector<Expr>& xs) {
  if (xs.empty()) LATNMT_THROW("concat of nothing");
  int rows = 0;
  for (Expr e : xs) {
    if (!nodes_[e.i].val.is_vector()) LATNMT_THROW("concat expects column vectors");
    rows += nodes_[e.i].val.rows;
  }
  Node n;
  n.op = Op::kConcat;
  n.val = Tensor(rows, 1);
  int at = 0;
  for (Expr e : xs) {
    const Tensor& t = nodes_[e.i].val;
    for (int i = 0; i < t.rows; ++i) n.val[at++] = t[i];
    n.in.push_back(e.i);
  }
  return push(move(n));
}

Expr Graph::sum(const vector<Expr>& xs) {
  if (xs.empty()) LATNMT_THROW("sum of nothing");
  Node n;
  n.op = Op::kSum;
  n.val = nodes_[xs[0].i].val;
  n.in.push_back(xs[0].i);
  for (size_t k = 1; k < xs.size(); ++k) {
    const Tensor& t = nodes_[xs[k].i].val;
    if (!t.same_shape(n.val)) LATNMT_THROW("sum shape mismatch");
    for (int i = 0; i < t.size(); ++i) n.val[i] += t[i];
    n.in.push_back(xs[k].i);
  }
  return push(move(n));
}

Expr Graph::dot(Expr a, Expr b) {
  const Tensor& A = nodes_[a.i].val;
  const Tensor& B = nodes_[b.i].val;
  if (!A.same_shape(B) || !A.is_vector()) LATNMT_THROW("dot expects equal-length column vectors");
  double acc = 0.0;
  for (int i = 0; i < A.rows; ++i) acc += A[i] * B[i];
  Node n;
  n.op = Op::kDot;
  n.in = {a.i, b.i};
  n.val = Tensor::scalar(acc);
  return push(move(n));
}

Expr Graph::sigmoid(Expr x) {
  Node n;
  n.op = Op::kSigmoid;
  n.in = {x.i};
  n.val = nodes_[x.i].val;
  for (double& v : n.val.v) v = 1.0 / (1.0 + std::exp(-v));
  return push(move(n));
}

Expr Graph::tanh(Expr x) {
  Node n;
  n.op = Op::kTanh;
  n.in = {x.i};
  n.val = nodes_[x.i].val;
  for (double& v : n.val.v) v = std::tanh(v);
  return push(move(n));
}

Expr Graph::exp(Expr x) {
  Node n;
  n.op = Op::kExp;
  n.in = {x.i};
  n.val = nodes_[x.i].val;
  for (double& v : n.val.v) v = std::exp(v);
  return push(move(n));
}

Expr Graph::log(Expr x) {
  Node n;
  n.op = Op::kLog;
  n.in = {x.i};
  n.val = nodes_[x.i].val;
  for (double& v : n.val.v) {
    if (v <= 0.0) LATNMT_THROW("log of non-positive input " << v);
    v = std::log(v);
  }
  return push(move(n));
}

Expr Graph::softmax(Expr x) {
  const Tensor& X = nodes_[x.i].val;
  if (!X.is_vector()) LATNMT_THROW("softmax expects a column vector");
  Node n;
  n.op = Op::kSoftmax;
  n.in = {x.i};
  n.val = X;
  double m = n.val[0];
  for (int i = 1; i < n.val.rows; ++i) m = max(m, n.val[i]);
  double z = 0.0;
  for (int i = 0; i < n.val.rows; ++i) {
    n.val[i] = std::exp(n.val[i] - m);
    z += n.val[i];
  }
  for (int i = 0; i < n.val.rows; ++i) n.val[i] /= z;
  return push(move(n));
}

Expr Graph::pick_neg_log_softmax(Expr x, int idx) {
  const Tensor& X = nodes_[x.i].val;
  if (!X.is_vector()) LATNMT_THROW("pick_neg_log_softmax expects a column vector");
  if (idx < 0 || idx >= X.rows) LATNMT_THROW("pick index " << idx << " out of range");
  double m = X[0];
  for (int i = 1; i < X.rows; ++i) m = max(m, X[i]);
  double z = 0.0;
  for (int i = 0; i < X.rows; ++i) z += std::exp(X[i] - m);
  Node n;
  n.op = Op::kPickNLS;
  n.in = {x.i};
  n.aux = idx;
  n.val = Tensor::scalar(m + std::log(z) - X[idx]);
  return push(move(n));
}

Expr Graph::weighted_sum(Expr w, const vector<Expr>& hs) {
  const Tensor& W = nodes_[w.i].val;
  if (!W.is_vector() || W.rows != static_cast<int>(hs.size()))
    LATNMT_THROW("weighted_sum weight length " << W.rows << " vs " << hs.size() << " vectors");
  Node n;
  n.op = Op::kWeightedSum;
  n.in.push_back(w.i);
  n.val = Tensor(nodes_[hs[0].i].val.rows, 1);
  for (size_t k = 0; k < hs.size(); ++k) {
    const Tensor& h = nodes_[hs[k].i].val;
    if (!h.same_shape(n.val)) LATNMT_THROW("weighted_sum shape mismatch");
    for (int i = 0; i < h.rows; ++i) n.val[i] += W[k] * h[i];
    n.in.push_back(hs[k].i);
  }
  return push(move(n));
}

Expr Graph::peaked_log_weights(Expr S, const vector<double>& lnw) {
  const Tensor& s = nodes_[S.i].val;
  if (!s.is_vector()) LATNMT_THROW("peaked_log_weights expects a vector of exponents");
  int H = s.rows, K = static_cast<int>(lnw.size());
  if (K == 0) LATNMT_THROW("peaked_log_weights over empty weight list");
  Node n;
  n.op = Op::kPeakedLogWeights;
  n.in = {S.i};
  n.consts = lnw;
  n.val = Tensor(H, K);
  for (int d = 0; d < H; ++d) {
    double m = s[d] * lnw[0];
    for (int k = 1; k < K; ++k) m = max(m, s[d] * lnw[k]);
    double z = 0.0;
    for (int k = 0; k < K; ++k) z += std::exp(s[d] * lnw[k] - m);
    double lz = m + std::log(z);
    for (int k = 0; k < K; ++k) n.val(d, k) = s[d] * lnw[k] - lz;
  }
  return push(move(n));
}

Expr Graph::pick_col(Expr m, int col) {
  const Tensor& M = nodes_[m.i].val;
  if (col < 0 || col >= M.cols) LATNMT_THROW("pick_col " << col << " out of range");
  Node n;
  n.op = Op::kPickCol;
  n.in = {m.i};
  n.aux = col;
  n.val = Tensor(M.rows, 1);
  for (int r = 0; r < M.rows; ++r) n.val[r] = M(r, col);
  return push(move(n));
}

void Graph::backward(Expr loss) {
  if (!loss.valid() || loss.g != this) LATNMT_THROW("backward on foreign expression");
  if (!nodes_[loss.i].val.is_scalar()) LATNMT_THROW("backward needs a scalar loss");

  // Only ancestors of the loss participate; untouched parameters keep their
  // gradient buffers as-is.
  vector<char> reachable(nodes_.size(), 0);
  vector<int> stack = {loss.i};
  reachable[loss.i] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j : nodes_[i].in)
      if (!reachable[j]) {
        reachable[j] = 1;
        stack.push_back(j);
      }
  }
  for (int i = 0; i <= loss.i; ++i) {
    if (!reachable[i]) continue;
    Node& n = nodes_[i];
    n.grad = Tensor(n.val.rows, n.val.cols);
  }
  nodes_[loss.i].grad[0] = 1.0;
  for (int i = loss.i; i >= 0; --i) {
    if (!reachable[i]) continue;
    backward_node(i);
  }
}

void Graph::backward_node(int i) {
  Node& n = nodes_[i];
  const Tensor& dy = n.grad;
  auto val = [&](int j) -> const Tensor& { return nodes_[j].val; };
  auto grad = [&](int j) -> Tensor& { return nodes_[j].grad; };

  switch (n.op) {
    case Op::kInput:
      break;
    case Op::kParam: {
      Tensor& pg = params_->grad(n.aux);
      for (int k = 0; k < dy.size(); ++k) pg[k] += dy[k];
      break;
    }
    case Op::kLookup: {
      Tensor& pg = params_->grad(n.aux);
      int row = static_cast<int>(n.consts[0]);
      for (int c = 0; c < dy.rows; ++c) pg(row, c) += dy[c];
      break;
    }
    case Op::kAffine: {
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k];
      for (size_t t = 1; t < n.in.size(); t += 2) {
        outer_acc(dy, val(n.in[t + 1]), grad(n.in[t]));
        matvec_transpose_acc(val(n.in[t]), dy, grad(n.in[t + 1]));
      }
      break;
    }
    case Op::kMatmul: {
      const Tensor& A = val(n.in[0]);
      const Tensor& B = val(n.in[1]);
      Tensor& dA = grad(n.in[0]);
      Tensor& dB = grad(n.in[1]);
      for (int r = 0; r < A.rows; ++r)
        for (int k = 0; k < A.cols; ++k) {
          double acc = 0.0;
          for (int c = 0; c < B.cols; ++c) acc += dy(r, c) * B(k, c);
          dA(r, k) += acc;
        }
      for (int k = 0; k < B.rows; ++k)
        for (int c = 0; c < B.cols; ++c) {
          double acc = 0.0;
          for (int r = 0; r < A.rows; ++r) acc += A(r, k) * dy(r, c);
          dB(k, c) += acc;
        }
      break;
    }
    case Op::kAdd:
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k];
      for (int k = 0; k < dy.size(); ++k) grad(n.in[1])[k] += dy[k];
      break;
    case Op::kSub:
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k];
      for (int k = 0; k < dy.size(); ++k) grad(n.in[1])[k] -= dy[k];
      break;
    case Op::kCmult: {
      const Tensor& A = val(n.in[0]);
      const Tensor& B = val(n.in[1]);
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k] * B[k];
      for (int k = 0; k < dy.size(); ++k) grad(n.in[1])[k] += dy[k] * A[k];
      break;
    }
    case Op::kScalarMul: {
      double s = val(n.in[0])[0];
      const Tensor& X = val(n.in[1]);
      double ds = 0.0;
      for (int k = 0; k < dy.size(); ++k) ds += dy[k] * X[k];
      grad(n.in[0])[0] += ds;
      for (int k = 0; k < dy.size(); ++k) grad(n.in[1])[k] += s * dy[k];
      break;
    }
    case Op::kConcat: {
      int at = 0;
      for (int j : n.in) {
        Tensor& g = grad(j);
        for (int k = 0; k < g.rows; ++k) g[k] += dy[at++];
      }
      break;
    }
    case Op::kSum:
      for (int j : n.in)
        for (int k = 0; k < dy.size(); ++k) grad(j)[k] += dy[k];
      break;
    case Op::kDot: {
      const Tensor& A = val(n.in[0]);
      const Tensor& B = val(n.in[1]);
      double g = dy[0];
      for (int k = 0; k < A.rows; ++k) grad(n.in[0])[k] += g * B[k];
      for (int k = 0; k < A.rows; ++k) grad(n.in[1])[k] += g * A[k];
      break;
    }
    case Op::kSigmoid:
      for (int k = 0; k < dy.size(); ++k) {
        double y = n.val[k];
        grad(n.in[0])[k] += dy[k] * y * (1.0 - y);
      }
      break;
    case Op::kTanh:
      for (int k = 0; k < dy.size(); ++k) {
        double y = n.val[k];
        grad(n.in[0])[k] += dy[k] * (1.0 - y * y);
      }
      break;
    case Op::kExp:
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k] * n.val[k];
      break;
    case Op::kLog:
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += dy[k] / val(n.in[0])[k];
      break;
    case Op::kSoftmax: {
      double s = 0.0;
      for (int k = 0; k < dy.size(); ++k) s += dy[k] * n.val[k];
      for (int k = 0; k < dy.size(); ++k) grad(n.in[0])[k] += n.val[k] * (dy[k] - s);
      break;
    }
    case Op::kPickNLS: {
      const Tensor& X = val(n.in[0]);
      double m = X[0];
      for (int k = 1; k < X.rows; ++k) m = max(m, X[k]);
      double z = 0.0;
      for (int k = 0; k < X.rows; ++k) z += std::exp(X[k] - m);
      double g = dy[0];
      Tensor& dx = grad(n.in[0]);
      for (int k = 0; k < X.rows; ++k) dx[k] += g * std::exp(X[k] - m) / z;
      dx[n.aux] -= g;
      break;
    }
    case Op::kWeightedSum: {
      const Tensor& W = val(n.in[0]);
      Tensor& dW = grad(n.in[0]);
      for (size_t k = 1; k < n.in.size(); ++k) {
        const Tensor& h = val(n.in[k]);
        Tensor& dh = grad(n.in[k]);
        double acc = 0.0;
        for (int r = 0; r < dy.rows; ++r) acc += dy[r] * h[r];
        dW[k - 1] += acc;
        double wk = W[k - 1];
        for (int r = 0; r < dy.rows; ++r) dh[r] += wk * dy[r];
      }
      break;
    }
    case Op::kPeakedLogWeights: {
      // B[d,k] = S[d]*L[k] - lse_d  =>  dB/dS[d] = L[k] - sum_j u[d,j]*L[j]
      const auto& L = n.consts;
      int K = static_cast<int>(L.size());
      Tensor& dS = grad(n.in[0]);
      for (int d = 0; d < n.val.rows; ++d) {
        double mu = 0.0;
        for (int k = 0; k < K; ++k) mu += std::exp(n.val(d, k)) * L[k];
        double acc = 0.0;
        for (int k = 0; k < K; ++k) acc += dy(d, k) * (L[k] - mu);
        dS[d] += acc;
      }
      break;
    }
    case Op::kPickCol: {
      Tensor& dm = grad(n.in[0]);
      for (int r = 0; r < dy.rows; ++r) dm(r, n.aux) += dy[r];
      break;
    }
  }
}

}  // namespace latnmt
