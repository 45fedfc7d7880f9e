#include "latnmt/param_store.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "latnmt/error.h"

using namespace std;

namespace latnmt {

int ParamStore::add(const string& name, Tensor init) {
  if (index_.count(name)) LATNMT_THROW("duplicate parameter name: " << name);
  int id = static_cast<int>(entries_.size());
  Entry e;
  e.name = name;
  e.grad = Tensor(init.rows, init.cols);
  e.adam_m = Tensor(init.rows, init.cols);
  e.adam_v = Tensor(init.rows, init.cols);
  e.value = move(init);
  entries_.push_back(move(e));
  index_[name] = id;
  return id;
}

int ParamStore::add_zeros(const string& name, int rows, int cols, double fill) {
  return add(name, Tensor(rows, cols, fill));
}

int ParamStore::add_glorot(const string& name, int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double bound = sqrt(6.0 / (rows + cols));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return add(name, move(t));
}

int ParamStore::find(const string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.grad.zero();
}

double ParamStore::grad_norm() const {
  double ss = 0.0;
  for (const auto& e : entries_)
    for (double g : e.grad.v) ss += g * g;
  return sqrt(ss);
}

void ParamStore::clip_gradients(double max_norm) {
  double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) return;
  double scale = max_norm / norm;
  for (auto& e : entries_)
    for (double& g : e.grad.v) g *= scale;
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++adam_t_;
  double bc1 = 1.0 - pow(beta1, static_cast<double>(adam_t_));
  double bc2 = 1.0 - pow(beta2, static_cast<double>(adam_t_));
  for (auto& e : entries_) {
    for (int i = 0; i < e.value.size(); ++i) {
      double g = e.grad[i];
      e.adam_m[i] = beta1 * e.adam_m[i] + (1.0 - beta1) * g;
      e.adam_v[i] = beta2 * e.adam_v[i] + (1.0 - beta2) * g * g;
      double mhat = e.adam_m[i] / bc1;
      double vhat = e.adam_v[i] / bc2;
      e.value[i] -= lr * mhat / (sqrt(vhat) + eps);
    }
  }
}

namespace {

const char kMagic[4] = {'L', 'N', 'M', 'T'};
const uint32_t kVersion = 1;

void write_u32(ostream& os, uint32_t x) { os.write(reinterpret_cast<const char*>(&x), 4); }
void write_i64(ostream& os, int64_t x) { os.write(reinterpret_cast<const char*>(&x), 8); }
void write_str(ostream& os, const string& s) {
  write_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<streamsize>(s.size()));
}
void write_tensor(ostream& os, const Tensor& t) {
  write_u32(os, static_cast<uint32_t>(t.rows));
  write_u32(os, static_cast<uint32_t>(t.cols));
  os.write(reinterpret_cast<const char*>(t.v.data()), static_cast<streamsize>(t.v.size() * 8));
}

uint32_t read_u32(istream& is) {
  uint32_t x = 0;
  is.read(reinterpret_cast<char*>(&x), 4);
  return x;
}
int64_t read_i64(istream& is) {
  int64_t x = 0;
  is.read(reinterpret_cast<char*>(&x), 8);
  return x;
}
string read_str(istream& is) {
  uint32_t n = read_u32(is);
  string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
Tensor read_tensor(istream& is) {
  uint32_t r = read_u32(is), c = read_u32(is);
  Tensor t(static_cast<int>(r), static_cast<int>(c));
  is.read(reinterpret_cast<char*>(t.v.data()), static_cast<streamsize>(t.v.size() * 8));
  return t;
}

}  // namespace

void ParamStore::save(const string& path, const string& config, bool with_optimizer) const {
  ofstream os(path, ios::binary);
  if (!os) LATNMT_THROW("cannot write checkpoint: " << path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_str(os, config);
  write_u32(os, static_cast<uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    write_str(os, e.name);
    write_tensor(os, e.value);
  }
  os.put(with_optimizer ? 1 : 0);
  if (with_optimizer) {
    write_i64(os, adam_t_);
    for (const auto& e : entries_) {
      write_tensor(os, e.adam_m);
      write_tensor(os, e.adam_v);
    }
  }
  if (!os) LATNMT_THROW("write failed: " << path);
}

namespace {

struct CheckpointData {
  string config;
  vector<pair<string, Tensor>> params;
  bool has_optimizer = false;
  int64_t adam_t = 0;
  vector<pair<Tensor, Tensor>> opt;  // (m, v), aligned with params
};

CheckpointData read_checkpoint(const string& path) {
  ifstream is(path, ios::binary);
  if (!is) LATNMT_THROW("cannot open checkpoint: " << path);
  char magic[4];
  is.read(magic, 4);
  if (!is || memcmp(magic, kMagic, 4) != 0) LATNMT_THROW("not a model checkpoint: " << path);
  uint32_t version = read_u32(is);
  if (version != kVersion) LATNMT_THROW("unsupported checkpoint version " << version);
  CheckpointData data;
  data.config = read_str(is);
  uint32_t n = read_u32(is);
  data.params.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    string name = read_str(is);
    data.params.emplace_back(move(name), read_tensor(is));
  }
  int flag = is.get();
  if (flag == 1) {
    data.has_optimizer = true;
    data.adam_t = read_i64(is);
    for (uint32_t i = 0; i < n; ++i) {
      Tensor m = read_tensor(is);
      Tensor v = read_tensor(is);
      data.opt.emplace_back(move(m), move(v));
    }
  }
  if (!is) LATNMT_THROW("truncated checkpoint: " << path);
  return data;
}

}  // namespace

string ParamStore::load(const string& path) {
  CheckpointData data = read_checkpoint(path);
  entries_.clear();
  index_.clear();
  adam_t_ = 0;
  for (size_t i = 0; i < data.params.size(); ++i) {
    int id = add(data.params[i].first, move(data.params[i].second));
    if (data.has_optimizer) {
      entries_[id].adam_m = move(data.opt[i].first);
      entries_[id].adam_v = move(data.opt[i].second);
    }
  }
  if (data.has_optimizer) adam_t_ = data.adam_t;
  return data.config;
}

string ParamStore::load_values(const string& path) {
  CheckpointData data = read_checkpoint(path);
  for (auto& [name, tensor] : data.params) {
    int id = find(name);
    if (id < 0) continue;
    if (!entries_[id].value.same_shape(tensor))
      LATNMT_THROW("checkpoint shape mismatch for " << name << ": " << tensor.rows << "x"
                                                    << tensor.cols << " vs " << entries_[id].value.rows
                                                    << "x" << entries_[id].value.cols);
    entries_[id].value = move(tensor);
  }
  return data.config;
}

}  // namespace latnmt
