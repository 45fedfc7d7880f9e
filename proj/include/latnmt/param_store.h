#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "latnmt/rng.h"
#include "latnmt/tensor.h"

namespace latnmt {

// Named parameter storage with persistent gradient buffers and Adam state.
// Gradients accumulate (+=) across examples until zero_grads() is called,
// so update groups of any size reduce to plain accumulation.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
  };

  int add(const std::string& name, Tensor init);
  int add_zeros(const std::string& name, int rows, int cols, double fill = 0.0);
  // Glorot-uniform init over +-sqrt(6/(fan_in+fan_out))
  int add_glorot(const std::string& name, int rows, int cols, Rng& rng);

  int find(const std::string& name) const;  // -1 when absent
  int size() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int id) { return entries_[id]; }
  const Entry& entry(int id) const { return entries_[id]; }
  Tensor& value(int id) { return entries_[id].value; }
  const Tensor& value(int id) const { return entries_[id].value; }
  Tensor& grad(int id) { return entries_[id].grad; }

  void zero_grads();
  double grad_norm() const;
  // Scales all gradients so the global norm does not exceed max_norm.
  void clip_gradients(double max_norm);

  // One Adam update over every parameter; advances the shared step counter.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  int64_t adam_t() const { return adam_t_; }

  // Binary checkpoint: header (magic, version, config string), named parameter
  // tensors as little-endian doubles, optionally followed by optimizer state.
  void save(const std::string& path, const std::string& config, bool with_optimizer) const;
  // Replaces the store contents. Returns the stored config string.
  std::string load(const std::string& path);
  // Copies values by name from a checkpoint into an already-built store.
  // Missing names keep their current init; shape mismatches are errors.
  // Returns the checkpoint's config string.
  std::string load_values(const std::string& path);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  int64_t adam_t_ = 0;
};

}  // namespace latnmt
