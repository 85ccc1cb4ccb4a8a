#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "noisyre/autodiff.hpp"

namespace noisyre {

struct OptimizerConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.0001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Named trainable tensors with their gradient accumulators and Adam state.
// Parameters are graph leaves; gradients accumulate across backward passes
// until zero_grad.
class ParamStore {
public:
  ParamStore() = default;
  // copying would alias the parameter nodes between stores
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  ad::NodePtr add(const std::string& name, ad::Tensor init, bool trainable = true);
  ad::NodePtr get(const std::string& name) const;
  bool has(const std::string& name) const;

  void set_value(const std::string& name, ad::Tensor v);
  void set_trainable(const std::string& name, bool trainable);
  bool trainable(const std::string& name) const;
  std::uint64_t adam_steps(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_values() const;

  void zero_grad();
  // Bias-corrected Adam; weight decay enters as an L2 term added to the raw
  // gradient before the moment updates. Throws on a non-finite update.
  void adam_step(const OptimizerConfig& config);

  std::uint64_t seed = 0;  // recorded in checkpoint manifests

  // Checkpoint directory: manifest.json plus one flat little-endian f64 file
  // per parameter. Round-trips bit-exactly.
  void save(const std::filesystem::path& dir, std::uint64_t global_step) const;
  struct Loaded;  // defined below; needs the complete ParamStore
  static Loaded load(const std::filesystem::path& dir);

private:
  struct Entry {
    ad::NodePtr node;
    ad::Tensor m;
    ad::Tensor v;
    std::uint64_t steps = 0;
    bool trainable = true;
  };
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> entries_;
};

struct ParamStore::Loaded {
  ParamStore store;
  std::uint64_t global_step = 0;
};

}  // namespace noisyre
