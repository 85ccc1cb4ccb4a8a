#include "noisyre/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace noisyre {

namespace fs = std::filesystem;

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(beta1 > 0 && beta1 < 1)) throw std::invalid_argument("beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
}

ad::NodePtr ParamStore::add(const std::string& name, ad::Tensor init, bool trainable) {
  if (entries_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Entry e;
  e.node = ad::leaf(std::move(init), name);
  e.m = ad::Tensor::zeros(e.node->value.shape);
  e.v = ad::Tensor::zeros(e.node->value.shape);
  e.trainable = trainable;
  auto node = e.node;
  entries_.emplace(name, std::move(e));
  order_.push_back(name);
  return node;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return it->second;
}

ad::NodePtr ParamStore::get(const std::string& name) const { return entry(name).node; }

bool ParamStore::has(const std::string& name) const { return entries_.count(name) != 0; }

void ParamStore::set_value(const std::string& name, ad::Tensor v) {
  Entry& e = entry(name);
  if (v.shape != e.node->value.shape) {
    throw std::invalid_argument("set_value shape " + ad::shape_str(v.shape) + " does not match parameter " +
                                name + " shape " + ad::shape_str(e.node->value.shape));
  }
  e.node->value = std::move(v);
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
  entry(name).trainable = trainable;
}

bool ParamStore::trainable(const std::string& name) const { return entry(name).trainable; }

std::uint64_t ParamStore::adam_steps(const std::string& name) const { return entry(name).steps; }

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += entry(name).node->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (const auto& name : order_) entry(name).node->zero_grad();
}

void ParamStore::adam_step(const OptimizerConfig& config) {
  config.validate();
  for (const auto& name : order_) {
    Entry& e = entry(name);
    if (!e.trainable) continue;
    e.steps += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(e.steps));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(e.steps));
    ad::Tensor& p = e.node->value;
    const ad::Tensor& grad = e.node->grad;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = grad.at(i) + config.weight_decay * p.at(i);
      e.m.at(i) = config.beta1 * e.m.at(i) + (1.0 - config.beta1) * g;
      e.v.at(i) = config.beta2 * e.v.at(i) + (1.0 - config.beta2) * g * g;
      const double m_hat = e.m.at(i) / bc1;
      const double v_hat = e.v.at(i) / bc2;
      p.at(i) -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
      if (!std::isfinite(p.at(i))) {
        throw std::runtime_error("non-finite value in parameter " + name + " after optimizer step " +
                                 std::to_string(e.steps));
      }
    }
  }
}

namespace {

constexpr int kFormatVersion = 1;

void write_f64_le(std::ofstream& out, const std::vector<double>& values) {
  for (double d : values) {
    auto bits = std::bit_cast<std::uint64_t>(d);
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t r = 0;
      for (int b = 0; b < 8; ++b) r |= ((bits >> (8 * b)) & 0xFF) << (8 * (7 - b));
      bits = r;
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

std::vector<double> read_f64_le(std::ifstream& in, std::size_t count, const std::string& path) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[8];
    if (!in.read(buf, 8)) throw std::runtime_error("truncated parameter file: " + path);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) {
      std::uint64_t r = 0;
      for (int b = 0; b < 8; ++b) r |= ((bits >> (8 * b)) & 0xFF) << (8 * (7 - b));
      bits = r;
    }
    values[i] = std::bit_cast<double>(bits);
  }
  char extra;
  if (in.read(&extra, 1)) throw std::runtime_error("trailing bytes in parameter file: " + path);
  return values;
}

}  // namespace

void ParamStore::save(const fs::path& dir, std::uint64_t global_step) const {
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["step"] = global_step;
  manifest["seed"] = seed;
  manifest["params"] = nlohmann::ordered_json::array();
  for (const auto& name : order_) {
    const Entry& e = entry(name);
    const std::string file = name + ".bin";
    nlohmann::ordered_json p;
    p["name"] = name;
    p["shape"] = e.node->value.shape;
    p["dtype"] = "f64";
    p["file"] = file;
    p["trainable"] = e.trainable;
    p["adam_steps"] = e.steps;
    manifest["params"].push_back(p);

    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write parameter file: " + (dir / file).string());
    write_f64_le(out, e.node->value.values);
    if (!out) throw std::runtime_error("write failed: " + (dir / file).string());
  }
  std::ofstream mout(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mout) throw std::runtime_error("cannot write manifest: " + (dir / "manifest.json").string());
  mout << manifest.dump(2) << "\n";
}

ParamStore::Loaded ParamStore::load(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  std::ifstream min(mpath);
  if (!min) throw std::runtime_error("cannot open checkpoint manifest: " + mpath.string());
  nlohmann::json manifest = nlohmann::json::parse(min);
  if (manifest.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version in " + mpath.string());
  }
  Loaded result;
  result.global_step = manifest.at("step").get<std::uint64_t>();
  result.store.seed = manifest.at("seed").get<std::uint64_t>();
  for (const auto& p : manifest.at("params")) {
    const std::string name = p.at("name").get<std::string>();
    const auto shape = p.at("shape").get<std::vector<std::size_t>>();
    if (p.at("dtype").get<std::string>() != "f64") {
      throw std::runtime_error("unsupported dtype for parameter " + name);
    }
    const fs::path fpath = dir / p.at("file").get<std::string>();
    std::ifstream in(fpath, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open parameter file: " + fpath.string());
    auto values = read_f64_le(in, ad::shape_size(shape), fpath.string());
    result.store.add(name, ad::Tensor(shape, std::move(values)), p.at("trainable").get<bool>());
    result.store.entry(name).steps = p.at("adam_steps").get<std::uint64_t>();
  }
  return result;
}

}  // namespace noisyre
