#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "noisyre/encoder.hpp"
#include "noisyre/synth.hpp"
#include "noisyre/trainer.hpp"

namespace noisyre {

// Merged view of every tunable plus file paths. Precedence: defaults, then a
// `key = value` config file, then command-line flags. The fully resolved set
// is echoed into the run directory and can be re-fed via --config.
struct RunConfig {
  std::string corpus;
  std::string schema;
  std::string embeddings;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double validation_fraction = 0.1;

  EncoderConfig encoder;
  TrainConfig trainer;
  SynthConfig synth;
  bool w_phase2_identity = false;  // mirrored into trainer.phase2_from_identity

  // Parses and assigns one key; throws std::invalid_argument naming the key
  // on unknown keys or unparseable values.
  void set(const std::string& key, const std::string& value);

  // Applies every `key = value` line of the file (# starts a comment).
  void load_file(const std::string& path);

  // All keys in sorted order, formatted so that re-reading reproduces the
  // exact values.
  std::map<std::string, std::string> to_map() const;

  void save(const std::string& path) const;

  TrainConfig train_config() const;
};

}  // namespace noisyre
