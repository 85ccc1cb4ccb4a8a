#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noisyre/corpus.hpp"
#include "noisyre/model.hpp"
#include "noisyre/param_store.hpp"
#include "noisyre/selector.hpp"

namespace noisyre {

struct TrainConfig {
  std::size_t batch_size = 50;
  std::size_t pretrain_epochs = 2;  // identity-transition phase
  std::size_t total_epochs = 20;
  std::size_t checkpoint_interval = 200;  // batches between checkpoints
  double init_ratio = 0.1;                // transition column init for phase 2
  std::size_t ensemble_size = 5;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  // phase 2 normally re-initializes the transition column with init_ratio;
  // this instead trains it onward from the identity
  bool phase2_from_identity = false;
  std::size_t max_bag_sentences = 512;

  void validate() const;
};

struct CheckpointRecord {
  std::string path;  // relative to the run directory
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  std::string phase;  // "pretrain" | "finetune"
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<CheckpointRecord> checkpoints;
  std::size_t best_index = 0;  // highest validation accuracy, earliest on ties
  std::vector<std::string> warnings;
};

// Two-phase training over bag batches; writes checkpoints/step_NNNNNN dirs,
// a JSONL log, and best_checkpoint.txt under run_dir. Aborts on a non-finite
// loss, keeping the checkpoints already on disk.
TrainResult train(Model& model, const std::vector<Bag>& train_bags,
                  const std::vector<Bag>& validation_bags, const std::vector<Instance>& instances,
                  const TrainConfig& config, const std::filesystem::path& run_dir);

// Fraction of bags whose selected group distribution argmax equals the
// observed bag label; dropout off.
double validate(Model& model, const std::vector<Bag>& validation_bags,
                const std::vector<Instance>& instances);

// Per-sentence true-label distributions averaged across the models, then the
// selector. All models must agree on K.
std::vector<SelectorOutput> ensemble_predict(std::vector<Model>& models,
                                             const std::vector<Bag>& bags,
                                             const std::vector<Instance>& instances,
                                             bool use_avg_selector);

// Drops instances the encoder cannot take (entity spans beyond max_len) and
// the bags that become empty; returns diagnostics about what was dropped.
std::vector<Bag> filter_encodable(const std::vector<Bag>& bags,
                                  const std::vector<Instance>& instances,
                                  const Vocabulary& vocab, const EncoderConfig& config,
                                  std::vector<std::string>* warnings);

}  // namespace noisyre
