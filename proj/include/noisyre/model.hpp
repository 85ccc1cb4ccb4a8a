#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "noisyre/autodiff.hpp"
#include "noisyre/corpus.hpp"
#include "noisyre/encoder.hpp"
#include "noisyre/noise.hpp"
#include "noisyre/param_store.hpp"
#include "noisyre/schema.hpp"
#include "noisyre/vocab.hpp"

namespace noisyre {

// Checkpoint disagrees with the model/schema it is being loaded into
// (missing parameter, shape or relation-count mismatch).
struct CheckpointMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything needed to score sentences: encoder parameters plus the
// transition column, all living in one ParamStore under fixed names.
struct Model {
  EncoderConfig config;
  RelationSchema schema;
  Vocabulary vocab;
  ParamStore params;

  Model(RelationSchema schema_in, Vocabulary vocab_in, EncoderConfig config_in,
        std::uint64_t seed);

  // Replaces parameter values with a checkpoint's (shapes must match).
  void load_checkpoint_values(const ParamStore& loaded);

  StructuredTransition transition() const;
};

// Batch loss over bags: -(1/G) sum_g (1/|S_g|) sum_s log p(noisy = label_g).
// With use_transition off the noisy logits are the true logits themselves
// (the identity-column phase; the transition parameter receives no gradient).
// dropout_rng == nullptr disables dropout (evaluation / gradient checking).
ad::NodePtr batch_loss_graph(ad::Tape& tape, Model& model, const std::vector<const Bag*>& batch,
                             const std::vector<Instance>& instances, bool use_transition,
                             Rng* dropout_rng);

// Fresh model with the checkpoint's parameter values (shape-checked, so a
// relation-count mismatch surfaces as an error here).
Model load_model_from_checkpoint(const RelationSchema& schema, const Vocabulary& vocab,
                                 const EncoderConfig& config,
                                 const std::filesystem::path& checkpoint_dir);

// softmax of the true-label logits, dropout off.
std::vector<double> sentence_true_probs(Model& model, const Instance& instance);

std::vector<std::vector<double>> bag_true_probs(Model& model, const Bag& bag,
                                                const std::vector<Instance>& instances);

}  // namespace noisyre
