#include "noisyre/model.hpp"

#include <stdexcept>

#include "noisyre/numeric.hpp"

namespace noisyre {

Model::Model(RelationSchema schema_in, Vocabulary vocab_in, EncoderConfig config_in,
             std::uint64_t seed)
    : config(config_in), schema(std::move(schema_in)), vocab(std::move(vocab_in)) {
  if (config.relation_count == 0) config.relation_count = schema.size();
  if (config.relation_count != schema.size()) {
    throw std::invalid_argument("encoder relation_count " +
                                std::to_string(config.relation_count) +
                                " does not match schema size " + std::to_string(schema.size()));
  }
  params.seed = seed;
  init_encoder_params(&params, vocab, config, seed);
  StructuredTransition identity = StructuredTransition::identity(schema.size());
  params.add("trans.col", ad::Tensor::vec(identity.first_column), /*trainable=*/false);
}

void Model::load_checkpoint_values(const ParamStore& loaded) {
  for (const std::string& name : params.names()) {
    if (!loaded.has(name)) {
      throw CheckpointMismatchError("checkpoint is missing parameter \"" + name + "\"");
    }
    const ad::Tensor& incoming = loaded.get(name)->value;
    const ad::Tensor& current = params.get(name)->value;
    if (incoming.shape != current.shape) {
      throw CheckpointMismatchError("checkpoint parameter \"" + name + "\" has shape " +
                                    ad::shape_str(incoming.shape) + ", model expects " +
                                    ad::shape_str(current.shape));
    }
    params.set_value(name, incoming);
  }
}

StructuredTransition Model::transition() const {
  StructuredTransition w;
  w.first_column = params.get("trans.col")->value.values;
  w.trainable = params.trainable("trans.col");
  return w;
}

Model load_model_from_checkpoint(const RelationSchema& schema, const Vocabulary& vocab,
                                 const EncoderConfig& config,
                                 const std::filesystem::path& checkpoint_dir) {
  ParamStore::Loaded loaded = ParamStore::load(checkpoint_dir);
  Model model(schema, vocab, config, loaded.store.seed);
  model.load_checkpoint_values(loaded.store);
  return model;
}

ad::NodePtr batch_loss_graph(ad::Tape& tape, Model& model, const std::vector<const Bag*>& batch,
                             const std::vector<Instance>& instances, bool use_transition,
                             Rng* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("batch_loss_graph needs at least one bag");
  std::vector<ad::NodePtr> terms;
  std::vector<double> weights;
  ad::NodePtr column = use_transition ? model.params.get("trans.col") : nullptr;

  for (const Bag* bag : batch) {
    if (bag->members.empty()) throw std::invalid_argument("batch_loss_graph got an empty bag");
    double weight = 1.0 / (double(batch.size()) * double(bag->members.size()));
    for (std::size_t member : bag->members) {
      EncoderInput input = prepare_input(instances[member], model.vocab, model.config);
      std::vector<double> mask;
      const std::vector<double>* mask_ptr = nullptr;
      if (dropout_rng != nullptr && model.config.dropout_rate > 0.0) {
        mask = make_dropout_mask(model.config.pooled_dim(), model.config.dropout_rate,
                                 dropout_rng);
        mask_ptr = &mask;
      }
      ad::NodePtr h = encode_graph(tape, input, model.params, model.config, mask_ptr);
      ad::NodePtr noisy = use_transition ? ad::structured_apply(tape, column, h) : h;
      ad::NodePtr term =
          ad::sub(tape, ad::log_sum_exp(tape, noisy), ad::pick(tape, noisy, bag->label));
      terms.push_back(term);
      weights.push_back(weight);
    }
  }
  return ad::weighted_sum(tape, std::move(terms), std::move(weights));
}

std::vector<double> sentence_true_probs(Model& model, const Instance& instance) {
  ad::Tape tape;
  EncoderInput input = prepare_input(instance, model.vocab, model.config);
  ad::NodePtr h = encode_graph(tape, input, model.params, model.config, nullptr);
  return softmax(h->value.values);
}

std::vector<std::vector<double>> bag_true_probs(Model& model, const Bag& bag,
                                                const std::vector<Instance>& instances) {
  std::vector<std::vector<double>> out;
  out.reserve(bag.members.size());
  for (std::size_t member : bag.members) {
    out.push_back(sentence_true_probs(model, instances[member]));
  }
  return out;
}

}  // namespace noisyre
