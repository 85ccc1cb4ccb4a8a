#include "noisyre/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "noisyre/noise.hpp"
#include "noisyre/numeric.hpp"
#include "noisyre/rng.hpp"

namespace noisyre {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (total_epochs < 1) throw std::invalid_argument("total_epochs must be positive");
  if (pretrain_epochs > total_epochs) {
    throw std::invalid_argument("pretrain_epochs " + std::to_string(pretrain_epochs) +
                                " exceeds total_epochs " + std::to_string(total_epochs));
  }
  if (checkpoint_interval < 1) throw std::invalid_argument("checkpoint_interval must be positive");
  if (!(init_ratio > 0.0 && init_ratio < 1.0)) {
    throw std::invalid_argument("init_ratio must lie in (0, 1), got " +
                                std::to_string(init_ratio));
  }
  if (ensemble_size < 1) throw std::invalid_argument("ensemble_size must be positive");
  if (max_bag_sentences < 1) throw std::invalid_argument("max_bag_sentences must be positive");
  optimizer.validate();
}

namespace {

std::string step_dir_name(std::uint64_t step) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "step_%06llu", static_cast<unsigned long long>(step));
  return buffer;
}

void zero_padding_row_grad(ParamStore& params) {
  ad::Node& embed = *params.get("embed.word");
  for (std::size_t col = 0; col < embed.grad.cols(); ++col) embed.grad.at2(0, col) = 0.0;
}

}  // namespace

TrainResult train(Model& model, const std::vector<Bag>& train_bags,
                  const std::vector<Bag>& validation_bags, const std::vector<Instance>& instances,
                  const TrainConfig& config, const std::filesystem::path& run_dir) {
  config.validate();
  if (train_bags.empty()) throw std::invalid_argument("training needs at least one bag");
  if (validation_bags.empty()) throw std::invalid_argument("training needs validation bags");

  TrainResult result;

  std::vector<Bag> bags = train_bags;
  for (Bag& bag : bags) {
    if (bag.members.size() > config.max_bag_sentences) {
      result.warnings.push_back("bag (" + bag.head_id + ", " + bag.tail_id + ") truncated from " +
                                std::to_string(bag.members.size()) + " to " +
                                std::to_string(config.max_bag_sentences) + " sentences");
      bag.members.resize(config.max_bag_sentences);
    }
  }

  std::filesystem::create_directories(run_dir / "checkpoints");
  std::ofstream log(run_dir / "train_log.jsonl");
  if (!log) throw std::runtime_error("cannot write training log in " + run_dir.string());

  Rng dropout_rng(derive_seed(config.seed, streams::kDropout));
  std::uint64_t global_step = 0;
  double last_loss = 0.0;
  std::uint64_t last_checkpoint_step = 0;

  auto save_checkpoint = [&](std::size_t epoch, const std::string& phase) {
    std::string rel_path = "checkpoints/" + step_dir_name(global_step);
    model.params.save(run_dir / "checkpoints" / step_dir_name(global_step), global_step);
    CheckpointRecord record;
    record.path = rel_path;
    record.step = global_step;
    record.epoch = epoch;
    record.phase = phase;
    record.loss = last_loss;
    record.val_accuracy = validate(model, validation_bags, instances);
    result.checkpoints.push_back(record);
    last_checkpoint_step = global_step;

    nlohmann::ordered_json line;
    line["step"] = record.step;
    line["epoch"] = record.epoch;
    line["phase"] = record.phase;
    line["loss"] = record.loss;
    line["val_accuracy"] = record.val_accuracy;
    line["path"] = record.path;
    log << line.dump() << "\n";
    log.flush();
  };

  for (std::size_t epoch = 0; epoch < config.total_epochs; ++epoch) {
    bool pretrain_phase = epoch < config.pretrain_epochs;
    std::string phase = pretrain_phase ? "pretrain" : "finetune";
    if (epoch == config.pretrain_epochs) {
      if (!config.phase2_from_identity) {
        StructuredTransition init = init_column(config.init_ratio, model.schema.size());
        model.params.set_value("trans.col", ad::Tensor::vec(init.first_column));
      }
      model.params.set_trainable("trans.col", true);
    }

    std::vector<std::size_t> order(bags.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(config.seed, streams::kShuffle, epoch));
    shuffle_rng.shuffle(order);

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::size_t end = std::min(begin + config.batch_size, order.size());
      std::vector<const Bag*> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&bags[order[i]]);

      ad::Tape tape;
      ad::NodePtr loss =
          batch_loss_graph(tape, model, batch, instances, !pretrain_phase, &dropout_rng);
      last_loss = loss->value.scalar_value();
      if (!std::isfinite(last_loss)) {
        std::string kept = result.checkpoints.empty()
                               ? "none"
                               : result.checkpoints.back().path;
        throw std::runtime_error("training diverged at step " + std::to_string(global_step + 1) +
                                 " (non-finite loss); last finite checkpoint: " + kept);
      }
      model.params.zero_grad();
      tape.backward(loss);
      zero_padding_row_grad(model.params);
      model.params.adam_step(config.optimizer);
      ++global_step;

      if (global_step % config.checkpoint_interval == 0) save_checkpoint(epoch, phase);
    }
  }

  if (result.checkpoints.empty() || last_checkpoint_step != global_step) {
    std::string phase =
        config.total_epochs <= config.pretrain_epochs ? "pretrain" : "finetune";
    save_checkpoint(config.total_epochs - 1, phase);
  }

  result.best_index = 0;
  for (std::size_t i = 1; i < result.checkpoints.size(); ++i) {
    if (result.checkpoints[i].val_accuracy > result.checkpoints[result.best_index].val_accuracy) {
      result.best_index = i;
    }
  }
  std::ofstream best(run_dir / "best_checkpoint.txt");
  best << result.checkpoints[result.best_index].path << "\n";
  return result;
}

double validate(Model& model, const std::vector<Bag>& validation_bags,
                const std::vector<Instance>& instances) {
  if (validation_bags.empty()) throw std::invalid_argument("validation set is empty");
  std::size_t correct = 0;
  for (const Bag& bag : validation_bags) {
    SelectorOutput out = conditional_optimal_select(bag_true_probs(model, bag, instances));
    if (argmax(out.distribution) == bag.label) ++correct;
  }
  return double(correct) / double(validation_bags.size());
}

std::vector<SelectorOutput> ensemble_predict(std::vector<Model>& models,
                                             const std::vector<Bag>& bags,
                                             const std::vector<Instance>& instances,
                                             bool use_avg_selector) {
  if (models.empty()) throw std::invalid_argument("ensemble needs at least one model");
  std::size_t k = models.front().schema.size();
  for (const Model& m : models) {
    if (m.schema.size() != k) {
      throw CheckpointMismatchError("ensemble models disagree on relation count: " +
                                    std::to_string(k) + " vs " +
                                    std::to_string(m.schema.size()));
    }
  }
  std::vector<SelectorOutput> outputs;
  outputs.reserve(bags.size());
  for (const Bag& bag : bags) {
    std::vector<std::vector<double>> mean(bag.members.size(), std::vector<double>(k, 0.0));
    for (Model& m : models) {
      std::vector<std::vector<double>> dists = bag_true_probs(m, bag, instances);
      for (std::size_t s = 0; s < dists.size(); ++s) {
        for (std::size_t j = 0; j < k; ++j) mean[s][j] += dists[s][j];
      }
    }
    for (auto& dist : mean) {
      for (double& v : dist) v /= double(models.size());
    }
    outputs.push_back(use_avg_selector ? avg_weighted_select(mean)
                                       : conditional_optimal_select(mean));
  }
  return outputs;
}

std::vector<Bag> filter_encodable(const std::vector<Bag>& bags,
                                  const std::vector<Instance>& instances,
                                  const Vocabulary& vocab, const EncoderConfig& config,
                                  std::vector<std::string>* warnings) {
  std::vector<Bag> kept;
  kept.reserve(bags.size());
  for (const Bag& bag : bags) {
    Bag copy = bag;
    copy.members.clear();
    for (std::size_t member : bag.members) {
      try {
        prepare_input(instances[member], vocab, config);
        copy.members.push_back(member);
      } catch (const std::runtime_error& e) {
        if (warnings != nullptr) {
          warnings->push_back("dropped sentence in bag (" + bag.head_id + ", " + bag.tail_id +
                              "): " + e.what());
        }
      }
    }
    if (copy.members.empty()) {
      if (warnings != nullptr) {
        warnings->push_back("dropped bag (" + bag.head_id + ", " + bag.tail_id +
                            "): no encodable sentences");
      }
      continue;
    }
    kept.push_back(std::move(copy));
  }
  return kept;
}

}  // namespace noisyre
