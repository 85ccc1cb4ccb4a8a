#include "noisyre/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyre/rng.hpp"

namespace noisyre {

void SynthConfig::validate() const {
  if (relation_count < 2) throw std::invalid_argument("relation_count must be at least 2");
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be positive");
  if (bag_count < 1) throw std::invalid_argument("bag_count must be positive");
  if (min_sentences < 1 || min_sentences > max_sentences) {
    throw std::invalid_argument("need 1 <= min_sentences <= max_sentences");
  }
  if (!(expressive_rate >= 0.0 && expressive_rate <= 1.0)) {
    throw std::invalid_argument("expressive_rate must lie in [0, 1], got " +
                                std::to_string(expressive_rate));
  }
  if (!(na_bag_fraction >= 0.0 && na_bag_fraction <= 1.0)) {
    throw std::invalid_argument("na_bag_fraction must lie in [0, 1], got " +
                                std::to_string(na_bag_fraction));
  }
}

SynthResult synth_generate(const SynthConfig& config) {
  config.validate();

  SynthResult result;
  result.relation_names.push_back("NA");
  for (std::size_t k = 1; k < config.relation_count; ++k) {
    result.relation_names.push_back("rel_" + std::to_string(k));
  }

  Rng rng(derive_seed(config.seed, streams::kSynth));
  auto filler = [&]() { return "w" + std::to_string(rng.index(config.vocab_size)); };

  std::size_t na_bags =
      static_cast<std::size_t>(std::llround(config.na_bag_fraction * double(config.bag_count)));

  for (std::size_t g = 0; g < config.bag_count; ++g) {
    bool is_na_bag = g < na_bags;
    std::size_t bag_relation =
        is_na_bag ? RelationSchema::kNaLabel : 1 + rng.index(config.relation_count - 1);
    std::string head_id = "p" + std::to_string(g) + "_h";
    std::string tail_id = "p" + std::to_string(g) + "_t";

    std::size_t n_sentences =
        config.min_sentences + rng.index(config.max_sentences - config.min_sentences + 1);
    for (std::size_t s = 0; s < n_sentences; ++s) {
      bool expressive = !is_na_bag && rng.bernoulli(config.expressive_rate);

      Instance inst;
      std::size_t n_prefix = rng.index(3);
      std::size_t n_suffix = rng.index(3);
      for (std::size_t i = 0; i < n_prefix; ++i) inst.tokens.push_back(filler());
      inst.head.id = head_id;
      inst.head.start = inst.tokens.size();
      inst.tokens.push_back("<e1>");
      inst.head.end = inst.tokens.size();
      // middle is always two tokens so length never identifies the label
      if (expressive) {
        inst.tokens.push_back("rel_" + std::to_string(bag_relation) + "_a");
        inst.tokens.push_back("rel_" + std::to_string(bag_relation) + "_b");
      } else {
        inst.tokens.push_back(filler());
        inst.tokens.push_back(filler());
      }
      inst.tail.id = tail_id;
      inst.tail.start = inst.tokens.size();
      inst.tokens.push_back("<e2>");
      inst.tail.end = inst.tokens.size();
      for (std::size_t i = 0; i < n_suffix; ++i) inst.tokens.push_back(filler());

      inst.relation = bag_relation;
      inst.has_true_relation = true;
      inst.true_relation = expressive ? bag_relation : RelationSchema::kNaLabel;
      result.instances.push_back(std::move(inst));
    }
  }
  return result;
}

}  // namespace noisyre
