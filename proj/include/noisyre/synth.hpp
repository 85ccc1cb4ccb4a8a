#pragma once

#include <cstdint>
#include <vector>

#include "noisyre/corpus.hpp"
#include "noisyre/schema.hpp"

namespace noisyre {

// Knobs for the planted-truth corpus generator. Every positive bag carries
// one knowledge-base relation as the observed label of all its sentences,
// but each sentence actually expresses it only with probability
// expressive_rate — the wrong-labeling noise the bag loss is built for.
struct SynthConfig {
  std::size_t relation_count = 5;  // K, counting NA
  std::size_t vocab_size = 300;    // filler token pool
  std::size_t bag_count = 2000;    // G
  std::size_t min_sentences = 1;
  std::size_t max_sentences = 5;
  double expressive_rate = 0.5;  // per-sentence chance a positive bag's sentence is genuine
  double na_bag_fraction = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  std::vector<Instance> instances;
  std::vector<std::string> relation_names;  // schema payload, element 0 = "NA"
};

// Deterministic given the seed. Expressive sentences place two
// relation-specific evidence tokens between the entities; inexpressive ones
// place filler there, so sentence shape never leaks the label.
SynthResult synth_generate(const SynthConfig& config);

}  // namespace noisyre
