#pragma once

#include <cstdint>
#include <vector>

#include "noisyre/autodiff.hpp"
#include "noisyre/corpus.hpp"
#include "noisyre/param_store.hpp"
#include "noisyre/rng.hpp"
#include "noisyre/vocab.hpp"

namespace noisyre {

struct EncoderConfig {
  std::size_t window = 3;          // convolution width
  std::size_t filter_count = 230;  // feature maps
  std::size_t word_dim = 50;
  std::size_t position_dim = 5;
  std::size_t max_len = 100;
  std::size_t position_clip = 100;  // offsets clipped to [-clip, +clip]
  double dropout_rate = 0.5;
  std::size_t relation_count = 0;  // K, set from the schema

  void validate() const;
  std::size_t input_dim() const { return word_dim + 2 * position_dim; }
  std::size_t pooled_dim() const { return 3 * filter_count; }
  std::size_t position_rows() const { return 2 * position_clip + 1; }
};

// Token ids plus position-table indices, truncated to max_len and padded up
// to the convolution window.
struct EncoderInput {
  std::vector<std::size_t> token_ids;
  std::vector<std::size_t> head_positions;
  std::vector<std::size_t> tail_positions;
  std::size_t head_last = 0;  // last token index of each entity span
  std::size_t tail_last = 0;
};

// Offsets i - span_start clipped to [-clip, clip], shifted to [0, 2*clip].
std::vector<std::size_t> relative_positions(std::size_t length, std::size_t span_start,
                                            std::size_t position_clip);

// Throws if truncation to max_len would cut off an entity span; callers on
// corpus paths catch and count such rejects.
EncoderInput prepare_input(const Instance& instance, const Vocabulary& vocab,
                           const EncoderConfig& config);

// The three pooling ranges over a feature map of length feature_len,
// half-open. Entity tokens terminate their own segment; boundaries are
// clamped into the feature map, so segments beyond the first can be empty.
ad::SegmentList pool_segments(std::size_t head_last, std::size_t tail_last,
                              std::size_t feature_len);

// Plain-math pooling used by oracle tests; features laid out row-major
// m x T, output the per-filter triples flattened to 3m.
std::vector<double> piecewise_max_pool(const ad::Tensor& features,
                                       const ad::SegmentList& segments);

// Registers embed.word (from the vocabulary), embed.pos_head/tail,
// conv.filters/bias, proj.weight/bias.
void init_encoder_params(ParamStore* store, const Vocabulary& vocab, const EncoderConfig& config,
                         std::uint64_t seed);

// Builds the true-label logit graph for one sentence:
// affine(dropout(tanh(pool(conv(embed)))))  ->  K logits.
// dropout_mask is a 3m-vector of {0, 1/(1-rate)} entries, or nullptr for
// evaluation mode (no mask node).
ad::NodePtr encode_graph(ad::Tape& tape, const EncoderInput& input, ParamStore& params,
                         const EncoderConfig& config, const std::vector<double>* dropout_mask);

// Dropout mask for one sentence: keep with probability 1-rate, kept entries
// scaled by 1/(1-rate).
std::vector<double> make_dropout_mask(std::size_t size, double rate, Rng* rng);

}  // namespace noisyre
