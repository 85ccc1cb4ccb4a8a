#include "noisyre/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noisyre {

void EncoderConfig::validate() const {
  if (window < 1) throw std::invalid_argument("window must be at least 1");
  if (filter_count < 1) throw std::invalid_argument("filter_count must be at least 1");
  if (word_dim < 1) throw std::invalid_argument("word_dim must be at least 1");
  if (position_dim < 1) throw std::invalid_argument("position_dim must be at least 1");
  if (max_len < window) throw std::invalid_argument("max_len must be at least the window");
  if (position_clip < 1) throw std::invalid_argument("position_clip must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must lie in [0, 1)");
  }
  if (relation_count < 2) throw std::invalid_argument("relation_count must be at least 2");
}

std::vector<std::size_t> relative_positions(std::size_t length, std::size_t span_start,
                                            std::size_t position_clip) {
  std::vector<std::size_t> out(length);
  auto clip = static_cast<long long>(position_clip);
  for (std::size_t i = 0; i < length; ++i) {
    long long offset = static_cast<long long>(i) - static_cast<long long>(span_start);
    offset = std::clamp(offset, -clip, clip);
    out[i] = static_cast<std::size_t>(offset + clip);
  }
  return out;
}

EncoderInput prepare_input(const Instance& instance, const Vocabulary& vocab,
                           const EncoderConfig& config) {
  std::size_t length = std::min(instance.tokens.size(), config.max_len);
  if (instance.head.end > length || instance.tail.end > length) {
    throw std::runtime_error("sentence of " + std::to_string(instance.tokens.size()) +
                             " tokens truncated to " + std::to_string(config.max_len) +
                             " would cut an entity span (head ends " +
                             std::to_string(instance.head.end) + ", tail ends " +
                             std::to_string(instance.tail.end) + ")");
  }
  EncoderInput input;
  input.token_ids.reserve(std::max(length, config.window));
  for (std::size_t i = 0; i < length; ++i) {
    input.token_ids.push_back(vocab.lookup(instance.tokens[i]));
  }
  while (input.token_ids.size() < config.window) {
    input.token_ids.push_back(Vocabulary::kPad);
  }
  input.head_positions =
      relative_positions(input.token_ids.size(), instance.head.start, config.position_clip);
  input.tail_positions =
      relative_positions(input.token_ids.size(), instance.tail.start, config.position_clip);
  input.head_last = instance.head.end - 1;
  input.tail_last = instance.tail.end - 1;
  return input;
}

ad::SegmentList pool_segments(std::size_t head_last, std::size_t tail_last,
                              std::size_t feature_len) {
  if (feature_len == 0) throw std::invalid_argument("feature map must be non-empty");
  std::size_t b1 = std::min(head_last, feature_len - 1);
  std::size_t b2 = std::min(tail_last, feature_len - 1);
  if (b1 > b2) std::swap(b1, b2);
  return {{0, b1 + 1}, {b1 + 1, b2 + 1}, {b2 + 1, feature_len}};
}

std::vector<double> piecewise_max_pool(const ad::Tensor& features,
                                       const ad::SegmentList& segments) {
  if (features.rank() != 2) throw std::invalid_argument("features must be a matrix");
  std::vector<double> out;
  out.reserve(features.rows() * segments.size());
  for (std::size_t f = 0; f < features.rows(); ++f) {
    for (const auto& [begin, end] : segments) {
      double best = 0.0;
      bool any = false;
      for (std::size_t i = begin; i < end && i < features.cols(); ++i) {
        if (!any || features.at2(f, i) > best) best = features.at2(f, i);
        any = true;
      }
      out.push_back(any ? best : 0.0);
    }
  }
  return out;
}

void init_encoder_params(ParamStore* store, const Vocabulary& vocab, const EncoderConfig& config,
                         std::uint64_t seed) {
  config.validate();
  if (vocab.word_dim != config.word_dim) {
    throw std::invalid_argument("vocabulary word dimension " + std::to_string(vocab.word_dim) +
                                " does not match encoder word_dim " +
                                std::to_string(config.word_dim));
  }
  store->add("embed.word", vocab.embeddings);

  auto uniform_init = [&](std::vector<std::size_t> shape, double bound, std::uint64_t tag) {
    ad::Tensor t = ad::Tensor::zeros(std::move(shape));
    Rng rng(derive_seed(seed, streams::kParamInit, tag));
    for (double& v : t.values) v = rng.uniform(-bound, bound);
    return t;
  };

  store->add("embed.pos_head", uniform_init({config.position_rows(), config.position_dim}, 0.25, 1));
  store->add("embed.pos_tail", uniform_init({config.position_rows(), config.position_dim}, 0.25, 2));

  std::size_t fan_in = config.window * config.input_dim();
  double conv_bound = std::sqrt(6.0 / double(fan_in + config.filter_count));
  store->add("conv.filters", uniform_init({config.filter_count, fan_in}, conv_bound, 3));
  store->add("conv.bias", ad::Tensor::zeros({config.filter_count}));

  double proj_bound = std::sqrt(6.0 / double(config.pooled_dim() + config.relation_count));
  store->add("proj.weight",
             uniform_init({config.relation_count, config.pooled_dim()}, proj_bound, 4));
  store->add("proj.bias", ad::Tensor::zeros({config.relation_count}));
}

ad::NodePtr encode_graph(ad::Tape& tape, const EncoderInput& input, ParamStore& params,
                         const EncoderConfig& config, const std::vector<double>* dropout_mask) {
  ad::NodePtr words = ad::gather_rows(tape, params.get("embed.word"), input.token_ids);
  ad::NodePtr head_pos = ad::gather_rows(tape, params.get("embed.pos_head"), input.head_positions);
  ad::NodePtr tail_pos = ad::gather_rows(tape, params.get("embed.pos_tail"), input.tail_positions);
  ad::NodePtr x = ad::concat_cols(tape, {words, head_pos, tail_pos});

  ad::NodePtr features =
      ad::conv1d(tape, x, params.get("conv.filters"), params.get("conv.bias"), config.window);
  std::size_t feature_len = input.token_ids.size() - config.window + 1;
  ad::NodePtr pooled = ad::segmented_max(
      tape, features, pool_segments(input.head_last, input.tail_last, feature_len));
  ad::NodePtr activated = ad::tanh(tape, pooled);
  if (dropout_mask != nullptr) {
    if (dropout_mask->size() != config.pooled_dim()) {
      throw std::invalid_argument("dropout mask has " + std::to_string(dropout_mask->size()) +
                                  " entries, pooled vector has " +
                                  std::to_string(config.pooled_dim()));
    }
    activated = ad::mask_mul(tape, activated, *dropout_mask);
  }
  return ad::affine(tape, params.get("proj.weight"), activated, params.get("proj.bias"));
}

std::vector<double> make_dropout_mask(std::size_t size, double rate, Rng* rng) {
  std::vector<double> mask(size, 0.0);
  if (rate <= 0.0) {
    std::fill(mask.begin(), mask.end(), 1.0);
    return mask;
  }
  double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask) {
    if (!rng->bernoulli(rate)) v = keep_scale;
  }
  return mask;
}

}  // namespace noisyre
