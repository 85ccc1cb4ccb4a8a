#include "noisyre/selector.hpp"

#include <stdexcept>
#include <string>

#include "noisyre/numeric.hpp"

namespace noisyre {

namespace {

void check_bag(const std::vector<std::vector<double>>& sentence_probs) {
  if (sentence_probs.empty()) throw std::invalid_argument("selector got an empty bag");
  std::size_t k = sentence_probs.front().size();
  if (k < 2) throw std::invalid_argument("selector needs K >= 2 distributions");
  for (const auto& p : sentence_probs) {
    if (p.size() != k) {
      throw std::invalid_argument("selector got distributions of mixed sizes " +
                                  std::to_string(k) + " and " + std::to_string(p.size()));
    }
  }
}

bool all_argmax_na(const std::vector<std::vector<double>>& sentence_probs) {
  for (const auto& p : sentence_probs) {
    if (argmax(p) != 0) return false;
  }
  return true;
}

SelectorOutput select_na_branch(const std::vector<std::vector<double>>& sentence_probs) {
  SelectorOutput out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < sentence_probs.size(); ++i) {
    if (sentence_probs[i][0] > sentence_probs[best][0]) best = i;
  }
  out.distribution = sentence_probs[best];
  out.has_sentence = true;
  out.sentence = best;
  return out;
}

}  // namespace

SelectorOutput conditional_optimal_select(const std::vector<std::vector<double>>& sentence_probs) {
  check_bag(sentence_probs);
  if (all_argmax_na(sentence_probs)) return select_na_branch(sentence_probs);

  // Only sentences predicted positive compete; no-relation sentences cannot
  // steal the pick however much stray positive mass they carry.
  SelectorOutput out;
  std::size_t best_sentence = 0;
  std::size_t best_relation = 1;
  double best_prob = -1.0;
  for (std::size_t i = 0; i < sentence_probs.size(); ++i) {
    if (argmax(sentence_probs[i]) == 0) continue;
    for (std::size_t k = 1; k < sentence_probs[i].size(); ++k) {
      if (sentence_probs[i][k] > best_prob) {
        best_prob = sentence_probs[i][k];
        best_sentence = i;
        best_relation = k;
      }
    }
  }
  out.distribution = sentence_probs[best_sentence];
  out.has_sentence = true;
  out.sentence = best_sentence;
  out.has_relation = true;
  out.relation = best_relation;
  return out;
}

SelectorOutput avg_weighted_select(const std::vector<std::vector<double>>& sentence_probs) {
  check_bag(sentence_probs);
  if (all_argmax_na(sentence_probs)) return select_na_branch(sentence_probs);

  SelectorOutput out;
  out.distribution.assign(sentence_probs.front().size(), 0.0);
  double positive_count = 0.0;
  for (const auto& p : sentence_probs) {
    if (argmax(p) == 0) continue;
    for (std::size_t k = 0; k < p.size(); ++k) out.distribution[k] += p[k];
    positive_count += 1.0;
  }
  for (double& v : out.distribution) v /= positive_count;

  std::size_t best_relation = 1;
  for (std::size_t k = 2; k < out.distribution.size(); ++k) {
    if (out.distribution[k] > out.distribution[best_relation]) best_relation = k;
  }
  out.has_relation = true;
  out.relation = best_relation;
  return out;
}

std::vector<std::size_t> multi_label_predict(
    const std::vector<std::vector<double>>& sentence_probs, double threshold) {
  check_bag(sentence_probs);
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("multi-label threshold must lie in (0, 1), got " +
                                std::to_string(threshold));
  }
  std::vector<std::size_t> out;
  std::size_t k_total = sentence_probs.front().size();
  for (std::size_t k = 1; k < k_total; ++k) {
    double best = 0.0;
    for (const auto& p : sentence_probs) best = std::max(best, p[k]);
    if (best >= threshold) out.push_back(k);
  }
  return out;
}

}  // namespace noisyre
