#pragma once

#include <cstddef>
#include <vector>

namespace noisyre {

struct SelectorOutput {
  std::vector<double> distribution;  // K reals, a valid distribution
  bool has_sentence = false;
  std::size_t sentence = 0;  // chosen sentence index within the bag
  bool has_relation = false;
  std::size_t relation = 0;  // chosen positive relation (positive branch only)
};

// Bag-level prediction from per-sentence true-label distributions. If every
// sentence's argmax is the no-relation label (index 0), pick the sentence
// most confident in it; otherwise pick the (sentence, positive relation)
// pair with the highest probability among sentences whose own argmax is
// positive. Either way the output is exactly that sentence's distribution.
// Ties: lowest sentence index, then lowest relation.
SelectorOutput conditional_optimal_select(const std::vector<std::vector<double>>& sentence_probs);

// Ablation: the positive branch averages the distributions of all sentences
// whose argmax is positive instead of picking one; the all-no-relation
// branch is unchanged.
SelectorOutput avg_weighted_select(const std::vector<std::vector<double>>& sentence_probs);

// Every positive relation whose best per-sentence probability reaches the
// threshold; may be empty.
std::vector<std::size_t> multi_label_predict(const std::vector<std::vector<double>>& sentence_probs,
                                             double threshold);

}  // namespace noisyre
