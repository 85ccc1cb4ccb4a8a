#pragma once

#include <cstddef>
#include <vector>

#include "noisyre/tensor.hpp"

namespace noisyre {

// K x K transition on logits, stored as its only free entries: the first
// column. The dense form has a unit diagonal everywhere except (0,0), whose
// value is first_column[0], and zeros elsewhere — noise can only turn the
// no-relation class into a positive one.
struct StructuredTransition {
  std::vector<double> first_column;
  bool trainable = false;

  std::size_t size() const { return first_column.size(); }
  static StructuredTransition identity(std::size_t k);
};

ad::Tensor dense(const StructuredTransition& w);

// noisy logits: out[0] = c[0]*h[0]; out[k] = c[k]*h[0] + h[k] for k >= 1.
std::vector<double> apply_transition(const StructuredTransition& w,
                                     const std::vector<double>& h);

std::vector<double> noisy_distribution(const StructuredTransition& w,
                                       const std::vector<double>& h);

// One training group: a shared observed label and each sentence's true-label
// logits.
struct LogitBag {
  std::size_t label = 0;
  std::vector<std::vector<double>> sentence_logits;
};

// L = -(1/G) sum_g (1/|S_g|) sum_s log p(noisy = label_g | s)
double bag_loss(const std::vector<LogitBag>& bags, const StructuredTransition& w);

// (1/G) sum_g (1/|S_g|) sum_s [max_k noisy_logit_k - noisy_logit_{label_g}];
// always in [0, bag_loss].
double loss_lower_bound(const std::vector<LogitBag>& bags, const StructuredTransition& w);

// Solves softmax(apply(W, h)) == target for the first column, picking the
// unique solution whose entries sum to 1 (the softmax is invariant to adding
// c/h[0] to the whole column, so a normalizer is required to pin one).
StructuredTransition invert_for_column(const std::vector<double>& h,
                                       const std::vector<double>& target);

// Diagnostic route through probability space: recovers logits from
// log(true_probs) + log_z_true, applies W, renormalizes. Matches
// log(noisy_distribution) on the same logits.
std::vector<double> log_space_transform(const StructuredTransition& w,
                                        const std::vector<double>& true_probs, double log_z_true);

// first_column = [1-e, e/(K-1), ..., e/(K-1)]; sums to 1.
StructuredTransition init_column(double e, std::size_t k);

}  // namespace noisyre
