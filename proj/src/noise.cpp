#include "noisyre/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyre/numeric.hpp"

namespace noisyre {

using ad::Tensor;

namespace {

void check_k(const StructuredTransition& w, const std::vector<double>& h) {
  if (w.size() < 2) throw std::invalid_argument("transition needs K >= 2");
  if (w.size() != h.size()) {
    throw std::invalid_argument("transition size " + std::to_string(w.size()) +
                                " does not match logit size " + std::to_string(h.size()));
  }
}

}  // namespace

StructuredTransition StructuredTransition::identity(std::size_t k) {
  StructuredTransition w;
  w.first_column.assign(k, 0.0);
  w.first_column[0] = 1.0;
  return w;
}

Tensor dense(const StructuredTransition& w) {
  std::size_t k = w.size();
  if (k < 2) throw std::invalid_argument("transition needs K >= 2");
  Tensor out = Tensor::zeros({k, k});
  for (std::size_t row = 0; row < k; ++row) {
    out.at2(row, 0) = w.first_column[row];
    if (row != 0) out.at2(row, row) = 1.0;
  }
  return out;
}

std::vector<double> apply_transition(const StructuredTransition& w,
                                     const std::vector<double>& h) {
  check_k(w, h);
  std::vector<double> out(h.size());
  out[0] = w.first_column[0] * h[0];
  for (std::size_t k = 1; k < h.size(); ++k) out[k] = w.first_column[k] * h[0] + h[k];
  return out;
}

std::vector<double> noisy_distribution(const StructuredTransition& w,
                                       const std::vector<double>& h) {
  return softmax(apply_transition(w, h));
}

double bag_loss(const std::vector<LogitBag>& bags, const StructuredTransition& w) {
  if (bags.empty()) throw std::invalid_argument("bag_loss needs at least one bag");
  double total = 0.0;
  for (const LogitBag& bag : bags) {
    if (bag.sentence_logits.empty()) throw std::invalid_argument("bag_loss got an empty bag");
    if (bag.label >= w.size()) {
      throw std::invalid_argument("bag label " + std::to_string(bag.label) +
                                  " out of range for K=" + std::to_string(w.size()));
    }
    double bag_total = 0.0;
    for (const std::vector<double>& h : bag.sentence_logits) {
      std::vector<double> noisy = apply_transition(w, h);
      bag_total += log_sum_exp(noisy) - noisy[bag.label];
    }
    total += bag_total / double(bag.sentence_logits.size());
  }
  return total / double(bags.size());
}

double loss_lower_bound(const std::vector<LogitBag>& bags, const StructuredTransition& w) {
  if (bags.empty()) throw std::invalid_argument("loss_lower_bound needs at least one bag");
  double total = 0.0;
  for (const LogitBag& bag : bags) {
    if (bag.sentence_logits.empty()) {
      throw std::invalid_argument("loss_lower_bound got an empty bag");
    }
    if (bag.label >= w.size()) {
      throw std::invalid_argument("bag label " + std::to_string(bag.label) +
                                  " out of range for K=" + std::to_string(w.size()));
    }
    double bag_total = 0.0;
    for (const std::vector<double>& h : bag.sentence_logits) {
      std::vector<double> noisy = apply_transition(w, h);
      double top = *std::max_element(noisy.begin(), noisy.end());
      bag_total += top - noisy[bag.label];
    }
    total += bag_total / double(bag.sentence_logits.size());
  }
  return total / double(bags.size());
}

StructuredTransition invert_for_column(const std::vector<double>& h,
                                       const std::vector<double>& target) {
  if (h.size() < 2) throw std::invalid_argument("invert_for_column needs K >= 2");
  if (h.size() != target.size()) {
    throw std::invalid_argument("logits and target distribution sizes differ: " +
                                std::to_string(h.size()) + " vs " +
                                std::to_string(target.size()));
  }
  if (std::fabs(h[0]) < 1e-6) {
    throw std::invalid_argument(
        "invert_for_column: first logit too close to zero (|h_1| < 1e-6), the column is "
        "unidentifiable");
  }
  double sum_log_target = 0.0;
  for (double t : target) {
    if (!(t > 0.0)) {
      throw std::invalid_argument("invert_for_column: target entries must all be positive");
    }
    sum_log_target += std::log(t);
  }
  // Column entries are w_k = (ln target_k + c - h_k [k != 0]) / h_0; the shift
  // c is fixed by requiring the column to sum to 1.
  double sum_h_rest = 0.0;
  for (std::size_t k = 1; k < h.size(); ++k) sum_h_rest += h[k];
  double c = (h[0] + sum_h_rest - sum_log_target) / double(h.size());

  StructuredTransition w;
  w.first_column.resize(h.size());
  w.first_column[0] = (std::log(target[0]) + c) / h[0];
  for (std::size_t k = 1; k < h.size(); ++k) {
    w.first_column[k] = (std::log(target[k]) + c - h[k]) / h[0];
  }
  return w;
}

std::vector<double> log_space_transform(const StructuredTransition& w,
                                        const std::vector<double>& true_probs,
                                        double log_z_true) {
  if (w.size() != true_probs.size()) {
    throw std::invalid_argument("transition size " + std::to_string(w.size()) +
                                " does not match distribution size " +
                                std::to_string(true_probs.size()));
  }
  std::vector<double> h(true_probs.size());
  for (std::size_t k = 0; k < true_probs.size(); ++k) {
    if (!(true_probs[k] > 0.0)) {
      throw std::invalid_argument("log_space_transform: probabilities must all be positive");
    }
    h[k] = std::log(true_probs[k]) + log_z_true;
  }
  std::vector<double> noisy = apply_transition(w, h);
  double log_z_noisy = log_sum_exp(noisy);
  for (double& v : noisy) v -= log_z_noisy;
  return noisy;
}

StructuredTransition init_column(double e, std::size_t k) {
  if (!(e > 0.0 && e < 1.0)) {
    throw std::invalid_argument("init ratio must lie in (0, 1), got " + std::to_string(e));
  }
  if (k < 2) throw std::invalid_argument("init_column needs K >= 2");
  StructuredTransition w;
  w.first_column.assign(k, e / double(k - 1));
  w.first_column[0] = 1.0 - e;
  return w;
}

}  // namespace noisyre
