#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace noisyre {

inline double log_sum_exp(std::span<const double> x) {
  double m = -HUGE_VAL;
  for (double v : x) m = std::max(m, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> x) {
  double m = -HUGE_VAL;
  for (double v : x) m = std::max(m, v);
  std::vector<double> out(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

// lowest index wins ties
inline std::size_t argmax(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

}  // namespace noisyre
