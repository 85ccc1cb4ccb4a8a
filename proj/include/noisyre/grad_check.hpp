#pragma once

#include <functional>
#include <string>
#include <vector>

#include "noisyre/param_store.hpp"

namespace noisyre {

// Builds the scalar loss on the given tape from the store's leaves. Must be
// deterministic: live dropout has to be frozen before checking.
using GraphBuilder = std::function<ad::NodePtr(ad::Tape&)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;
  bool any_exceeds = false;  // an entry passes iff max_rel_error < tolerance
};

// Central finite differences against the reverse-mode gradient for every
// parameter in the store. Relative error uses max(|analytic|, |numeric|,
// 1e-6) as the denominator so near-zero gradients compare absolutely.
GradCheckReport gradient_check(const GraphBuilder& build, ParamStore& params, double step,
                               double tolerance);

std::string format_report(const GradCheckReport& report);

}  // namespace noisyre
