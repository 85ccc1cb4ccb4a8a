#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisyre/grad_check.hpp"

namespace noisyre {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Simplified transition algebra equals the dense matrix route within 1e-12;
// the dense form always matches the structured template exactly.
CheckResult check_transition_algebra(std::size_t trials, std::uint64_t seed);

// bag_loss >= loss_lower_bound >= 0 on random draws, plus the hand-derived
// two-class example against an independent direct evaluation.
CheckResult check_loss_bound(std::size_t trials, std::uint64_t seed);

// Planted sum-to-1 columns with |h_1| >= 0.1 are recovered from the noisy
// distribution within 1e-8.
CheckResult check_inversion(std::size_t trials, std::uint64_t seed);

// Full finite-difference gradient check of the batch loss on a small model
// (frozen dropout masks). Also returns the underlying report.
CheckResult check_small_model_gradients(std::uint64_t seed, double fd_step, double tolerance,
                                        GradCheckReport* report_out = nullptr);

std::vector<CheckResult> run_selfchecks(std::size_t trials, std::uint64_t seed);

}  // namespace noisyre
