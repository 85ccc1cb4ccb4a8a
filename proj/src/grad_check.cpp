#include "noisyre/grad_check.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace noisyre {

namespace {

double eval_loss(const GraphBuilder& build, ParamStore& params) {
  ad::Tape tape;
  ad::NodePtr loss = build(tape);
  if (!loss || loss->value.values.size() != 1) {
    throw std::invalid_argument("gradient_check: builder must return a scalar loss");
  }
  return loss->value.values[0];
}

}  // namespace

GradCheckReport gradient_check(const GraphBuilder& build, ParamStore& params, double step,
                               double tolerance) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("gradient_check: step must be positive");
  }

  // Two independent builds must agree bitwise, otherwise finite differences
  // would measure noise as gradient error.
  double probe_a = eval_loss(build, params);
  double probe_b = eval_loss(build, params);
  if (std::memcmp(&probe_a, &probe_b, sizeof(double)) != 0) {
    throw std::runtime_error(
        "gradient_check: graph builder is nondeterministic (two builds gave different losses); "
        "freeze dropout masks before checking");
  }

  params.zero_grad();
  {
    ad::Tape tape;
    ad::NodePtr loss = build(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  report.tolerance = tolerance;

  for (const std::string& name : params.names()) {
    ad::Node& node = *params.get(name);
    GradCheckEntry entry;
    entry.name = name;
    entry.max_rel_error = -1.0;

    for (std::size_t i = 0; i < node.value.values.size(); ++i) {
      double saved = node.value.values[i];
      node.value.values[i] = saved + step;
      double up = eval_loss(build, params);
      node.value.values[i] = saved - step;
      double down = eval_loss(build, params);
      node.value.values[i] = saved;

      double numeric = (up - down) / (2.0 * step);
      double analytic = node.grad.values[i];
      double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      double rel = std::fabs(analytic - numeric) / denom;
      if (rel > entry.max_rel_error) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.analytic = analytic;
        entry.numeric = numeric;
      }
    }
    if (entry.max_rel_error < 0.0) entry.max_rel_error = 0.0;
    if (!(entry.max_rel_error < tolerance)) report.any_exceeds = true;
    report.entries.push_back(entry);
  }
  return report;
}

std::string format_report(const GradCheckReport& report) {
  std::ostringstream out;
  for (const GradCheckEntry& e : report.entries) {
    bool ok = e.max_rel_error < report.tolerance;
    out << (ok ? "ok   " : "FAIL ") << e.name << " max_rel=" << e.max_rel_error << " at ["
        << e.worst_index << "] analytic=" << e.analytic << " numeric=" << e.numeric << "\n";
  }
  out << (report.any_exceeds ? "RESULT: FAIL" : "RESULT: PASS") << " (tolerance "
      << report.tolerance << ")\n";
  return out.str();
}

}  // namespace noisyre
