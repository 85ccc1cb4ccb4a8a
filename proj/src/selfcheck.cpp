#include "noisyre/selfcheck.hpp"

#include <cmath>
#include <cstdio>

#include "noisyre/corpus.hpp"
#include "noisyre/model.hpp"
#include "noisyre/noise.hpp"
#include "noisyre/numeric.hpp"
#include "noisyre/rng.hpp"
#include "noisyre/synth.hpp"
#include "noisyre/vocab.hpp"

namespace noisyre {

namespace {

std::string format_real(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

std::vector<double> dense_noisy_distribution(const StructuredTransition& w,
                                             const std::vector<double>& h) {
  ad::Tensor mat = dense(w);
  std::vector<double> out(h.size(), 0.0);
  for (std::size_t row = 0; row < h.size(); ++row) {
    for (std::size_t col = 0; col < h.size(); ++col) out[row] += mat.at2(row, col) * h[col];
  }
  return softmax(out);
}

}  // namespace

CheckResult check_transition_algebra(std::size_t trials, std::uint64_t seed) {
  CheckResult result{"transition-algebra", true, ""};
  Rng rng(derive_seed(seed, 101));
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::size_t k = 2 + rng.index(7);
    StructuredTransition w;
    w.first_column.resize(k);
    std::vector<double> h(k);
    for (double& v : w.first_column) v = rng.uniform(-1.5, 1.5);
    for (double& v : h) v = rng.uniform(-3.0, 3.0);

    ad::Tensor mat = dense(w);
    for (std::size_t row = 0; row < k; ++row) {
      for (std::size_t col = 0; col < k; ++col) {
        double expected = col == 0          ? w.first_column[row]
                          : (row == col ? 1.0 : 0.0);
        if (mat.at2(row, col) != expected) {
          result.passed = false;
          result.detail = "dense template mismatch at (" + std::to_string(row) + ", " +
                          std::to_string(col) + ")";
          return result;
        }
      }
    }

    std::vector<double> simplified = noisy_distribution(w, h);
    std::vector<double> via_dense = dense_noisy_distribution(w, h);
    for (std::size_t i = 0; i < k; ++i) {
      worst = std::max(worst, std::fabs(simplified[i] - via_dense[i]));
    }
  }
  result.passed = worst <= 1e-12;
  result.detail = "max |simplified - dense| = " + format_real(worst) + " over " +
                  std::to_string(trials) + " draws";
  return result;
}

CheckResult check_loss_bound(std::size_t trials, std::uint64_t seed) {
  CheckResult result{"loss-bound", true, ""};
  Rng rng(derive_seed(seed, 102));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::size_t k = 2 + rng.index(7);
    StructuredTransition w;
    w.first_column.resize(k);
    for (double& v : w.first_column) v = rng.uniform(-1.0, 1.0);

    std::vector<LogitBag> bags(1 + rng.index(4));
    for (LogitBag& bag : bags) {
      bag.label = rng.index(k);
      bag.sentence_logits.resize(1 + rng.index(4));
      for (auto& h : bag.sentence_logits) {
        h.resize(k);
        for (double& v : h) v = rng.uniform(-4.0, 4.0);
      }
    }
    double loss = bag_loss(bags, w);
    double bound = loss_lower_bound(bags, w);
    if (!(bound >= 0.0) || !(loss >= bound)) {
      result.passed = false;
      result.detail = "violation at draw " + std::to_string(trial) + ": loss " +
                      format_real(loss) + ", bound " + format_real(bound);
      return result;
    }
  }

  // two-class example: column [0.7, 0.3], logits [1, 0], observed label is
  // the positive class; compare against a direct dense-route evaluation
  StructuredTransition w2;
  w2.first_column = {0.7, 0.3};
  LogitBag bag;
  bag.label = 1;
  bag.sentence_logits = {{1.0, 0.0}};
  double loss = bag_loss({bag}, w2);
  double bound = loss_lower_bound({bag}, w2);
  std::vector<double> oracle_probs = dense_noisy_distribution(w2, bag.sentence_logits[0]);
  double oracle_loss = -std::log(oracle_probs[1]);
  if (std::fabs(loss - oracle_loss) > 1e-4 || std::fabs(loss - 0.9130152524) > 1e-4 ||
      std::fabs(bound - 0.4) > 1e-4) {
    result.passed = false;
    result.detail = "two-class example: loss " + format_real(loss) + " (oracle " +
                    format_real(oracle_loss) + "), bound " + format_real(bound);
    return result;
  }
  result.detail = std::to_string(trials) + " draws, loss >= bound >= 0 throughout";
  return result;
}

CheckResult check_inversion(std::size_t trials, std::uint64_t seed) {
  CheckResult result{"inversion-recovery", true, ""};
  Rng rng(derive_seed(seed, 103));
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::size_t k = 2 + rng.index(7);
    std::vector<double> h(k);
    do {
      h[0] = rng.uniform(-3.0, 3.0);
    } while (std::fabs(h[0]) < 0.1);
    for (std::size_t i = 1; i < k; ++i) h[i] = rng.uniform(-3.0, 3.0);

    StructuredTransition planted;
    planted.first_column.resize(k);
    double sum = 0.0;
    for (double& v : planted.first_column) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (double& v : planted.first_column) v /= sum;

    std::vector<double> target = noisy_distribution(planted, h);
    StructuredTransition recovered = invert_for_column(h, target);
    for (std::size_t i = 0; i < k; ++i) {
      worst = std::max(worst, std::fabs(recovered.first_column[i] - planted.first_column[i]));
    }
  }
  result.passed = worst <= 1e-8;
  result.detail = "max |recovered - planted| = " + format_real(worst) + " over " +
                  std::to_string(trials) + " draws";
  return result;
}

CheckResult check_small_model_gradients(std::uint64_t seed, double fd_step, double tolerance,
                                        GradCheckReport* report_out) {
  CheckResult result{"small-model-gradients", true, ""};

  SynthConfig synth_cfg;
  synth_cfg.relation_count = 5;
  synth_cfg.vocab_size = 40;
  synth_cfg.bag_count = 6;
  synth_cfg.min_sentences = 1;
  synth_cfg.max_sentences = 3;
  synth_cfg.expressive_rate = 0.5;
  synth_cfg.na_bag_fraction = 0.4;
  synth_cfg.seed = seed;
  SynthResult data = synth_generate(synth_cfg);

  EncoderConfig encoder;
  encoder.window = 3;
  encoder.filter_count = 8;
  encoder.word_dim = 16;
  encoder.position_dim = 4;
  encoder.max_len = 12;
  encoder.position_clip = 12;
  encoder.dropout_rate = 0.5;
  encoder.relation_count = 5;

  RelationSchema schema(data.relation_names);
  Vocabulary vocab = Vocabulary::build(data.instances, encoder.word_dim, seed);
  Model model(schema, vocab, encoder, seed);
  model.params.set_value("trans.col",
                         ad::Tensor::vec(init_column(0.1, schema.size()).first_column));

  std::vector<Bag> bags = group_bags(data.instances, BagMode::kTrain);
  std::vector<const Bag*> batch;
  for (const Bag& bag : bags) batch.push_back(&bag);

  // re-seeding inside the builder freezes the dropout masks across rebuilds
  std::uint64_t mask_seed = derive_seed(seed, streams::kDropout);
  GraphBuilder build = [&](ad::Tape& tape) {
    Rng dropout_rng(mask_seed);
    return batch_loss_graph(tape, model, batch, data.instances, /*use_transition=*/true,
                            &dropout_rng);
  };

  GradCheckReport report = gradient_check(build, model.params, fd_step, tolerance);
  if (report_out != nullptr) *report_out = report;
  result.passed = !report.any_exceeds;
  double worst = 0.0;
  for (const GradCheckEntry& e : report.entries) worst = std::max(worst, e.max_rel_error);
  result.detail = "max relative error " + format_real(worst) + " across " +
                  std::to_string(model.params.total_values()) + " parameter values";
  return result;
}

std::vector<CheckResult> run_selfchecks(std::size_t trials, std::uint64_t seed) {
  std::vector<CheckResult> results;
  results.push_back(check_transition_algebra(trials, seed));
  results.push_back(check_loss_bound(trials, seed));
  results.push_back(check_inversion(trials, seed));
  results.push_back(check_small_model_gradients(seed, 1e-5, 1e-4));
  return results;
}

}  // namespace noisyre
