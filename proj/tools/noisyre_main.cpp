#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "noisyre/grad_check.hpp"
#include "noisyre/metrics.hpp"
#include "noisyre/model.hpp"
#include "noisyre/numeric.hpp"
#include "noisyre/run_config.hpp"
#include "noisyre/selfcheck.hpp"
#include "noisyre/synth.hpp"
#include "noisyre/trainer.hpp"

namespace fs = std::filesystem;
using namespace noisyre;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 3;

// flag text routed through RunConfig::set so file values and flags get the
// same parsing and the same precedence handling
struct FlagOverrides {
  CLI::App* cmd = nullptr;
  std::deque<std::string> storage;  // stable addresses for CLI11 bindings
  std::vector<std::string> keys;
  std::vector<std::string> flag_names;

  void add(const std::vector<std::pair<std::string, std::string>>& options) {
    for (const auto& [flag, key] : options) {
      storage.emplace_back();
      cmd->add_option(flag, storage.back());
      keys.push_back(key);
      flag_names.push_back(flag);
    }
  }
  void apply(RunConfig* cfg) const {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (cmd->count(flag_names[i]) > 0) cfg->set(keys[i], storage[i]);
    }
  }
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw std::invalid_argument("no " + what + " path given");
  }
  if (!fs::exists(path)) {
    throw std::invalid_argument(what + " file does not exist: " + path);
  }
}

std::string run_dir_override(const std::string& flag_value) {
  const char* env = std::getenv("NOISYRE_RUN_DIR");
  if (env != nullptr && *env != '\0') return env;
  return flag_value;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<fs::path> list_checkpoints(const fs::path& run_dir) {
  std::vector<fs::path> found;
  fs::path dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) return found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("step_", 0) == 0) {
      found.push_back(entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

struct LoadedRun {
  RunConfig config;
  std::vector<Model> models;
};

// Rebuilds models from a training run directory: resolved config, schema,
// vocabulary, then either one named checkpoint or the last n.
LoadedRun load_run_models(const std::string& run_dir_flag, const std::string& checkpoint_flag,
                          std::size_t ensemble_last) {
  fs::path run_dir = run_dir_flag;
  require_file((run_dir / "config.resolved").string(), "resolved config");
  require_file((run_dir / "schema.json").string(), "schema");
  require_file((run_dir / "vocab.txt").string(), "vocabulary");

  LoadedRun out;
  out.config.load_file((run_dir / "config.resolved").string());
  RelationSchema schema = RelationSchema::load((run_dir / "schema.json").string());
  Vocabulary vocab =
      Vocabulary::load_tokens((run_dir / "vocab.txt").string(), out.config.encoder.word_dim);
  EncoderConfig encoder = out.config.encoder;
  encoder.relation_count = schema.size();

  std::vector<fs::path> dirs;
  if (!checkpoint_flag.empty()) {
    if (!fs::is_directory(checkpoint_flag)) {
      throw CheckpointMismatchError("checkpoint directory does not exist: " + checkpoint_flag);
    }
    dirs.push_back(checkpoint_flag);
  } else {
    std::vector<fs::path> all = list_checkpoints(run_dir);
    if (all.empty()) {
      throw CheckpointMismatchError("no checkpoints found under " +
                                    (run_dir / "checkpoints").string());
    }
    std::size_t n = std::min(ensemble_last, all.size());
    dirs.assign(all.end() - static_cast<std::ptrdiff_t>(n), all.end());
  }
  for (const fs::path& dir : dirs) {
    out.models.push_back(load_model_from_checkpoint(schema, vocab, encoder, dir));
  }
  return out;
}

int cmd_train(const RunConfig& cfg_in, const std::string& out_flag, bool strict) {
  RunConfig cfg = cfg_in;
  require_file(cfg.corpus, "corpus");
  require_file(cfg.schema, "schema");
  if (cfg.threads > 1) {
    std::cerr << "note: --threads " << cfg.threads
              << " requested; running single-threaded for bitwise reproducibility\n";
  }

  RelationSchema schema = RelationSchema::load(cfg.schema);
  LoadResult loaded = load_corpus(cfg.corpus, schema, strict);
  print_warnings(loaded.warnings);
  if (loaded.instances.empty()) {
    throw std::invalid_argument("corpus " + cfg.corpus + " has no usable instances");
  }

  cfg.encoder.relation_count = schema.size();
  cfg.encoder.validate();

  Vocabulary vocab = Vocabulary::build(loaded.instances, cfg.encoder.word_dim, cfg.seed);
  if (!cfg.embeddings.empty()) {
    require_file(cfg.embeddings, "embeddings");
    std::size_t filled = load_pretrained_embeddings(cfg.embeddings, &vocab);
    std::cerr << "loaded pretrained vectors for " << filled << " of " << vocab.size()
              << " tokens\n";
  }

  std::vector<Bag> all_bags = group_bags(loaded.instances, BagMode::kTrain);
  std::vector<Bag> train_bags;
  std::vector<Bag> val_bags;
  split_validation(all_bags, cfg.validation_fraction, cfg.seed, &train_bags, &val_bags);

  std::vector<std::string> encode_warnings;
  train_bags = filter_encodable(train_bags, loaded.instances, vocab, cfg.encoder,
                                &encode_warnings);
  val_bags = filter_encodable(val_bags, loaded.instances, vocab, cfg.encoder, &encode_warnings);
  print_warnings(encode_warnings);

  fs::path run_dir = run_dir_override(out_flag);
  fs::create_directories(run_dir);
  cfg.save((run_dir / "config.resolved").string());
  schema.save((run_dir / "schema.json").string());
  vocab.save_tokens((run_dir / "vocab.txt").string());

  Model model(schema, vocab, cfg.encoder, cfg.seed);
  TrainResult result =
      train(model, train_bags, val_bags, loaded.instances, cfg.train_config(), run_dir);
  print_warnings(result.warnings);

  const CheckpointRecord& best = result.checkpoints[result.best_index];
  std::cout << "run directory: " << run_dir.string() << "\n"
            << "checkpoints: " << result.checkpoints.size() << "\n"
            << "best: " << best.path << " (step " << best.step << ", validation accuracy "
            << best.val_accuracy << ")\n";
  return 0;
}

int cmd_eval(const std::string& run_flag, const std::string& checkpoint_flag,
             std::size_t ensemble_last, const std::string& corpus_flag,
             const std::string& selector, const std::string& out_flag, bool strict) {
  if (selector != "cond_opt" && selector != "avg_weighted") {
    throw std::invalid_argument("--selector must be cond_opt or avg_weighted, got " + selector);
  }
  LoadedRun run = load_run_models(run_flag, checkpoint_flag, ensemble_last);
  require_file(corpus_flag, "corpus");

  RelationSchema& schema = run.models.front().schema;
  LoadResult loaded = load_corpus(corpus_flag, schema, strict);
  print_warnings(loaded.warnings);

  std::vector<Bag> eval_bags = group_bags(loaded.instances, BagMode::kEval);
  std::vector<std::string> encode_warnings;
  eval_bags = filter_encodable(eval_bags, loaded.instances, run.models.front().vocab,
                               run.models.front().config, &encode_warnings);
  print_warnings(encode_warnings);
  if (eval_bags.empty()) {
    throw std::invalid_argument("corpus " + corpus_flag + " produced no evaluable bags");
  }

  GoldSet gold = build_gold_set(loaded.instances);
  if (gold.empty()) {
    throw std::invalid_argument("corpus " + corpus_flag +
                                " has no positive triples to score against");
  }

  std::vector<SelectorOutput> outputs = ensemble_predict(
      run.models, eval_bags, loaded.instances, selector == "avg_weighted");
  std::vector<std::vector<double>> distributions;
  distributions.reserve(outputs.size());
  for (SelectorOutput& out : outputs) distributions.push_back(std::move(out.distribution));

  std::vector<PredictionRecord> ranking = rank_predictions(eval_bags, distributions);

  fs::path out_dir = run_dir_override(out_flag.empty() ? (fs::path(run_flag) / "eval").string()
                                                       : out_flag);
  fs::create_directories(out_dir);
  write_pr_csv((out_dir / "pr_curve.csv").string(), pr_curve(ranking, gold));
  write_metrics_json((out_dir / "metrics.json").string(), {100, 200, 300}, ranking, gold);

  std::cout << "models: " << run.models.size() << "\n"
            << "eval bags: " << eval_bags.size() << ", gold triples: " << gold.size() << "\n"
            << "average precision: " << average_precision(ranking, gold) << "\n"
            << "wrote " << (out_dir / "pr_curve.csv").string() << " and "
            << (out_dir / "metrics.json").string() << "\n";
  return 0;
}

int cmd_predict(const std::string& run_flag, const std::string& checkpoint_flag,
                std::size_t ensemble_last, const std::string& corpus_flag,
                const std::string& selector, const std::string& out_flag, double threshold,
                bool strict) {
  if (selector != "cond_opt" && selector != "avg_weighted") {
    throw std::invalid_argument("--selector must be cond_opt or avg_weighted, got " + selector);
  }
  LoadedRun run = load_run_models(run_flag, checkpoint_flag, ensemble_last);
  require_file(corpus_flag, "corpus");

  RelationSchema& schema = run.models.front().schema;
  LoadResult loaded = load_corpus(corpus_flag, schema, strict);
  print_warnings(loaded.warnings);

  std::vector<Bag> bags = group_bags(loaded.instances, BagMode::kEval);
  std::vector<std::string> encode_warnings;
  bags = filter_encodable(bags, loaded.instances, run.models.front().vocab,
                          run.models.front().config, &encode_warnings);
  print_warnings(encode_warnings);

  std::vector<SelectorOutput> outputs =
      ensemble_predict(run.models, bags, loaded.instances, selector == "avg_weighted");

  fs::path out_path =
      out_flag.empty() ? fs::path(run_flag) / "predictions.jsonl" : fs::path(out_flag);
  const char* env = std::getenv("NOISYRE_RUN_DIR");
  if (env != nullptr && *env != '\0' && out_flag.empty()) {
    out_path = fs::path(env) / "predictions.jsonl";
    fs::create_directories(env);
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write predictions file: " + out_path.string());

  for (std::size_t b = 0; b < bags.size(); ++b) {
    const std::vector<double>& dist = outputs[b].distribution;
    std::size_t top = argmax(dist);
    nlohmann::ordered_json line;
    line["head"] = bags[b].head_id;
    line["tail"] = bags[b].tail_id;
    line["relation"] = schema.name(top);
    line["probability"] = dist[top];

    std::vector<std::vector<double>> sentence_dists;
    {
      std::vector<std::vector<double>> per_model_mean(
          bags[b].members.size(), std::vector<double>(schema.size(), 0.0));
      for (Model& m : run.models) {
        auto dists = bag_true_probs(m, bags[b], loaded.instances);
        for (std::size_t s = 0; s < dists.size(); ++s) {
          for (std::size_t j = 0; j < schema.size(); ++j) per_model_mean[s][j] += dists[s][j];
        }
      }
      for (auto& d : per_model_mean) {
        for (double& v : d) v /= double(run.models.size());
      }
      sentence_dists = std::move(per_model_mean);
    }
    nlohmann::ordered_json positives = nlohmann::ordered_json::array();
    for (std::size_t k : multi_label_predict(sentence_dists, threshold)) {
      positives.push_back(schema.name(k));
    }
    line["positive_relations"] = positives;
    out << line.dump() << "\n";
  }
  std::cout << "wrote " << outputs.size() << " predictions to " << out_path.string() << "\n";
  return 0;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_path,
              const std::string& schema_out_path) {
  SynthConfig synth_cfg = cfg.synth;
  synth_cfg.seed = cfg.seed;
  SynthResult data = synth_generate(synth_cfg);
  RelationSchema schema(data.relation_names);
  write_corpus(out_path, data.instances, schema);
  schema.save(schema_out_path);
  std::cout << "wrote " << data.instances.size() << " instances across " << synth_cfg.bag_count
            << " bags to " << out_path << "\n"
            << "wrote schema (" << schema.size() << " labels) to " << schema_out_path << "\n";
  return 0;
}

int cmd_selfcheck(std::size_t trials, std::uint64_t seed) {
  std::vector<CheckResult> results = run_selfchecks(trials, seed);
  bool all_passed = true;
  for (const CheckResult& r : results) {
    std::cout << (r.passed ? "[ ok ] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all_passed = all_passed && r.passed;
  }
  std::cout << (all_passed ? "all checks passed" : "CHECKS FAILED") << "\n";
  return all_passed ? 0 : 1;
}

int cmd_grad_check(std::uint64_t seed, double step, double tolerance) {
  GradCheckReport report;
  CheckResult result = check_small_model_gradients(seed, step, tolerance, &report);
  std::cout << format_report(report);
  return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distant-supervision relation extraction toolkit"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a model on a bag-grouped corpus");
  FlagOverrides train_flags;
  train_flags.cmd = train_cmd;
  train_flags.add({{"--corpus", "corpus"},
                   {"--schema", "schema"},
                   {"--embeddings", "embeddings"},
                   {"--seed", "seed"},
                   {"--threads", "threads"},
                   {"--val-fraction", "validation_fraction"},
                   {"--window", "window"},
                   {"--filters", "filters"},
                   {"--word-dim", "word_dim"},
                   {"--position-dim", "position_dim"},
                   {"--max-len", "max_len"},
                   {"--position-clip", "position_clip"},
                   {"--dropout", "dropout"},
                   {"--batch-size", "batch_size"},
                   {"--pretrain-epochs", "pretrain_epochs"},
                   {"--epochs", "epochs"},
                   {"--checkpoint-interval", "checkpoint_interval"},
                   {"--init-ratio", "init_ratio"},
                   {"--ensemble-size", "ensemble_size"},
                   {"--max-bag-sentences", "max_bag_sentences"},
                   {"--lr", "learning_rate"},
                   {"--weight-decay", "weight_decay"},
                   {"--w-phase2-init", "w_phase2_init"}});
  std::string train_config_path;
  std::string train_out = "run";
  bool train_strict = false;
  train_cmd->add_option("--config", train_config_path, "key = value config file");
  train_cmd->add_option("--out", train_out, "run directory (NOISYRE_RUN_DIR overrides)");
  train_cmd->add_flag("--strict", train_strict, "fail on malformed corpus lines");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "held-out evaluation of checkpoints");
  std::string eval_run;
  std::string eval_checkpoint;
  std::size_t eval_ensemble_last = 1;
  std::string eval_corpus;
  std::string eval_selector = "cond_opt";
  std::string eval_out;
  bool eval_strict = false;
  eval_cmd->add_option("--run", eval_run, "training run directory")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "explicit checkpoint directory");
  eval_cmd->add_option("--ensemble-last", eval_ensemble_last,
                       "average the last N checkpoints (default 1)");
  eval_cmd->add_option("--corpus", eval_corpus, "held-out test corpus")->required();
  eval_cmd->add_option("--selector", eval_selector, "cond_opt | avg_weighted");
  eval_cmd->add_option("--out", eval_out, "output directory (default <run>/eval)");
  eval_cmd->add_flag("--strict", eval_strict, "fail on malformed corpus lines");

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand("predict", "write per-bag predictions as JSONL");
  std::string pred_run;
  std::string pred_checkpoint;
  std::size_t pred_ensemble_last = 1;
  std::string pred_corpus;
  std::string pred_selector = "cond_opt";
  std::string pred_out;
  double pred_threshold = 0.5;
  bool pred_strict = false;
  predict_cmd->add_option("--run", pred_run, "training run directory")->required();
  predict_cmd->add_option("--checkpoint", pred_checkpoint, "explicit checkpoint directory");
  predict_cmd->add_option("--ensemble-last", pred_ensemble_last,
                          "average the last N checkpoints (default 1)");
  predict_cmd->add_option("--corpus", pred_corpus, "corpus to predict on")->required();
  predict_cmd->add_option("--selector", pred_selector, "cond_opt | avg_weighted");
  predict_cmd->add_option("--out", pred_out, "output file (default <run>/predictions.jsonl)");
  predict_cmd->add_option("--multi-label-threshold", pred_threshold,
                          "threshold for the positive-relation list");
  predict_cmd->add_flag("--strict", pred_strict, "fail on malformed corpus lines");

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate a planted-truth synthetic corpus");
  FlagOverrides synth_flags;
  synth_flags.cmd = synth_cmd;
  synth_flags.add({{"--relations", "relations"},
                   {"--vocab-size", "vocab_size"},
                   {"--bags", "bags"},
                   {"--min-sentences", "min_sentences"},
                   {"--max-sentences", "max_sentences"},
                   {"--rho", "rho"},
                   {"--na-fraction", "na_fraction"},
                   {"--seed", "seed"}});
  std::string synth_config_path;
  std::string synth_out = "synth.jsonl";
  std::string synth_schema_out = "rel_schema.json";
  synth_cmd->add_option("--config", synth_config_path, "key = value config file");
  synth_cmd->add_option("--out", synth_out, "corpus output path");
  synth_cmd->add_option("--schema-out", synth_schema_out, "schema output path");

  // ---- selfcheck ----
  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "run the built-in property checks");
  std::size_t selfcheck_trials = 1000;
  std::uint64_t selfcheck_seed = 0;
  selfcheck_cmd->add_option("--trials", selfcheck_trials, "random draws per property");
  selfcheck_cmd->add_option("--seed", selfcheck_seed, "base seed");

  // ---- grad-check ----
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient check");
  std::uint64_t grad_seed = 0;
  double grad_step = 1e-5;
  double grad_tolerance = 1e-4;
  grad_cmd->add_option("--seed", grad_seed, "base seed");
  grad_cmd->add_option("--step", grad_step, "finite-difference step");
  grad_cmd->add_option("--tolerance", grad_tolerance, "max relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      RunConfig cfg;
      if (!train_config_path.empty()) {
        require_file(train_config_path, "config");
        cfg.load_file(train_config_path);
      }
      train_flags.apply(&cfg);
      return cmd_train(cfg, train_out, train_strict);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_run, eval_checkpoint, eval_ensemble_last, eval_corpus, eval_selector,
                      eval_out, eval_strict);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(pred_run, pred_checkpoint, pred_ensemble_last, pred_corpus,
                         pred_selector, pred_out, pred_threshold, pred_strict);
    }
    if (synth_cmd->parsed()) {
      RunConfig cfg;
      if (!synth_config_path.empty()) {
        require_file(synth_config_path, "config");
        cfg.load_file(synth_config_path);
      }
      synth_flags.apply(&cfg);
      return cmd_synth(cfg, synth_out, synth_schema_out);
    }
    if (selfcheck_cmd->parsed()) return cmd_selfcheck(selfcheck_trials, selfcheck_seed);
    if (grad_cmd->parsed()) return cmd_grad_check(grad_seed, grad_step, grad_tolerance);
  } catch (const CheckpointMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
