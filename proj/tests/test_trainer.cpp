#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "noisyre/model.hpp"
#include "noisyre/numeric.hpp"
#include "noisyre/rng.hpp"
#include "noisyre/synth.hpp"
#include "noisyre/trainer.hpp"

using namespace noisyre;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  SynthResult data;
  RelationSchema schema;
  Vocabulary vocab;
  EncoderConfig config;
  std::vector<Bag> train_bags;
  std::vector<Bag> validation_bags;
};

EncoderConfig small_encoder(std::size_t relation_count) {
  EncoderConfig cfg;
  cfg.window = 3;
  cfg.filter_count = 4;
  cfg.word_dim = 8;
  cfg.position_dim = 2;
  cfg.max_len = 12;
  cfg.position_clip = 12;
  cfg.dropout_rate = 0.5;
  cfg.relation_count = relation_count;
  return cfg;
}

Fixture make_fixture(std::uint64_t seed, double na_fraction = 0.4) {
  SynthConfig synth;
  synth.relation_count = 3;
  synth.vocab_size = 30;
  synth.bag_count = 14;
  synth.min_sentences = 1;
  synth.max_sentences = 2;
  synth.expressive_rate = 0.6;
  synth.na_bag_fraction = na_fraction;
  synth.seed = seed;

  SynthResult data = synth_generate(synth);
  RelationSchema schema(data.relation_names);
  Vocabulary vocab = Vocabulary::build(data.instances, 8, seed);
  std::vector<Bag> bags = group_bags(data.instances, BagMode::kTrain);
  Fixture fx{std::move(data), schema, std::move(vocab), small_encoder(schema.size()), {}, {}};
  split_validation(bags, 0.2, seed, &fx.train_bags, &fx.validation_bags);
  return fx;
}

fs::path fresh_run_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("noisyre_test_run_" + name);
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = ss.str();
  }
  return files;
}

std::vector<const Bag*> all_bags(const std::vector<Bag>& bags) {
  std::vector<const Bag*> out;
  for (const Bag& b : bags) out.push_back(&b);
  return out;
}

}  // namespace

TEST_CASE("the transition column sits outside the graph until fine-tuning") {
  Fixture fx = make_fixture(21);
  Model model(fx.schema, fx.vocab, fx.config, 21);

  ad::Tape tape;
  ad::NodePtr loss = batch_loss_graph(tape, model, all_bags(fx.train_bags), fx.data.instances,
                                      /*use_transition=*/false, nullptr);
  model.params.zero_grad();
  tape.backward(loss);
  for (double g : model.params.get("trans.col")->grad.values) CHECK(g == 0.0);
  // some real parameter did receive gradient
  double conv_grad = 0.0;
  for (double g : model.params.get("conv.filters")->grad.values) conv_grad += std::fabs(g);
  CHECK(conv_grad > 0.0);
}

TEST_CASE("an identity transition changes nothing, bit for bit") {
  Fixture fx = make_fixture(22);
  Model model(fx.schema, fx.vocab, fx.config, 22);
  std::vector<const Bag*> batch = all_bags(fx.train_bags);

  ad::Tape tape_plain;
  double plain = batch_loss_graph(tape_plain, model, batch, fx.data.instances, false, nullptr)
                     ->value.scalar_value();
  ad::Tape tape_ident;
  double with_identity =
      batch_loss_graph(tape_ident, model, batch, fx.data.instances, true, nullptr)
          ->value.scalar_value();
  CHECK(plain == with_identity);
}

TEST_CASE("training runs both phases and re-initializes the transition column") {
  Fixture fx = make_fixture(23);
  Model model(fx.schema, fx.vocab, fx.config, 23);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.pretrain_epochs = 1;
  cfg.total_epochs = 2;
  cfg.checkpoint_interval = 2;
  cfg.seed = 23;

  fs::path run_dir = fresh_run_dir("phases");
  TrainResult result = train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg,
                             run_dir);
  REQUIRE_FALSE(result.checkpoints.empty());
  CHECK(result.checkpoints.front().phase == "pretrain");
  CHECK(result.checkpoints.back().phase == "finetune");
  for (std::size_t i = 1; i < result.checkpoints.size(); ++i) {
    CHECK(result.checkpoints[i].step > result.checkpoints[i - 1].step);
  }
  CHECK(result.best_index < result.checkpoints.size());

  // after fine-tuning the column is trainable and has left the identity
  CHECK(model.params.trainable("trans.col"));
  StructuredTransition identity = StructuredTransition::identity(fx.schema.size());
  CHECK(model.transition().first_column != identity.first_column);

  // log lines mirror the checkpoint records
  std::ifstream log(run_dir / "train_log.jsonl");
  REQUIRE(bool(log));
  std::string line;
  std::size_t n_lines = 0;
  while (std::getline(log, line)) {
    nlohmann::json doc = nlohmann::json::parse(line);
    CHECK(doc.contains("step"));
    CHECK(doc.contains("epoch"));
    CHECK((doc["phase"] == "pretrain" || doc["phase"] == "finetune"));
    CHECK(doc.contains("loss"));
    CHECK(doc.contains("val_accuracy"));
    CHECK(doc["path"].get<std::string>().rfind("checkpoints/step_", 0) == 0);
    ++n_lines;
  }
  CHECK(n_lines == result.checkpoints.size());

  std::ifstream best(run_dir / "best_checkpoint.txt");
  std::string best_path;
  REQUIRE(std::getline(best, best_path));
  CHECK(best_path == result.checkpoints[result.best_index].path);
  fs::remove_all(run_dir);
}

TEST_CASE("a pretrain-only schedule leaves the transition column frozen at the identity") {
  Fixture fx = make_fixture(24);
  Model model(fx.schema, fx.vocab, fx.config, 24);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.pretrain_epochs = 2;
  cfg.total_epochs = 2;
  cfg.checkpoint_interval = 100;  // forces only the final fallback checkpoint
  cfg.seed = 24;

  fs::path run_dir = fresh_run_dir("pretrain_only");
  TrainResult result = train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg,
                             run_dir);
  REQUIRE(result.checkpoints.size() == 1);
  CHECK(result.checkpoints.front().phase == "pretrain");
  CHECK_FALSE(model.params.trainable("trans.col"));
  CHECK(model.params.adam_steps("trans.col") == 0);
  StructuredTransition identity = StructuredTransition::identity(fx.schema.size());
  CHECK(model.transition().first_column == identity.first_column);
  fs::remove_all(run_dir);
}

TEST_CASE("two runs with one seed produce byte-identical logs and checkpoints") {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.pretrain_epochs = 1;
  cfg.total_epochs = 2;
  cfg.checkpoint_interval = 3;
  cfg.seed = 77;

  fs::path dir_a = fresh_run_dir("repro_a");
  fs::path dir_b = fresh_run_dir("repro_b");
  {
    Fixture fx = make_fixture(77);
    Model model(fx.schema, fx.vocab, fx.config, 77);
    train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg, dir_a);
  }
  {
    Fixture fx = make_fixture(77);
    Model model(fx.schema, fx.vocab, fx.config, 77);
    train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg, dir_b);
  }
  std::map<std::string, std::string> tree_a = read_tree(dir_a);
  std::map<std::string, std::string> tree_b = read_tree(dir_b);
  REQUIRE_FALSE(tree_a.empty());
  CHECK(tree_a == tree_b);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("a reloaded checkpoint reproduces its recorded validation accuracy") {
  Fixture fx = make_fixture(31);
  Model model(fx.schema, fx.vocab, fx.config, 31);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.pretrain_epochs = 1;
  cfg.total_epochs = 2;
  cfg.checkpoint_interval = 2;
  cfg.seed = 31;

  fs::path run_dir = fresh_run_dir("reload");
  TrainResult result = train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg,
                             run_dir);
  const CheckpointRecord& record = result.checkpoints[result.best_index];
  Model loaded =
      load_model_from_checkpoint(fx.schema, fx.vocab, fx.config, run_dir / record.path);
  CHECK(validate(loaded, fx.validation_bags, fx.data.instances) == record.val_accuracy);

  SUBCASE("a mismatched relation schema is refused") {
    RelationSchema wide({"NA", "rel_1", "rel_2", "rel_3"});
    SynthConfig synth;
    synth.relation_count = 4;
    synth.vocab_size = 30;
    synth.bag_count = 4;
    synth.seed = 31;
    SynthResult wide_data = synth_generate(synth);
    Vocabulary wide_vocab = Vocabulary::build(wide_data.instances, 8, 31);
    CHECK_THROWS_AS(load_model_from_checkpoint(wide, wide_vocab, small_encoder(4),
                                               run_dir / record.path),
                    CheckpointMismatchError);
  }
  fs::remove_all(run_dir);
}

TEST_CASE("repeated steps on one batch drive the loss down") {
  int improved = 0;
  for (std::uint64_t seed : {41, 42, 43}) {
    Fixture fx = make_fixture(seed);
    Model model(fx.schema, fx.vocab, fx.config, seed);
    std::vector<const Bag*> batch = all_bags(fx.train_bags);
    OptimizerConfig opt;
    opt.learning_rate = 0.01;

    double first = 0.0, last = 0.0;
    for (int step = 0; step < 50; ++step) {
      ad::Tape tape;
      ad::NodePtr loss =
          batch_loss_graph(tape, model, batch, fx.data.instances, false, nullptr);
      last = loss->value.scalar_value();
      if (step == 0) first = last;
      model.params.zero_grad();
      tape.backward(loss);
      model.params.adam_step(opt);
    }
    if (last < first) ++improved;
  }
  CHECK(improved >= 2);
}

TEST_CASE("ensembles of checkpoints average sentence distributions") {
  Fixture fx = make_fixture(51);
  Model model(fx.schema, fx.vocab, fx.config, 51);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.pretrain_epochs = 1;
  cfg.total_epochs = 2;
  cfg.checkpoint_interval = 2;
  cfg.seed = 51;
  fs::path run_dir = fresh_run_dir("ensemble");
  TrainResult result = train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg,
                             run_dir);
  REQUIRE(result.checkpoints.size() >= 2);

  auto load_at = [&](std::size_t i) {
    return load_model_from_checkpoint(fx.schema, fx.vocab, fx.config,
                                      run_dir / result.checkpoints[i].path);
  };

  std::vector<Model> single;
  single.push_back(load_at(0));
  std::vector<SelectorOutput> base =
      ensemble_predict(single, fx.validation_bags, fx.data.instances, false);

  SUBCASE("two copies of one checkpoint equal the single model exactly") {
    std::vector<Model> twins;
    twins.push_back(load_at(0));
    twins.push_back(load_at(0));
    std::vector<SelectorOutput> doubled =
        ensemble_predict(twins, fx.validation_bags, fx.data.instances, false);
    REQUIRE(doubled.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(doubled[i].distribution == base[i].distribution);
      CHECK(doubled[i].sentence == base[i].sentence);
    }
  }
  SUBCASE("model order does not matter") {
    std::vector<Model> ab, ba;
    ab.push_back(load_at(0));
    ab.push_back(load_at(result.checkpoints.size() - 1));
    ba.push_back(load_at(result.checkpoints.size() - 1));
    ba.push_back(load_at(0));
    std::vector<SelectorOutput> fwd =
        ensemble_predict(ab, fx.validation_bags, fx.data.instances, false);
    std::vector<SelectorOutput> rev =
        ensemble_predict(ba, fx.validation_bags, fx.data.instances, false);
    REQUIRE(fwd.size() == rev.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      CHECK(fwd[i].distribution == rev[i].distribution);
    }
  }
  SUBCASE("the averaged-selector flag switches selectors") {
    std::vector<SelectorOutput> avg =
        ensemble_predict(single, fx.validation_bags, fx.data.instances, true);
    REQUIRE(avg.size() == fx.validation_bags.size());
    for (const SelectorOutput& out : avg) {
      double total = 0.0;
      for (double v : out.distribution) total += v;
      CHECK(std::fabs(total - 1.0) <= 1e-9);
    }
  }
  SUBCASE("relation-count disagreement is a checkpoint mismatch") {
    SynthConfig synth;
    synth.relation_count = 4;
    synth.vocab_size = 30;
    synth.bag_count = 6;
    synth.seed = 51;
    SynthResult wide_data = synth_generate(synth);
    RelationSchema wide(wide_data.relation_names);
    Vocabulary wide_vocab = Vocabulary::build(wide_data.instances, 8, 51);
    std::vector<Model> mixed;
    mixed.push_back(load_at(0));
    mixed.emplace_back(wide, wide_vocab, small_encoder(4), 51);
    CHECK_THROWS_AS(ensemble_predict(mixed, fx.validation_bags, fx.data.instances, false),
                    CheckpointMismatchError);
  }
  fs::remove_all(run_dir);
}

TEST_CASE("a non-finite loss aborts training with a diagnostic") {
  Fixture fx = make_fixture(61, /*na_fraction=*/1.0);  // every bag labeled 0
  Model model(fx.schema, fx.vocab, fx.config, 61);
  // rig the projection bias so label 0's logit underflows against label 1's
  ad::Tensor bias = model.params.get("proj.bias")->value;
  bias.at(0) = -1e308;
  bias.at(1) = 1e308;
  model.params.set_value("proj.bias", bias);

  TrainConfig cfg;
  cfg.batch_size = 64;  // one batch covers every bag
  cfg.pretrain_epochs = 1;
  cfg.total_epochs = 1;
  cfg.checkpoint_interval = 1;
  cfg.seed = 61;
  fs::path run_dir = fresh_run_dir("diverge");
  CHECK_THROWS_WITH_AS(
      train(model, fx.train_bags, fx.validation_bags, fx.data.instances, cfg, run_dir),
      doctest::Contains("diverged"), std::runtime_error);
  fs::remove_all(run_dir);
}

TEST_CASE("unencodable sentences are filtered out with warnings") {
  Fixture fx = make_fixture(71);
  // an instance whose tail lies beyond the encoder's max_len
  Instance longest;
  longest.tokens.assign(20, "filler");
  longest.head = {"far_h", 0, 1};
  longest.tail = {"far_t", 18, 19};
  longest.relation = 1;
  std::vector<Instance> instances = fx.data.instances;
  instances.push_back(longest);

  Bag doomed;
  doomed.head_id = "far_h";
  doomed.tail_id = "far_t";
  doomed.label = 1;
  doomed.members = {instances.size() - 1};
  std::vector<Bag> bags = fx.train_bags;
  bags.push_back(doomed);

  std::vector<std::string> warnings;
  std::vector<Bag> kept = filter_encodable(bags, instances, fx.vocab, fx.config, &warnings);
  CHECK(kept.size() == bags.size() - 1);
  REQUIRE(warnings.size() == 2);  // the sentence, then the emptied bag
  CHECK(warnings[0].find("far_h") != std::string::npos);
  CHECK(warnings[1].find("no encodable sentences") != std::string::npos);
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.pretrain_epochs = 5;
  cfg.total_epochs = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.init_ratio = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  CHECK_NOTHROW(cfg.validate());
}
