#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "noisyre/corpus.hpp"
#include "noisyre/schema.hpp"
#include "noisyre/synth.hpp"
#include "noisyre/vocab.hpp"

using namespace noisyre;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "noisyre_test_data";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RelationSchema demo_schema() {
  return RelationSchema({"NA", "born_in", "works_for"});
}

std::string good_line(const std::string& head_id, const std::string& tail_id,
                      const std::string& relation) {
  return R"({"tokens":["a","X","b","Y"],"head":{"id":")" + head_id +
         R"(","start":1,"end":2},"tail":{"id":")" + tail_id +
         R"(","start":3,"end":4},"relation":")" + relation + R"("})";
}

}  // namespace

TEST_CASE("relation schema validates its label set") {
  RelationSchema schema = demo_schema();
  CHECK(schema.size() == 3);
  CHECK(schema.name(0) == "NA");
  CHECK(schema.label("works_for") == 2);
  CHECK(schema.has("born_in"));
  CHECK_FALSE(schema.has("unknown"));
  CHECK_THROWS_AS(schema.label("unknown"), std::invalid_argument);
  CHECK_THROWS_AS(schema.name(3), std::out_of_range);

  CHECK_THROWS_AS(RelationSchema({"born_in", "NA"}), std::invalid_argument);  // NA not first
  CHECK_THROWS_AS(RelationSchema({"NA"}), std::invalid_argument);             // no positives
  CHECK_THROWS_AS(RelationSchema({"NA", "r", "r"}), std::invalid_argument);   // duplicate
  CHECK_THROWS_AS(RelationSchema({"NA", ""}), std::invalid_argument);         // empty name
}

TEST_CASE("relation schema round-trips through its file form") {
  RelationSchema schema = demo_schema();
  fs::path path = scratch_file("schema.json");
  schema.save(path.string());
  RelationSchema loaded = RelationSchema::load(path.string());
  CHECK(loaded.names() == schema.names());
}

TEST_CASE("corpus loading: strict mode stops at the first bad line with its number") {
  fs::path path = scratch_file("strict.jsonl");
  {
    std::ofstream out(path);
    out << good_line("e1", "e2", "born_in") << "\n";
    out << "{not json}\n";
  }
  RelationSchema schema = demo_schema();
  CHECK_THROWS_WITH_AS(load_corpus(path.string(), schema, /*strict=*/true),
                       doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("corpus loading: lenient mode keeps good lines and reports the rest") {
  fs::path path = scratch_file("lenient.jsonl");
  {
    std::ofstream out(path);
    for (int i = 0; i < 4; ++i) out << good_line("e1", "e2", "born_in") << "\n";
    out << "{broken\n";  // invalid JSON
    for (int i = 0; i < 4; ++i) out << good_line("e3", "e4", "works_for") << "\n";
    // overlapping spans
    out << R"({"tokens":["a","b"],"head":{"id":"h","start":0,"end":2},)"
        << R"("tail":{"id":"t","start":1,"end":2},"relation":"NA"})" << "\n";
  }
  RelationSchema schema = demo_schema();
  LoadResult result = load_corpus(path.string(), schema, /*strict=*/false);
  CHECK(result.instances.size() == 8);
  REQUIRE(result.warnings.size() == 2);
  CHECK(result.warnings[0].find(":5:") != std::string::npos);
  CHECK(result.warnings[1].find(":10:") != std::string::npos);
  CHECK(result.warnings[1].find("overlap") != std::string::npos);
}

TEST_CASE("corpus loading rejects each malformed shape") {
  RelationSchema schema = demo_schema();
  auto loads = [&](const std::string& line) {
    fs::path path = scratch_file("one_line.jsonl");
    std::ofstream(path) << line << "\n";
    load_corpus(path.string(), schema, /*strict=*/true);
  };
  // empty tokens
  CHECK_THROWS_AS(loads(R"({"tokens":[],"head":{"id":"a","start":0,"end":1},)"
                        R"("tail":{"id":"b","start":1,"end":2},"relation":"NA"})"),
                  std::runtime_error);
  // non-string token
  CHECK_THROWS_AS(loads(R"({"tokens":["a",3],"head":{"id":"a","start":0,"end":1},)"
                        R"("tail":{"id":"b","start":1,"end":2},"relation":"NA"})"),
                  std::runtime_error);
  // empty span
  CHECK_THROWS_AS(loads(R"({"tokens":["a","b"],"head":{"id":"a","start":1,"end":1},)"
                        R"("tail":{"id":"b","start":0,"end":1},"relation":"NA"})"),
                  std::runtime_error);
  // span beyond the sentence
  CHECK_THROWS_AS(loads(R"({"tokens":["a","b"],"head":{"id":"a","start":0,"end":1},)"
                        R"("tail":{"id":"b","start":1,"end":3},"relation":"NA"})"),
                  std::runtime_error);
  // negative start is not an unsigned number
  CHECK_THROWS_AS(loads(R"({"tokens":["a","b"],"head":{"id":"a","start":-1,"end":1},)"
                        R"("tail":{"id":"b","start":1,"end":2},"relation":"NA"})"),
                  std::runtime_error);
  // unknown relation name
  CHECK_THROWS_WITH_AS(loads(good_line("a", "b", "lives_in")),
                       doctest::Contains("lives_in"), std::runtime_error);
  // unknown true_relation name
  CHECK_THROWS_AS(loads(R"({"tokens":["a","X","b","Y"],"head":{"id":"a","start":1,"end":2},)"
                        R"("tail":{"id":"b","start":3,"end":4},"relation":"NA",)"
                        R"("true_relation":"nope"})"),
                  std::runtime_error);
}

TEST_CASE("canonical corpus files survive a load/write cycle byte for byte") {
  RelationSchema schema = demo_schema();
  std::vector<Instance> instances;
  Instance a;
  a.tokens = {"the", "painter", "moved", "to", "paris"};
  a.head = {"Q1", 1, 2};
  a.tail = {"Q2", 4, 5};
  a.relation = schema.label("born_in");
  a.has_true_relation = true;
  a.true_relation = RelationSchema::kNaLabel;
  Instance b;
  b.tokens = {"x", "y"};
  b.head = {"Q3", 0, 1};
  b.tail = {"Q4", 1, 2};
  b.relation = RelationSchema::kNaLabel;
  instances = {a, b};

  fs::path first = scratch_file("round1.jsonl");
  fs::path second = scratch_file("round2.jsonl");
  write_corpus(first.string(), instances, schema);
  LoadResult loaded = load_corpus(first.string(), schema, /*strict=*/true);
  CHECK(loaded.instances.size() == 2);
  CHECK(loaded.instances[0].has_true_relation);
  CHECK(loaded.instances[0].true_relation == RelationSchema::kNaLabel);
  CHECK_FALSE(loaded.instances[1].has_true_relation);
  write_corpus(second.string(), loaded.instances, schema);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("bag grouping keys on the pair plus label for training, the pair alone for eval") {
  RelationSchema schema = demo_schema();
  auto inst = [&](const std::string& h, const std::string& t, const std::string& rel) {
    Instance x;
    x.tokens = {"a", "b"};
    x.head = {h, 0, 1};
    x.tail = {t, 1, 2};
    x.relation = schema.label(rel);
    return x;
  };
  std::vector<Instance> instances = {
      inst("e1", "e2", "born_in"), inst("e1", "e2", "works_for"), inst("e1", "e2", "born_in"),
      inst("e3", "e4", "NA"),      inst("e0", "e9", "works_for"),
  };

  std::vector<Bag> train = group_bags(instances, BagMode::kTrain);
  REQUIRE(train.size() == 4);
  // sorted by (head, tail, label)
  CHECK(train[0].head_id == "e0");
  CHECK(train[1].head_id == "e1");
  CHECK(train[1].label == schema.label("born_in"));
  CHECK(train[1].members == std::vector<std::size_t>{0, 2});
  CHECK(train[2].label == schema.label("works_for"));
  CHECK(train[2].members == std::vector<std::size_t>{1});
  CHECK(train[3].head_id == "e3");

  std::vector<Bag> eval = group_bags(instances, BagMode::kEval);
  REQUIRE(eval.size() == 3);
  CHECK(eval[1].head_id == "e1");
  CHECK(eval[1].members == std::vector<std::size_t>{0, 1, 2});

  // every train bag sits inside exactly one eval bag
  for (const Bag& tb : train) {
    std::size_t containers = 0;
    for (const Bag& eb : eval) {
      bool all_in = std::all_of(tb.members.begin(), tb.members.end(), [&](std::size_t m) {
        return std::find(eb.members.begin(), eb.members.end(), m) != eb.members.end();
      });
      if (all_in) ++containers;
    }
    CHECK(containers == 1);
  }
}

TEST_CASE("validation split separates entity pairs, not just bags") {
  auto bag = [](const std::string& h, const std::string& t, std::size_t label) {
    Bag b;
    b.head_id = h;
    b.tail_id = t;
    b.label = label;
    b.members = {0};
    return b;
  };
  std::vector<Bag> bags;
  for (int i = 0; i < 20; ++i) {
    std::string h = "h" + std::to_string(i);
    bags.push_back(bag(h, "t", 1));
    bags.push_back(bag(h, "t", 2));  // same pair, different label
  }

  std::vector<Bag> train, val;
  split_validation(bags, 0.1, 7, &train, &val);
  CHECK(train.size() + val.size() == bags.size());
  // 20 pairs * 0.1 = 2 validation pairs -> 4 bags
  CHECK(val.size() == 4);

  std::set<std::pair<std::string, std::string>> train_pairs, val_pairs;
  for (const Bag& b : train) train_pairs.emplace(b.head_id, b.tail_id);
  for (const Bag& b : val) val_pairs.emplace(b.head_id, b.tail_id);
  for (const auto& p : val_pairs) CHECK(train_pairs.count(p) == 0);

  SUBCASE("same seed reproduces the split") {
    std::vector<Bag> train2, val2;
    split_validation(bags, 0.1, 7, &train2, &val2);
    REQUIRE(val2.size() == val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      CHECK(val2[i].head_id == val[i].head_id);
      CHECK(val2[i].label == val[i].label);
    }
  }
  SUBCASE("tiny fractions still hold out at least one pair") {
    std::vector<Bag> train2, val2;
    split_validation(bags, 1e-9, 7, &train2, &val2);
    CHECK_FALSE(val2.empty());
    CHECK_FALSE(train2.empty());
  }
  SUBCASE("huge fractions still keep at least one training pair") {
    std::vector<Bag> train2, val2;
    split_validation(bags, 0.999999, 7, &train2, &val2);
    CHECK_FALSE(train2.empty());
  }
  SUBCASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(split_validation(bags, 0.0, 7, &train, &val), std::invalid_argument);
    CHECK_THROWS_AS(split_validation(bags, 1.0, 7, &train, &val), std::invalid_argument);
    std::vector<Bag> one = {bag("a", "b", 1)};
    CHECK_THROWS_AS(split_validation(one, 0.5, 7, &train, &val), std::invalid_argument);
  }
}

TEST_CASE("vocabulary build is sorted, deduplicated, and seeded") {
  std::vector<Instance> instances(2);
  instances[0].tokens = {"zebra", "apple", "apple"};
  instances[1].tokens = {"mango", "zebra"};
  Vocabulary vocab = Vocabulary::build(instances, 4, 99);

  REQUIRE(vocab.tokens.size() == 5);
  CHECK(vocab.tokens[0] == Vocabulary::kPadToken);
  CHECK(vocab.tokens[1] == Vocabulary::kUnkToken);
  CHECK(vocab.tokens[2] == "apple");
  CHECK(vocab.tokens[3] == "mango");
  CHECK(vocab.tokens[4] == "zebra");
  CHECK(vocab.lookup("mango") == 3);
  CHECK(vocab.lookup("durian") == Vocabulary::kUnk);

  // padding row is zero, the rest live in [-0.25, 0.25]
  REQUIRE(vocab.embeddings.shape == std::vector<std::size_t>{5, 4});
  for (std::size_t c = 0; c < 4; ++c) CHECK(vocab.embeddings.at2(Vocabulary::kPad, c) == 0.0);
  bool any_nonzero = false;
  for (std::size_t r = 1; r < 5; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double v = vocab.embeddings.at2(r, c);
      CHECK(std::fabs(v) <= 0.25);
      if (v != 0.0) any_nonzero = true;
    }
  }
  CHECK(any_nonzero);

  Vocabulary again = Vocabulary::build(instances, 4, 99);
  CHECK(again.embeddings.values == vocab.embeddings.values);
  Vocabulary other = Vocabulary::build(instances, 4, 100);
  CHECK(other.embeddings.values != vocab.embeddings.values);
}

TEST_CASE("vocabulary token files round-trip and are validated") {
  std::vector<Instance> instances(1);
  instances[0].tokens = {"b", "a"};
  Vocabulary vocab = Vocabulary::build(instances, 3, 1);
  fs::path path = scratch_file("vocab.txt");
  vocab.save_tokens(path.string());
  Vocabulary loaded = Vocabulary::load_tokens(path.string(), 3);
  CHECK(loaded.tokens == vocab.tokens);
  CHECK(loaded.word_dim == 3);
  CHECK(loaded.lookup("a") == vocab.lookup("a"));

  std::ofstream(path) << "not_pad\n" << Vocabulary::kUnkToken << "\na\n";
  CHECK_THROWS_AS(Vocabulary::load_tokens(path.string(), 3), std::runtime_error);
  std::ofstream(path) << Vocabulary::kPadToken << "\n" << Vocabulary::kUnkToken << "\na\na\n";
  CHECK_THROWS_AS(Vocabulary::load_tokens(path.string(), 3), std::runtime_error);
}

TEST_CASE("pretrained vectors overwrite known rows and never the padding row") {
  std::vector<Instance> instances(1);
  instances[0].tokens = {"apple", "mango"};
  Vocabulary vocab = Vocabulary::build(instances, 2, 5);
  std::vector<double> pad_before = {vocab.embeddings.at2(0, 0), vocab.embeddings.at2(0, 1)};
  double mango_before = vocab.embeddings.at2(vocab.lookup("mango"), 0);

  fs::path path = scratch_file("vectors.txt");
  std::ofstream(path) << "apple 1.5 -2.5\n"
                      << "unlisted 9 9\n"
                      << "<pad> 7 7\n";
  std::size_t filled = load_pretrained_embeddings(path.string(), &vocab);
  CHECK(filled == 1);
  CHECK(vocab.embeddings.at2(vocab.lookup("apple"), 0) == 1.5);
  CHECK(vocab.embeddings.at2(vocab.lookup("apple"), 1) == -2.5);
  CHECK(vocab.embeddings.at2(0, 0) == pad_before[0]);
  CHECK(vocab.embeddings.at2(0, 1) == pad_before[1]);
  CHECK(vocab.embeddings.at2(vocab.lookup("mango"), 0) == mango_before);

  std::ofstream(path) << "apple 1 2 3\n";
  CHECK_THROWS_WITH_AS(load_pretrained_embeddings(path.string(), &vocab),
                       doctest::Contains("3"), std::runtime_error);
}

TEST_CASE("synthetic corpora plant controllable label noise") {
  SynthConfig cfg;
  cfg.relation_count = 4;
  cfg.vocab_size = 60;
  cfg.bag_count = 200;
  cfg.min_sentences = 1;
  cfg.max_sentences = 4;
  cfg.na_bag_fraction = 0.3;
  cfg.seed = 11;

  SUBCASE("every sentence in a fully expressive corpus carries its bag label") {
    cfg.expressive_rate = 1.0;
    SynthResult r = synth_generate(cfg);
    for (const Instance& inst : r.instances) {
      REQUIRE(inst.has_true_relation);
      if (inst.relation != RelationSchema::kNaLabel) CHECK(inst.true_relation == inst.relation);
    }
  }
  SUBCASE("a never-expressive corpus is pure noise: observed positives, true NA") {
    cfg.expressive_rate = 0.0;
    SynthResult r = synth_generate(cfg);
    bool saw_positive_observed = false;
    for (const Instance& inst : r.instances) {
      CHECK(inst.true_relation == RelationSchema::kNaLabel);
      if (inst.relation != RelationSchema::kNaLabel) saw_positive_observed = true;
    }
    CHECK(saw_positive_observed);
  }
  SUBCASE("expressive fraction tracks the configured rate") {
    cfg.expressive_rate = 0.5;
    cfg.bag_count = 600;
    SynthResult r = synth_generate(cfg);
    std::size_t positive = 0, expressive = 0;
    for (const Instance& inst : r.instances) {
      if (inst.relation == RelationSchema::kNaLabel) continue;
      ++positive;
      if (inst.true_relation == inst.relation) ++expressive;
    }
    REQUIRE(positive > 200);
    double rate = double(expressive) / double(positive);
    // three-sigma band around 0.5 for a binomial draw
    double sigma = std::sqrt(0.25 / double(positive));
    CHECK(std::fabs(rate - 0.5) <= 3.0 * sigma);
  }
  SUBCASE("bag structure: NA count is exact and observed labels are bag-constant") {
    cfg.expressive_rate = 0.5;
    SynthResult r = synth_generate(cfg);
    CHECK(r.relation_names.size() == 4);
    CHECK(r.relation_names[0] == "NA");
    std::vector<Bag> bags = group_bags(r.instances, BagMode::kTrain);
    std::set<std::pair<std::string, std::string>> pairs;
    std::size_t na_bags = 0;
    for (const Bag& bag : bags) {
      pairs.emplace(bag.head_id, bag.tail_id);
      if (bag.label == RelationSchema::kNaLabel) ++na_bags;
      for (std::size_t m : bag.members) CHECK(r.instances[m].relation == bag.label);
      CHECK(bag.members.size() >= cfg.min_sentences);
      CHECK(bag.members.size() <= cfg.max_sentences);
    }
    // one observed label per generated pair -> bag count equals pair count
    CHECK(pairs.size() == cfg.bag_count);
    CHECK(bags.size() == cfg.bag_count);
    CHECK(na_bags == 60);  // round(0.3 * 200)
  }
  SUBCASE("generation is deterministic and writes loadable corpora") {
    cfg.expressive_rate = 0.5;
    SynthResult r1 = synth_generate(cfg);
    SynthResult r2 = synth_generate(cfg);
    REQUIRE(r1.instances.size() == r2.instances.size());
    for (std::size_t i = 0; i < r1.instances.size(); ++i) {
      CHECK(r1.instances[i].tokens == r2.instances[i].tokens);
      CHECK(r1.instances[i].relation == r2.instances[i].relation);
      CHECK(r1.instances[i].true_relation == r2.instances[i].true_relation);
    }
    RelationSchema schema(r1.relation_names);
    fs::path path = scratch_file("synth.jsonl");
    write_corpus(path.string(), r1.instances, schema);
    LoadResult loaded = load_corpus(path.string(), schema, /*strict=*/true);
    CHECK(loaded.instances.size() == r1.instances.size());
    CHECK(loaded.warnings.empty());
  }
  SUBCASE("bad knob values are rejected") {
    SynthConfig bad = cfg;
    bad.relation_count = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.min_sentences = 3;
    bad.max_sentences = 2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.expressive_rate = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.bag_count = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
