#include "noisyre/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "noisyre/rng.hpp"

namespace noisyre {

namespace {

EntityMention parse_mention(const nlohmann::json& obj, const char* field, std::size_t n_tokens) {
  if (!obj.contains(field) || !obj[field].is_object()) {
    throw std::runtime_error(std::string("missing or non-object \"") + field + "\" field");
  }
  const nlohmann::json& m = obj[field];
  if (!m.contains("id") || !m["id"].is_string()) {
    throw std::runtime_error(std::string(field) + ".id missing or not a string");
  }
  if (!m.contains("start") || !m["start"].is_number_unsigned() || !m.contains("end") ||
      !m["end"].is_number_unsigned()) {
    throw std::runtime_error(std::string(field) + " span must have unsigned start/end");
  }
  EntityMention out;
  out.id = m["id"].get<std::string>();
  out.start = m["start"].get<std::size_t>();
  out.end = m["end"].get<std::size_t>();
  if (out.start >= out.end || out.end > n_tokens) {
    throw std::runtime_error(std::string(field) + " span [" + std::to_string(out.start) + ", " +
                             std::to_string(out.end) + ") invalid for " +
                             std::to_string(n_tokens) + " tokens");
  }
  return out;
}

Instance parse_line(const std::string& line, const RelationSchema& schema) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw std::runtime_error("line is not a JSON object");
  if (!obj.contains("tokens") || !obj["tokens"].is_array() || obj["tokens"].empty()) {
    throw std::runtime_error("\"tokens\" must be a non-empty array");
  }
  Instance inst;
  for (const auto& tok : obj["tokens"]) {
    if (!tok.is_string()) throw std::runtime_error("\"tokens\" must contain only strings");
    inst.tokens.push_back(tok.get<std::string>());
  }
  inst.head = parse_mention(obj, "head", inst.tokens.size());
  inst.tail = parse_mention(obj, "tail", inst.tokens.size());
  if (inst.head.start < inst.tail.end && inst.tail.start < inst.head.end) {
    throw std::runtime_error("head and tail spans overlap");
  }
  if (!obj.contains("relation") || !obj["relation"].is_string()) {
    throw std::runtime_error("\"relation\" missing or not a string");
  }
  std::string rel = obj["relation"].get<std::string>();
  if (!schema.has(rel)) {
    throw std::runtime_error("unknown relation label \"" + rel + "\"");
  }
  inst.relation = schema.label(rel);
  if (obj.contains("true_relation")) {
    if (!obj["true_relation"].is_string()) {
      throw std::runtime_error("\"true_relation\" must be a string");
    }
    std::string true_rel = obj["true_relation"].get<std::string>();
    if (!schema.has(true_rel)) {
      throw std::runtime_error("unknown relation label \"" + true_rel + "\" in true_relation");
    }
    inst.has_true_relation = true;
    inst.true_relation = schema.label(true_rel);
  }
  return inst;
}

}  // namespace

LoadResult load_corpus(const std::string& path, const RelationSchema& schema, bool strict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      result.instances.push_back(parse_line(line, schema));
    } catch (const std::runtime_error& e) {
      std::string msg = path + ":" + std::to_string(line_no) + ": " + e.what();
      if (strict) throw std::runtime_error(msg);
      result.warnings.push_back(msg);
    }
  }
  return result;
}

void write_corpus(const std::string& path, const std::vector<Instance>& instances,
                  const RelationSchema& schema) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const Instance& inst : instances) {
    nlohmann::ordered_json obj;
    obj["tokens"] = inst.tokens;
    obj["head"] = {{"id", inst.head.id}, {"start", inst.head.start}, {"end", inst.head.end}};
    obj["tail"] = {{"id", inst.tail.id}, {"start", inst.tail.start}, {"end", inst.tail.end}};
    obj["relation"] = schema.name(inst.relation);
    if (inst.has_true_relation) obj["true_relation"] = schema.name(inst.true_relation);
    out << obj.dump() << "\n";
  }
}

std::vector<Bag> group_bags(const std::vector<Instance>& instances, BagMode mode) {
  using Key = std::tuple<std::string, std::string, std::size_t>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    std::size_t label_part = mode == BagMode::kTrain ? inst.relation : 0;
    groups[Key(inst.head.id, inst.tail.id, label_part)].push_back(i);
  }
  std::vector<Bag> bags;
  bags.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    Bag bag;
    bag.head_id = std::get<0>(key);
    bag.tail_id = std::get<1>(key);
    bag.label = std::get<2>(key);
    bag.members = members;
    bags.push_back(std::move(bag));
  }
  return bags;
}

void split_validation(const std::vector<Bag>& bags, double fraction, std::uint64_t seed,
                      std::vector<Bag>* train_out, std::vector<Bag>* validation_out) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1), got " +
                                std::to_string(fraction));
  }
  std::set<std::pair<std::string, std::string>> pair_set;
  for (const Bag& bag : bags) pair_set.emplace(bag.head_id, bag.tail_id);
  if (pair_set.size() < 2) {
    throw std::invalid_argument("validation split needs at least 2 distinct entity pairs, got " +
                                std::to_string(pair_set.size()));
  }
  std::vector<std::pair<std::string, std::string>> pairs(pair_set.begin(), pair_set.end());

  auto n_val_raw = static_cast<std::size_t>(std::llround(fraction * double(pairs.size())));
  std::size_t n_val = std::clamp<std::size_t>(n_val_raw, 1, pairs.size() - 1);

  Rng rng(derive_seed(seed, streams::kSplit));
  rng.shuffle(pairs);

  std::set<std::pair<std::string, std::string>> val_pairs(pairs.begin(), pairs.begin() + n_val);
  train_out->clear();
  validation_out->clear();
  for (const Bag& bag : bags) {
    if (val_pairs.count({bag.head_id, bag.tail_id})) {
      validation_out->push_back(bag);
    } else {
      train_out->push_back(bag);
    }
  }
}

}  // namespace noisyre
