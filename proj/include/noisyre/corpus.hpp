#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "noisyre/schema.hpp"

namespace noisyre {

struct EntityMention {
  std::string id;
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
};

// One labeled sentence. `relation` is the observed (possibly noisy) label;
// `true_relation` is only present in synthetic corpora with planted truth.
struct Instance {
  std::vector<std::string> tokens;
  EntityMention head;
  EntityMention tail;
  std::size_t relation = 0;
  bool has_true_relation = false;
  std::size_t true_relation = 0;
};

// Indices into the instance list; all members share (head_id, tail_id) and,
// for training bags, the observed label.
struct Bag {
  std::string head_id;
  std::string tail_id;
  std::size_t label = 0;  // meaningful for training bags only
  std::vector<std::size_t> members;
};

enum class BagMode { kTrain, kEval };

struct LoadResult {
  std::vector<Instance> instances;
  std::vector<std::string> warnings;  // lenient mode only
};

// Reads JSONL; in strict mode any malformed line throws with its line number,
// otherwise bad lines are skipped and reported as warnings.
LoadResult load_corpus(const std::string& path, const RelationSchema& schema, bool strict);

// Canonical compact JSONL with fixed key order; loading then writing a
// canonical file is byte-identical.
void write_corpus(const std::string& path, const std::vector<Instance>& instances,
                  const RelationSchema& schema);

// Train mode keys by (head_id, tail_id, relation); eval mode by the pair
// alone. Output is sorted by key so iteration order is reproducible.
std::vector<Bag> group_bags(const std::vector<Instance>& instances, BagMode mode);

// Entity-pair-level split: no pair lands on both sides. Validation size is
// round(fraction * pairs) clamped to [1, pairs - 1].
void split_validation(const std::vector<Bag>& bags, double fraction, std::uint64_t seed,
                      std::vector<Bag>* train_out, std::vector<Bag>* validation_out);

}  // namespace noisyre
