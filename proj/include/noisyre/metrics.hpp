#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "noisyre/corpus.hpp"
#include "noisyre/schema.hpp"

namespace noisyre {

struct PredictionRecord {
  std::string head_id;
  std::string tail_id;
  std::size_t relation = 0;  // never the no-relation label
  double score = 0.0;
};

using GoldTriple = std::tuple<std::string, std::string, std::size_t>;
using GoldSet = std::set<GoldTriple>;

struct PrRow {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
};

// Positive (head, tail, relation) triples among the instances' observed
// labels — the held-out reference the ranking is scored against.
GoldSet build_gold_set(const std::vector<Instance>& instances);

// One record per (eval bag, positive relation) scored by the group
// distribution; descending score, ties by (head, tail, relation).
std::vector<PredictionRecord> rank_predictions(
    const std::vector<Bag>& eval_bags, const std::vector<std::vector<double>>& distributions);

// Row t holds precision and recall over the top-t records.
std::vector<PrRow> pr_curve(const std::vector<PredictionRecord>& ranking, const GoldSet& gold);

// Hits among the top-min(N, len) divided by min(N, len).
double precision_at_n(const std::vector<PredictionRecord>& ranking, const GoldSet& gold,
                      std::size_t n);

// Mean of precision-at-rank over hit ranks, normalized by |gold|.
double average_precision(const std::vector<PredictionRecord>& ranking, const GoldSet& gold);

// `recall,precision,score` CSV with a header line.
void write_pr_csv(const std::string& path, const std::vector<PrRow>& rows);

// {"p_at": {"100": ..., ...}, "average_precision": ...}
void write_metrics_json(const std::string& path, const std::vector<std::size_t>& p_at_ns,
                        const std::vector<PredictionRecord>& ranking, const GoldSet& gold);

}  // namespace noisyre
