#include "noisyre/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace noisyre {

GoldSet build_gold_set(const std::vector<Instance>& instances) {
  GoldSet gold;
  for (const Instance& inst : instances) {
    if (inst.relation == RelationSchema::kNaLabel) continue;
    gold.emplace(inst.head.id, inst.tail.id, inst.relation);
  }
  return gold;
}

std::vector<PredictionRecord> rank_predictions(
    const std::vector<Bag>& eval_bags, const std::vector<std::vector<double>>& distributions) {
  if (eval_bags.size() != distributions.size()) {
    throw std::invalid_argument("rank_predictions got " + std::to_string(eval_bags.size()) +
                                " bags but " + std::to_string(distributions.size()) +
                                " distributions");
  }
  std::vector<PredictionRecord> records;
  for (std::size_t b = 0; b < eval_bags.size(); ++b) {
    const std::vector<double>& dist = distributions[b];
    for (std::size_t k = 1; k < dist.size(); ++k) {
      PredictionRecord rec;
      rec.head_id = eval_bags[b].head_id;
      rec.tail_id = eval_bags[b].tail_id;
      rec.relation = k;
      rec.score = dist[k];
      if (!std::isfinite(rec.score)) {
        throw std::invalid_argument("non-finite prediction score for pair (" + rec.head_id +
                                    ", " + rec.tail_id + ")");
      }
      records.push_back(std::move(rec));
    }
  }
  std::sort(records.begin(), records.end(),
            [](const PredictionRecord& a, const PredictionRecord& b) {
              if (a.score != b.score) return a.score > b.score;
              return std::tie(a.head_id, a.tail_id, a.relation) <
                     std::tie(b.head_id, b.tail_id, b.relation);
            });
  return records;
}

std::vector<PrRow> pr_curve(const std::vector<PredictionRecord>& ranking, const GoldSet& gold) {
  if (gold.empty()) throw std::invalid_argument("pr_curve needs a non-empty gold set");
  std::vector<PrRow> rows;
  rows.reserve(ranking.size());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < ranking.size(); ++t) {
    const PredictionRecord& rec = ranking[t];
    if (gold.count(GoldTriple(rec.head_id, rec.tail_id, rec.relation))) ++hits;
    PrRow row;
    row.precision = double(hits) / double(t + 1);
    row.recall = double(hits) / double(gold.size());
    row.score = rec.score;
    rows.push_back(row);
  }
  return rows;
}

double precision_at_n(const std::vector<PredictionRecord>& ranking, const GoldSet& gold,
                      std::size_t n) {
  if (n < 1) throw std::invalid_argument("precision_at_n needs N >= 1");
  if (ranking.empty()) throw std::invalid_argument("precision_at_n got an empty ranking");
  std::size_t top = std::min(n, ranking.size());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < top; ++t) {
    const PredictionRecord& rec = ranking[t];
    if (gold.count(GoldTriple(rec.head_id, rec.tail_id, rec.relation))) ++hits;
  }
  return double(hits) / double(top);
}

double average_precision(const std::vector<PredictionRecord>& ranking, const GoldSet& gold) {
  if (gold.empty()) throw std::invalid_argument("average_precision needs a non-empty gold set");
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t t = 0; t < ranking.size(); ++t) {
    const PredictionRecord& rec = ranking[t];
    if (gold.count(GoldTriple(rec.head_id, rec.tail_id, rec.relation))) {
      ++hits;
      total += double(hits) / double(t + 1);
    }
  }
  return total / double(gold.size());
}

void write_pr_csv(const std::string& path, const std::vector<PrRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write PR curve file: " + path);
  out << "recall,precision,score\n";
  char buffer[128];
  for (const PrRow& row : rows) {
    std::snprintf(buffer, sizeof(buffer), "%.17g,%.17g,%.17g\n", row.recall, row.precision,
                  row.score);
    out << buffer;
  }
}

void write_metrics_json(const std::string& path, const std::vector<std::size_t>& p_at_ns,
                        const std::vector<PredictionRecord>& ranking, const GoldSet& gold) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json p_at = nlohmann::ordered_json::object();
  for (std::size_t n : p_at_ns) {
    p_at[std::to_string(n)] = ranking.empty() ? 0.0 : precision_at_n(ranking, gold, n);
  }
  doc["p_at"] = p_at;
  doc["average_precision"] = average_precision(ranking, gold);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace noisyre
