#include "noisyre/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace noisyre {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key \"" + key + "\" needs an unsigned integer, got \"" +
                                value + "\"");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key \"" + key + "\" needs a real number, got \"" + value +
                                "\"");
  }
}

std::string format_real(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "corpus") corpus = value;
  else if (key == "schema") schema = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "threads") threads = parse_u64(key, value);
  else if (key == "validation_fraction") validation_fraction = parse_real(key, value);
  else if (key == "window") encoder.window = parse_u64(key, value);
  else if (key == "filters") encoder.filter_count = parse_u64(key, value);
  else if (key == "word_dim") encoder.word_dim = parse_u64(key, value);
  else if (key == "position_dim") encoder.position_dim = parse_u64(key, value);
  else if (key == "max_len") encoder.max_len = parse_u64(key, value);
  else if (key == "position_clip") encoder.position_clip = parse_u64(key, value);
  else if (key == "dropout") encoder.dropout_rate = parse_real(key, value);
  else if (key == "batch_size") trainer.batch_size = parse_u64(key, value);
  else if (key == "pretrain_epochs") trainer.pretrain_epochs = parse_u64(key, value);
  else if (key == "epochs") trainer.total_epochs = parse_u64(key, value);
  else if (key == "checkpoint_interval") trainer.checkpoint_interval = parse_u64(key, value);
  else if (key == "init_ratio") trainer.init_ratio = parse_real(key, value);
  else if (key == "ensemble_size") trainer.ensemble_size = parse_u64(key, value);
  else if (key == "max_bag_sentences") trainer.max_bag_sentences = parse_u64(key, value);
  else if (key == "learning_rate") trainer.optimizer.learning_rate = parse_real(key, value);
  else if (key == "weight_decay") trainer.optimizer.weight_decay = parse_real(key, value);
  else if (key == "w_phase2_init") {
    if (value == "ratio") w_phase2_identity = false;
    else if (value == "identity") w_phase2_identity = true;
    else {
      throw std::invalid_argument(
          "config key \"w_phase2_init\" must be \"ratio\" or \"identity\", got \"" + value +
          "\"");
    }
  } else if (key == "relations") synth.relation_count = parse_u64(key, value);
  else if (key == "vocab_size") synth.vocab_size = parse_u64(key, value);
  else if (key == "bags") synth.bag_count = parse_u64(key, value);
  else if (key == "min_sentences") synth.min_sentences = parse_u64(key, value);
  else if (key == "max_sentences") synth.max_sentences = parse_u64(key, value);
  else if (key == "rho") synth.expressive_rate = parse_real(key, value);
  else if (key == "na_fraction") synth.na_bag_fraction = parse_real(key, value);
  else {
    throw std::invalid_argument("unknown config key \"" + key + "\"");
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": expected `key = value`");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  out["corpus"] = corpus;
  out["schema"] = schema;
  out["embeddings"] = embeddings;
  out["seed"] = std::to_string(seed);
  out["threads"] = std::to_string(threads);
  out["validation_fraction"] = format_real(validation_fraction);
  out["window"] = std::to_string(encoder.window);
  out["filters"] = std::to_string(encoder.filter_count);
  out["word_dim"] = std::to_string(encoder.word_dim);
  out["position_dim"] = std::to_string(encoder.position_dim);
  out["max_len"] = std::to_string(encoder.max_len);
  out["position_clip"] = std::to_string(encoder.position_clip);
  out["dropout"] = format_real(encoder.dropout_rate);
  out["batch_size"] = std::to_string(trainer.batch_size);
  out["pretrain_epochs"] = std::to_string(trainer.pretrain_epochs);
  out["epochs"] = std::to_string(trainer.total_epochs);
  out["checkpoint_interval"] = std::to_string(trainer.checkpoint_interval);
  out["init_ratio"] = format_real(trainer.init_ratio);
  out["ensemble_size"] = std::to_string(trainer.ensemble_size);
  out["max_bag_sentences"] = std::to_string(trainer.max_bag_sentences);
  out["learning_rate"] = format_real(trainer.optimizer.learning_rate);
  out["weight_decay"] = format_real(trainer.optimizer.weight_decay);
  out["w_phase2_init"] = w_phase2_identity ? "identity" : "ratio";
  out["relations"] = std::to_string(synth.relation_count);
  out["vocab_size"] = std::to_string(synth.vocab_size);
  out["bags"] = std::to_string(synth.bag_count);
  out["min_sentences"] = std::to_string(synth.min_sentences);
  out["max_sentences"] = std::to_string(synth.max_sentences);
  out["rho"] = format_real(synth.expressive_rate);
  out["na_fraction"] = format_real(synth.na_bag_fraction);
  return out;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write resolved config: " + path);
  for (const auto& [key, value] : to_map()) out << key << " = " << value << "\n";
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg = trainer;
  cfg.seed = seed;
  cfg.phase2_from_identity = w_phase2_identity;
  return cfg;
}

}  // namespace noisyre
