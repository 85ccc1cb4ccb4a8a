#include "noisyre/vocab.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "noisyre/rng.hpp"

namespace noisyre {

using ad::Tensor;

std::size_t Vocabulary::lookup(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? kUnk : it->second;
}

Vocabulary Vocabulary::build(const std::vector<Instance>& instances, std::size_t word_dim,
                             std::uint64_t seed) {
  if (word_dim == 0) throw std::invalid_argument("word dimension must be positive");
  std::set<std::string> unique;
  for (const Instance& inst : instances) {
    for (const std::string& tok : inst.tokens) unique.insert(tok);
  }
  unique.erase(kPadToken);
  unique.erase(kUnkToken);

  Vocabulary vocab;
  vocab.word_dim = word_dim;
  vocab.tokens.push_back(kPadToken);
  vocab.tokens.push_back(kUnkToken);
  vocab.tokens.insert(vocab.tokens.end(), unique.begin(), unique.end());
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) vocab.index[vocab.tokens[i]] = i;

  vocab.embeddings = Tensor::zeros({vocab.tokens.size(), word_dim});
  Rng rng(derive_seed(seed, streams::kVocabInit));
  for (std::size_t row = 1; row < vocab.tokens.size(); ++row) {
    for (std::size_t col = 0; col < word_dim; ++col) {
      vocab.embeddings.at2(row, col) = rng.uniform(-0.25, 0.25);
    }
  }
  return vocab;
}

void Vocabulary::save_tokens(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (const std::string& tok : tokens) out << tok << "\n";
}

Vocabulary Vocabulary::load_tokens(const std::string& path, std::size_t word_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary vocab;
  vocab.word_dim = word_dim;
  std::string line;
  while (std::getline(in, line)) vocab.tokens.push_back(line);
  if (vocab.tokens.size() < 2 || vocab.tokens[0] != kPadToken || vocab.tokens[1] != kUnkToken) {
    throw std::runtime_error("vocabulary file " + path +
                             " must start with the padding and unknown tokens");
  }
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    auto [it, inserted] = vocab.index.emplace(vocab.tokens[i], i);
    if (!inserted) {
      throw std::runtime_error("vocabulary file " + path + " has duplicate token \"" +
                               vocab.tokens[i] + "\"");
    }
  }
  vocab.embeddings = Tensor::zeros({vocab.tokens.size(), word_dim});
  return vocab;
}

std::size_t load_pretrained_embeddings(const std::string& path, Vocabulary* vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream parts(line);
    std::string token;
    parts >> token;
    std::vector<double> values;
    double v = 0.0;
    while (parts >> v) values.push_back(v);
    if (values.size() != vocab->word_dim) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": vector has " +
                               std::to_string(values.size()) + " dimensions, vocabulary expects " +
                               std::to_string(vocab->word_dim));
    }
    auto it = vocab->index.find(token);
    if (it == vocab->index.end() || it->second == Vocabulary::kPad) continue;
    for (std::size_t col = 0; col < vocab->word_dim; ++col) {
      vocab->embeddings.at2(it->second, col) = values[col];
    }
    ++filled;
  }
  return filled;
}

}  // namespace noisyre
