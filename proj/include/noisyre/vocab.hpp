#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "noisyre/corpus.hpp"
#include "noisyre/tensor.hpp"

namespace noisyre {

// Token table plus the initial word-embedding matrix. Index 0 is padding
// (all-zero row, kept frozen by the trainer); index 1 is the unknown token.
struct Vocabulary {
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t word_dim = 0;
  ad::Tensor embeddings;  // |V| x word_dim; becomes the trainable table

  std::size_t size() const { return tokens.size(); }
  std::size_t lookup(const std::string& token) const;

  // Sorted unique corpus tokens after the two specials; non-padding rows get
  // uniform [-0.25, 0.25] values.
  static Vocabulary build(const std::vector<Instance>& instances, std::size_t word_dim,
                          std::uint64_t seed);

  // Token list only (one per line, index order); embeddings travel in
  // checkpoints.
  void save_tokens(const std::string& path) const;
  static Vocabulary load_tokens(const std::string& path, std::size_t word_dim);
};

// Overwrites embedding rows for tokens found in the file (`token v1 .. v_d`
// per line). The padding row is never touched. Returns how many vocabulary
// rows were filled from the file.
std::size_t load_pretrained_embeddings(const std::string& path, Vocabulary* vocab);

}  // namespace noisyre
