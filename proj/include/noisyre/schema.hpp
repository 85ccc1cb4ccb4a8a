#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace noisyre {

// Relation label set. Index 0 is always the "no relation" class (named "NA"),
// so code can test `label == kNaLabel` without string compares.
class RelationSchema {
 public:
  static constexpr std::size_t kNaLabel = 0;

  // `names` element 0 must be "NA"; the rest must be unique and non-empty.
  explicit RelationSchema(std::vector<std::string> names);

  static RelationSchema load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t label) const;
  std::size_t label(const std::string& name) const;  // throws on unknown name
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace noisyre
