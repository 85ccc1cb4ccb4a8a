#include "noisyre/schema.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace noisyre {

RelationSchema::RelationSchema(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw std::invalid_argument("relation schema needs NA plus at least one relation");
  }
  if (names_[0] != "NA") {
    throw std::invalid_argument("relation schema element 0 must be \"NA\", got \"" + names_[0] +
                                "\"");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw std::invalid_argument("relation schema has empty name at index " + std::to_string(i));
    }
    auto [it, inserted] = index_.emplace(names_[i], i);
    if (!inserted) {
      throw std::invalid_argument("relation schema has duplicate name \"" + names_[i] + "\"");
    }
  }
}

RelationSchema RelationSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open relation schema file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("relation schema " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array()) {
    throw std::runtime_error("relation schema " + path + " must be a JSON array of strings");
  }
  std::vector<std::string> names;
  for (const auto& item : doc) {
    if (!item.is_string()) {
      throw std::runtime_error("relation schema " + path + " must contain only strings");
    }
    names.push_back(item.get<std::string>());
  }
  return RelationSchema(std::move(names));
}

void RelationSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write relation schema file: " + path);
  nlohmann::ordered_json doc = names_;
  out << doc.dump() << "\n";
}

const std::string& RelationSchema::name(std::size_t label) const {
  if (label >= names_.size()) {
    throw std::out_of_range("relation label " + std::to_string(label) + " out of range (K=" +
                            std::to_string(names_.size()) + ")");
  }
  return names_[label];
}

std::size_t RelationSchema::label(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown relation name \"" + name + "\"");
  }
  return it->second;
}

}  // namespace noisyre
