#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "lfseg/error.hpp"
#include "lfseg/point_cloud.hpp"

namespace lfseg {

/// Ordered class vocabulary. Id 0 is always "unlabeled"; the names given
/// to the constructor receive ids 1, 2, ... in order.
class LabelSet {
 public:
  static constexpr std::string_view kUnlabeledName = "unlabeled";

  LabelSet() : names_{std::string(kUnlabeledName)} {}

  explicit LabelSet(const std::vector<std::string>& class_names) : LabelSet() {
    if (class_names.size() >= 0xFFFF) throw ConfigError("label set too large for uint16 ids");
    for (const auto& name : class_names) {
      if (name.empty()) throw ConfigError("empty class name in label set");
      if (name == kUnlabeledName) throw ConfigError("\"unlabeled\" is reserved for id 0");
      if (!ids_.emplace(name, static_cast<ClassId>(names_.size())).second) {
        throw ConfigError("duplicate class name in label set: " + name);
      }
      names_.push_back(name);
    }
  }

  static LabelSet from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("label set must be a JSON array of strings");
    std::vector<std::string> names;
    for (const auto& item : j) {
      if (!item.is_string()) throw ConfigError("label set entries must be strings");
      names.push_back(item.get<std::string>());
    }
    return LabelSet(names);
  }

  static LabelSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open label set file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("label set file " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
  }

  /// Class names without the sentinel, in id order.
  nlohmann::json to_json() const {
    return nlohmann::json(std::vector<std::string>(names_.begin() + 1, names_.end()));
  }

  /// Number of ids including the sentinel; valid ids are [0, count()).
  std::size_t count() const noexcept { return names_.size(); }
  std::size_t class_count() const noexcept { return names_.size() - 1; }

  bool valid(ClassId id) const noexcept { return id < names_.size(); }

  const std::string& name(ClassId id) const {
    if (!valid(id)) throw ArgumentError("class id " + std::to_string(id) + " outside label set");
    return names_[id];
  }

  std::optional<ClassId> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  ClassId id(const std::string& name) const {
    if (auto found = find(name)) return *found;
    throw ArgumentError("unknown class name: " + name);
  }

  /// Names of all real classes (ids 1..).
  std::vector<std::string> class_names() const { return {names_.begin() + 1, names_.end()}; }

  friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassId> ids_;
};

}  // namespace lfseg
