#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kstream/errors.hpp"
#include "kstream/message.hpp"

namespace kstream {

// Per-attribute bijection text <-> CategoryId, ids handed out densely from 0
// in first-seen order.
class CategoryDictionary {
 public:
  static constexpr std::size_t kDefaultMaxCardinality = 100000;

  explicit CategoryDictionary(std::size_t max_cardinality = kDefaultMaxCardinality)
      : max_cardinality_(max_cardinality) {}

  CategoryId id_for(const std::string& attr, const std::string& value) {
    auto& table = tables_[attr];
    if (auto it = table.ids.find(value); it != table.ids.end()) return it->second;
    if (table.values.size() >= max_cardinality_) {
      throw CardinalityExceeded("attribute '" + attr + "' exceeds " +
                                std::to_string(max_cardinality_) + " distinct values");
    }
    CategoryId id{static_cast<std::uint32_t>(table.values.size())};
    table.ids.emplace(value, id);
    table.values.push_back(value);
    return id;
  }

  const std::string& decode(const std::string& attr, CategoryId id) const {
    auto it = tables_.find(attr);
    if (it == tables_.end() || id.value >= it->second.values.size()) {
      throw UnknownCategory("no category " + std::to_string(id.value) + " for '" + attr + "'");
    }
    return it->second.values[id.value];
  }

  std::size_t size(const std::string& attr) const {
    auto it = tables_.find(attr);
    return it == tables_.end() ? 0 : it->second.values.size();
  }

  // attribute,id,value per line, attributes in name order.
  void dump(std::ostream& out) const {
    for (const auto& [attr, table] : tables_) {
      for (std::size_t i = 0; i < table.values.size(); ++i) {
        out << attr << ',' << i << ',' << table.values[i] << '\n';
      }
    }
  }

 private:
  struct Table {
    std::unordered_map<std::string, CategoryId> ids;
    std::vector<std::string> values;
  };

  std::size_t max_cardinality_;
  std::map<std::string, Table, std::less<>> tables_;
};

// Replaces Text values of the named attributes by their category ids. A
// Number in a categorized attribute is a configuration error.
inline Message encode(Message msg, CategoryDictionary& dict, std::span<const std::string> attrs) {
  for (const auto& attr : attrs) {
    AttributeValue* v = msg.attributes.find(attr);
    if (v == nullptr || v->is_category()) continue;
    if (v->is_number()) {
      throw TypeMismatch("categorized attribute '" + attr + "' holds a number");
    }
    *v = dict.id_for(attr, v->text());
  }
  return msg;
}

inline const std::string& decode(const std::string& attr, CategoryId id,
                                 const CategoryDictionary& dict) {
  return dict.decode(attr, id);
}

}  // namespace kstream
