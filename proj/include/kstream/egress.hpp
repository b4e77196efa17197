#pragma once

#include <string>

#include "kstream/castle.hpp"
#include "kstream/categorizer.hpp"
#include "kstream/config.hpp"
#include "kstream/record.hpp"

namespace kstream {

// One egress record. Non-QI attributes pass through verbatim, the identifier
// attribute is dropped, numeric QIs become {"min","max"} and categorized QIs
// {"categories":[...]} (ids, or original strings when `decode_with` is set).
inline std::string format_release(const ReleasedTuple& r, const AnonConfig& cfg,
                                  const CategoryDictionary* decode_with = nullptr) {
  const auto& qis = cfg.quasi_identifiers;
  Json doc = Json::object();
  for (const auto& [name, value] : r.message.attributes) {
    if (cfg.identifier_attribute && name == *cfg.identifier_attribute) continue;
    auto qi = std::find(qis.begin(), qis.end(), name);
    if (qi == qis.end()) {
      doc[name] = value_to_json(value);
      continue;
    }
    const QiRange& range = r.gen.ranges[static_cast<std::size_t>(qi - qis.begin())];
    if (const auto* iv = std::get_if<Interval>(&range)) {
      doc[name] = Json{{"min", number_to_json(iv->lo)}, {"max", number_to_json(iv->hi)}};
    } else {
      Json ids = Json::array();
      for (CategoryId id : std::get<CategorySet>(range)) {
        if (decode_with != nullptr) {
          ids.push_back(decode_with->decode(name, id));
        } else {
          ids.push_back(id.value);
        }
      }
      doc[name] = Json{{"categories", std::move(ids)}};
    }
  }
  doc["_cluster"] = r.cluster_id;
  doc["_suppressed"] = r.suppressed;
  return doc.dump();
}

}  // namespace kstream
