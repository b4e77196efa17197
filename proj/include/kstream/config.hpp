#pragma once

// Configuration document:
//
//   {
//     "anonymization": {
//       "k": 5, "delta": 200, "beta": 50, "mu": 100,
//       "quasi_identifiers": ["station_id", "vehicle_model"],
//       "sensitive_attribute": "energy_kwh",
//       "identifier_attribute": "person_id",           (optional)
//       "non_categorized_attributes": ["vehicle_model"]  (optional)
//     },
//     "reduction": [ {"type": "suppress", ...}, ... ]     (optional)
//   }
//
// Rule shapes, keyed by "type":
//   suppress            {"attributes": [name...]}
//   allow / deny        {"attribute": name, "values": [number|string...]}
//   range               {"attribute": name, "min": x, "max": y}
//   conditional_change  {"match_attribute": name,
//                        "condition": {"equals": "text"} | {"min": x, "max": y},
//                        "target_attribute": name, "new_value": number|string}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kstream/errors.hpp"
#include "kstream/message.hpp"
#include "kstream/record.hpp"

namespace kstream {

struct AnonConfig {
  std::uint32_t k = 1;
  std::uint32_t delta = 1;
  std::uint32_t beta = 1;
  std::uint32_t mu = 1;
  std::vector<std::string> quasi_identifiers;
  std::string sensitive_attribute;
  std::optional<std::string> identifier_attribute;
  std::vector<std::string> non_categorized_attributes;

  bool is_categorized(std::string_view qi) const {
    return std::find(non_categorized_attributes.begin(), non_categorized_attributes.end(),
                     qi) != non_categorized_attributes.end();
  }

  friend bool operator==(const AnonConfig&, const AnonConfig&) = default;
};

struct Suppress {
  std::vector<std::string> attributes;
  friend bool operator==(const Suppress&, const Suppress&) = default;
};

struct AllowFilter {
  std::string attribute;
  std::vector<AttributeValue> values;
  friend bool operator==(const AllowFilter&, const AllowFilter&) = default;
};

struct DenyFilter {
  std::string attribute;
  std::vector<AttributeValue> values;
  friend bool operator==(const DenyFilter&, const DenyFilter&) = default;
};

// Closed interval [min, max].
struct RangeFilter {
  std::string attribute;
  double min = 0;
  double max = 0;
  friend bool operator==(const RangeFilter&, const RangeFilter&) = default;
};

struct TextEquals {
  std::string text;
  friend bool operator==(const TextEquals&, const TextEquals&) = default;
};

struct NumericRange {
  double min = 0;
  double max = 0;
  friend bool operator==(const NumericRange&, const NumericRange&) = default;
};

struct ConditionalChange {
  std::string match_attribute;
  std::variant<TextEquals, NumericRange> condition;
  std::string target_attribute;
  AttributeValue new_value;
  friend bool operator==(const ConditionalChange&, const ConditionalChange&) = default;
};

using ReductionRule =
    std::variant<Suppress, AllowFilter, DenyFilter, RangeFilter, ConditionalChange>;

struct ReductionConfig {
  std::vector<ReductionRule> rules;
  friend bool operator==(const ReductionConfig&, const ReductionConfig&) = default;
};

struct Config {
  AnonConfig anonymization;
  ReductionConfig reduction;
  friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing '" + key + "'");
  return *it;
}

inline std::string get_name(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected string");
  auto s = j.get<std::string>();
  if (s.empty()) throw ValidationError(where, "attribute name must be non-empty");
  return s;
}

inline std::vector<std::string> get_names(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected array");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(get_name(e, where));
  return out;
}

inline double get_finite(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected number");
  double d = j.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where, "must be finite");
  return d;
}

inline std::uint32_t get_positive(const Json& obj, const char* key) {
  const Json& j = require(obj, key, "anonymization");
  if (!j.is_number_integer()) throw ParseError(std::string("anonymization.") + key + ": expected integer");
  auto v = j.get<std::int64_t>();
  if (v < 1) throw ValidationError(key, "must be >= 1");
  if (v > UINT32_MAX) throw ValidationError(key, "too large");
  return static_cast<std::uint32_t>(v);
}

inline std::vector<AttributeValue> get_values(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected array");
  std::vector<AttributeValue> out;
  for (const auto& e : j) out.push_back(value_from_json(e, where));
  return out;
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace detail

// Checks every AnonConfig invariant; throws ValidationError naming the field.
inline void validate(const AnonConfig& c) {
  if (c.k < 1) throw ValidationError("k", "must be >= 1");
  if (c.delta < c.k) throw ValidationError("delta", "must be >= k");
  if (c.beta < 1) throw ValidationError("beta", "must be >= 1");
  if (c.mu < 1) throw ValidationError("mu", "must be >= 1");
  if (c.quasi_identifiers.empty()) throw ValidationError("quasi_identifiers", "must be non-empty");
  for (std::size_t i = 0; i < c.quasi_identifiers.size(); ++i) {
    if (c.quasi_identifiers[i].empty()) {
      throw ValidationError("quasi_identifiers", "attribute name must be non-empty");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (c.quasi_identifiers[i] == c.quasi_identifiers[j]) {
        throw ValidationError("quasi_identifiers", "duplicate '" + c.quasi_identifiers[i] + "'");
      }
    }
  }
  if (c.sensitive_attribute.empty()) {
    throw ValidationError("sensitive_attribute", "must be non-empty");
  }
  if (detail::contains(c.quasi_identifiers, c.sensitive_attribute)) {
    throw ValidationError("sensitive_attribute", "must not be a quasi-identifier");
  }
  if (c.identifier_attribute) {
    if (c.identifier_attribute->empty()) {
      throw ValidationError("identifier_attribute", "must be non-empty");
    }
    if (detail::contains(c.quasi_identifiers, *c.identifier_attribute)) {
      throw ValidationError("identifier_attribute", "must not be a quasi-identifier");
    }
  }
  for (const auto& a : c.non_categorized_attributes) {
    if (!detail::contains(c.quasi_identifiers, a)) {
      throw ValidationError("non_categorized_attributes",
                            "'" + a + "' is not a quasi-identifier");
    }
  }
}

inline void validate(const ReductionConfig& r) {
  for (std::size_t i = 0; i < r.rules.size(); ++i) {
    const std::string where = "reduction[" + std::to_string(i) + "]";
    if (const auto* rf = std::get_if<RangeFilter>(&r.rules[i])) {
      if (!(rf->min <= rf->max)) throw ValidationError(where, "min must be <= max");
    }
    if (const auto* cc = std::get_if<ConditionalChange>(&r.rules[i])) {
      if (const auto* nr = std::get_if<NumericRange>(&cc->condition)) {
        if (!(nr->min <= nr->max)) throw ValidationError(where, "condition min must be <= max");
      }
    }
  }
}

inline AnonConfig anon_config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("anonymization: expected object");
  AnonConfig c;
  c.k = detail::get_positive(j, "k");
  c.delta = detail::get_positive(j, "delta");
  c.beta = detail::get_positive(j, "beta");
  c.mu = detail::get_positive(j, "mu");
  c.quasi_identifiers =
      detail::get_names(detail::require(j, "quasi_identifiers", "anonymization"),
                        "quasi_identifiers");
  c.sensitive_attribute = detail::get_name(
      detail::require(j, "sensitive_attribute", "anonymization"), "sensitive_attribute");
  if (auto it = j.find("identifier_attribute"); it != j.end() && !it->is_null()) {
    c.identifier_attribute = detail::get_name(*it, "identifier_attribute");
  }
  if (auto it = j.find("non_categorized_attributes"); it != j.end()) {
    c.non_categorized_attributes = detail::get_names(*it, "non_categorized_attributes");
  }
  validate(c);
  return c;
}

inline ReductionRule rule_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected object");
  const Json& type_j = detail::require(j, "type", where);
  if (!type_j.is_string()) throw ParseError(where + ".type: expected string");
  const auto type = type_j.get<std::string>();

  if (type == "suppress") {
    return Suppress{detail::get_names(detail::require(j, "attributes", where), where)};
  }
  if (type == "allow" || type == "deny") {
    auto attr = detail::get_name(detail::require(j, "attribute", where), where);
    auto values = detail::get_values(detail::require(j, "values", where), where);
    if (type == "allow") return AllowFilter{std::move(attr), std::move(values)};
    return DenyFilter{std::move(attr), std::move(values)};
  }
  if (type == "range") {
    return RangeFilter{detail::get_name(detail::require(j, "attribute", where), where),
                       detail::get_finite(detail::require(j, "min", where), where + ".min"),
                       detail::get_finite(detail::require(j, "max", where), where + ".max")};
  }
  if (type == "conditional_change") {
    ConditionalChange cc;
    cc.match_attribute = detail::get_name(detail::require(j, "match_attribute", where), where);
    const Json& cond = detail::require(j, "condition", where);
    if (!cond.is_object()) throw ParseError(where + ".condition: expected object");
    if (auto eq = cond.find("equals"); eq != cond.end()) {
      if (!eq->is_string()) throw ParseError(where + ".condition.equals: expected string");
      cc.condition = TextEquals{eq->get<std::string>()};
    } else {
      cc.condition = NumericRange{
          detail::get_finite(detail::require(cond, "min", where + ".condition"), where + ".condition.min"),
          detail::get_finite(detail::require(cond, "max", where + ".condition"), where + ".condition.max")};
    }
    cc.target_attribute = detail::get_name(detail::require(j, "target_attribute", where), where);
    cc.new_value = value_from_json(detail::require(j, "new_value", where), where + ".new_value");
    return cc;
  }
  throw ParseError(where + ": unknown rule type '" + type + "'");
}

inline ReductionConfig reduction_config_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("reduction: expected array");
  ReductionConfig r;
  for (std::size_t i = 0; i < j.size(); ++i) {
    r.rules.push_back(rule_from_json(j[i], "reduction[" + std::to_string(i) + "]"));
  }
  validate(r);
  return r;
}

inline Config load_config(std::string_view document) {
  Json doc = Json::parse(document, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ParseError("configuration is not well-formed JSON");
  if (!doc.is_object()) throw ParseError("configuration root must be an object");
  Config cfg;
  cfg.anonymization = anon_config_from_json(detail::require(doc, "anonymization", "configuration"));
  if (auto it = doc.find("reduction"); it != doc.end()) {
    cfg.reduction = reduction_config_from_json(*it);
  }
  return cfg;
}

inline Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str());
}

inline Json to_json(const AnonConfig& c) {
  Json j = Json::object();
  j["k"] = c.k;
  j["delta"] = c.delta;
  j["beta"] = c.beta;
  j["mu"] = c.mu;
  j["quasi_identifiers"] = c.quasi_identifiers;
  j["sensitive_attribute"] = c.sensitive_attribute;
  if (c.identifier_attribute) j["identifier_attribute"] = *c.identifier_attribute;
  j["non_categorized_attributes"] = c.non_categorized_attributes;
  return j;
}

inline Json to_json(const ReductionRule& rule) {
  Json j = Json::object();
  auto values_json = [](const std::vector<AttributeValue>& vs) {
    Json arr = Json::array();
    for (const auto& v : vs) arr.push_back(value_to_json(v));
    return arr;
  };
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, Suppress>) {
          j["type"] = "suppress";
          j["attributes"] = r.attributes;
        } else if constexpr (std::is_same_v<R, AllowFilter> || std::is_same_v<R, DenyFilter>) {
          j["type"] = std::is_same_v<R, AllowFilter> ? "allow" : "deny";
          j["attribute"] = r.attribute;
          j["values"] = values_json(r.values);
        } else if constexpr (std::is_same_v<R, RangeFilter>) {
          j["type"] = "range";
          j["attribute"] = r.attribute;
          j["min"] = r.min;
          j["max"] = r.max;
        } else {
          j["type"] = "conditional_change";
          j["match_attribute"] = r.match_attribute;
          if (const auto* eq = std::get_if<TextEquals>(&r.condition)) {
            j["condition"] = Json{{"equals", eq->text}};
          } else {
            const auto& nr = std::get<NumericRange>(r.condition);
            j["condition"] = Json{{"min", nr.min}, {"max", nr.max}};
          }
          j["target_attribute"] = r.target_attribute;
          j["new_value"] = value_to_json(r.new_value);
        }
      },
      rule);
  return j;
}

inline Json to_json(const Config& cfg) {
  Json rules = Json::array();
  for (const auto& r : cfg.reduction.rules) rules.push_back(to_json(r));
  return Json{{"anonymization", to_json(cfg.anonymization)}, {"reduction", rules}};
}

}  // namespace kstream
