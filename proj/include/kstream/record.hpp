#pragma once

// Newline-delimited record codec: one flat JSON object per line.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "kstream/errors.hpp"
#include "kstream/message.hpp"

namespace kstream {

using Json = nlohmann::ordered_json;

// Integral values are written without a fractional part so that records
// survive a parse/format cycle unchanged.
inline Json number_to_json(double v) {
  constexpr double kExactIntLimit = 9007199254740992.0;  // 2^53
  if (std::trunc(v) == v && std::fabs(v) < kExactIntLimit) {
    return Json(static_cast<std::int64_t>(v));
  }
  return Json(v);
}

inline Json value_to_json(const AttributeValue& v) {
  if (v.is_number()) return number_to_json(v.number());
  if (v.is_text()) return Json(v.text());
  return Json(v.category().value);
}

// Number or string only. Category ids never appear in documents we read.
inline AttributeValue value_from_json(const Json& j, std::string_view context) {
  if (j.is_number()) {
    double d = j.get<double>();
    if (!std::isfinite(d)) {
      throw ParseError(std::string(context) + ": non-finite number");
    }
    return AttributeValue(d);
  }
  if (j.is_string()) return AttributeValue(j.get<std::string>());
  throw ParseError(std::string(context) + ": expected number or string, got " +
                   j.type_name());
}

inline Message parse_message(std::string_view line, std::uint64_t seq,
                             Clock::time_point now) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find_first_not_of(" \t") == std::string_view::npos) {
    throw ParseError("empty record");
  }
  Json doc = Json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw ParseError("malformed record");
  if (!doc.is_object()) throw ParseError("record is not an object");

  Message msg;
  msg.seq = seq;
  msg.arrival_time = now;
  for (const auto& [name, value] : doc.items()) {
    if (name.empty()) throw ParseError("empty attribute name");
    msg.attributes.set(name, value_from_json(value, name));
  }
  return msg;
}

inline std::string format_message(const Message& msg) {
  Json doc = Json::object();
  for (const auto& [name, value] : msg.attributes) doc[name] = value_to_json(value);
  return doc.dump();
}

}  // namespace kstream
