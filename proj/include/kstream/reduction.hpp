#pragma once

// Information reduction applied to each message ahead of anonymization:
// attribute suppression, allow/deny filters, range filters and conditional
// changes, evaluated strictly in declared order.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <variant>

#include "kstream/config.hpp"
#include "kstream/message.hpp"

namespace kstream {

enum class DropReason { Filter, TypeMismatch };

struct Drop {
  std::size_t rule_index = 0;  // first rule that rejected the message
  DropReason reason = DropReason::Filter;
  friend bool operator==(const Drop&, const Drop&) = default;
};

// Pass(Message) | Drop.
class ReductionOutcome {
 public:
  ReductionOutcome(Message m) : v_(std::move(m)) {}  // NOLINT
  ReductionOutcome(Drop d) : v_(d) {}                // NOLINT

  bool passed() const noexcept { return std::holds_alternative<Message>(v_); }
  const Message& message() const& { return std::get<Message>(v_); }
  Message&& message() && { return std::get<Message>(std::move(v_)); }
  const Drop& drop() const { return std::get<Drop>(v_); }

 private:
  std::variant<Message, Drop> v_;
};

inline Message suppress(Message msg, std::span<const std::string> names) {
  for (const auto& n : names) msg.attributes.erase(n);
  return msg;
}

namespace detail {

inline bool in_set(const AttributeValue& v, const std::vector<AttributeValue>& set) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

// Inclusive on both ends.
inline bool in_closed(double v, double lo, double hi) { return lo <= v && v <= hi; }

}  // namespace detail

// Missing attribute: Drop under an allow-list, Pass under a deny-list.
inline bool allow_deny_passes(const Message& msg, const AllowFilter& rule) {
  const auto* v = msg.attributes.find(rule.attribute);
  return v != nullptr && detail::in_set(*v, rule.values);
}

inline bool allow_deny_passes(const Message& msg, const DenyFilter& rule) {
  const auto* v = msg.attributes.find(rule.attribute);
  return v == nullptr || !detail::in_set(*v, rule.values);
}

template <typename Rule>
  requires std::is_same_v<Rule, AllowFilter> || std::is_same_v<Rule, DenyFilter>
ReductionOutcome allow_deny_filter(Message msg, const Rule& rule, std::size_t rule_index = 0) {
  if (allow_deny_passes(msg, rule)) return msg;
  return Drop{rule_index, DropReason::Filter};
}

inline ReductionOutcome range_filter(Message msg, const RangeFilter& rule,
                                     std::size_t rule_index = 0) {
  const auto* v = msg.attributes.find(rule.attribute);
  if (v == nullptr) return Drop{rule_index, DropReason::Filter};
  if (!v->is_number()) return Drop{rule_index, DropReason::TypeMismatch};
  if (!detail::in_closed(v->number(), rule.min, rule.max)) {
    return Drop{rule_index, DropReason::Filter};
  }
  return msg;
}

inline bool condition_holds(const Message& msg, const ConditionalChange& rule) {
  const auto* v = msg.attributes.find(rule.match_attribute);
  if (v == nullptr) return false;
  if (const auto* eq = std::get_if<TextEquals>(&rule.condition)) {
    return v->is_text() && v->text() == eq->text;
  }
  const auto& range = std::get<NumericRange>(rule.condition);
  return v->is_number() && detail::in_closed(v->number(), range.min, range.max);
}

// Adds or overwrites the target attribute when the condition holds. Never drops.
inline Message conditional_change(Message msg, const ConditionalChange& rule) {
  if (condition_holds(msg, rule)) msg.attributes.set(rule.target_attribute, rule.new_value);
  return msg;
}

inline ReductionOutcome apply_pipeline(Message msg, const ReductionConfig& cfg) {
  for (std::size_t i = 0; i < cfg.rules.size(); ++i) {
    const auto& rule = cfg.rules[i];
    if (const auto* s = std::get_if<Suppress>(&rule)) {
      msg = suppress(std::move(msg), s->attributes);
    } else if (const auto* a = std::get_if<AllowFilter>(&rule)) {
      if (!allow_deny_passes(msg, *a)) return Drop{i, DropReason::Filter};
    } else if (const auto* d = std::get_if<DenyFilter>(&rule)) {
      if (!allow_deny_passes(msg, *d)) return Drop{i, DropReason::Filter};
    } else if (const auto* r = std::get_if<RangeFilter>(&rule)) {
      auto out = range_filter(std::move(msg), *r, i);
      if (!out.passed()) return out;
      msg = std::move(out).message();
    } else {
      msg = conditional_change(std::move(msg), std::get<ConditionalChange>(rule));
    }
  }
  return msg;
}

}  // namespace kstream
