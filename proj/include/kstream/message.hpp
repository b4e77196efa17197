#pragma once

#include <algorithm>
#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace kstream {

using Clock = std::chrono::steady_clock;

// Dense per-attribute id handed out by the categorizer.
struct CategoryId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(CategoryId, CategoryId) = default;
};

// Number | Text | CategoryId. Numbers are always finite.
class AttributeValue {
 public:
  using Storage = std::variant<double, std::string, CategoryId>;

  AttributeValue() : v_(0.0) {}
  AttributeValue(double n) : v_(n) {}                      // NOLINT
  AttributeValue(int n) : v_(static_cast<double>(n)) {}    // NOLINT
  AttributeValue(std::string s) : v_(std::move(s)) {}      // NOLINT
  AttributeValue(const char* s) : v_(std::string(s)) {}    // NOLINT
  AttributeValue(CategoryId c) : v_(c) {}                  // NOLINT

  bool is_number() const noexcept { return std::holds_alternative<double>(v_); }
  bool is_text() const noexcept { return std::holds_alternative<std::string>(v_); }
  bool is_category() const noexcept { return std::holds_alternative<CategoryId>(v_); }

  double number() const { return std::get<double>(v_); }
  const std::string& text() const { return std::get<std::string>(v_); }
  CategoryId category() const { return std::get<CategoryId>(v_); }

  const Storage& storage() const noexcept { return v_; }

  // Same kind and same value; no cross-kind equality.
  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
  friend bool operator<(const AttributeValue& a, const AttributeValue& b) { return a.v_ < b.v_; }

 private:
  Storage v_;
};

// Attribute name -> value, preserving first-insertion order. Messages carry a
// handful of attributes so a flat vector beats a tree here.
class AttributeMap {
 public:
  using Entry = std::pair<std::string, AttributeValue>;

  AttributeMap() = default;
  AttributeMap(std::initializer_list<Entry> init) {
    for (const auto& [k, v] : init) set(k, v);
  }

  const AttributeValue* find(std::string_view name) const {
    auto it = locate(name);
    return it == entries_.end() ? nullptr : &it->second;
  }
  AttributeValue* find(std::string_view name) {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Entry& e) { return e.first == name; });
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  // Overwrites in place when present, otherwise appends.
  void set(std::string_view name, AttributeValue value) {
    if (auto* slot = find(name)) {
      *slot = std::move(value);
    } else {
      entries_.emplace_back(std::string(name), std::move(value));
    }
  }

  bool erase(std::string_view name) {
    auto it = locate(name);
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const AttributeMap&, const AttributeMap&) = default;

 private:
  std::vector<Entry>::const_iterator locate(std::string_view name) const {
    return std::find_if(entries_.begin(), entries_.end(),
                        [&](const Entry& e) { return e.first == name; });
  }

  std::vector<Entry> entries_;
};

struct Message {
  std::uint64_t seq = 0;
  Clock::time_point arrival_time{};
  AttributeMap attributes;
};

}  // namespace kstream
