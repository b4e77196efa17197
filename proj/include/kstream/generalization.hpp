#pragma once

// Generalizations over quasi-identifiers and the information-loss metric
// that drives cluster selection.
//
// Numeric QIs generalize to a closed interval, categorized QIs to a set of
// category ids (categories carry no order, so they are never turned into
// ranges). The loss of a generalization is the mean over QIs of
//   numeric:      (hi - lo) / (HI - LO), 0 when the global range is a point
//   categorical:  |set| / |ids seen so far for that attribute|

#include <algorithm>
#include <cstddef>
#include <set>
#include <variant>
#include <vector>

#include "kstream/message.hpp"

namespace kstream {

struct Interval {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Sorted, unique.
using CategorySet = std::vector<CategoryId>;

using QiRange = std::variant<Interval, CategorySet>;
using QiValue = std::variant<double, CategoryId>;
using QiPoint = std::vector<QiValue>;

struct Generalization {
  std::vector<QiRange> ranges;  // parallel to AnonConfig::quasi_identifiers
  friend bool operator==(const Generalization&, const Generalization&) = default;
};

// Everything observed so far for one QI.
struct QiDomain {
  bool categorical = false;
  bool seen = false;
  double lo = 0;
  double hi = 0;
  std::set<CategoryId> universe;

  void observe(const QiValue& v) {
    if (const auto* c = std::get_if<CategoryId>(&v)) {
      universe.insert(*c);
      return;
    }
    double x = std::get<double>(v);
    if (!seen) {
      lo = hi = x;
      seen = true;
    } else {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }

  // Widest generalization this QI admits right now.
  QiRange full_range() const {
    if (categorical) return CategorySet(universe.begin(), universe.end());
    return Interval{lo, hi};
  }
};

using Domain = std::vector<QiDomain>;

inline Generalization point_generalization(const QiPoint& p) {
  Generalization g;
  g.ranges.reserve(p.size());
  for (const auto& v : p) {
    if (const auto* c = std::get_if<CategoryId>(&v)) {
      g.ranges.emplace_back(CategorySet{*c});
    } else {
      double x = std::get<double>(v);
      g.ranges.emplace_back(Interval{x, x});
    }
  }
  return g;
}

inline void insert_sorted(CategorySet& set, CategoryId id) {
  auto it = std::lower_bound(set.begin(), set.end(), id);
  if (it == set.end() || *it != id) set.insert(it, id);
}

inline void extend(Generalization& g, const QiPoint& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (auto* iv = std::get_if<Interval>(&g.ranges[i])) {
      double x = std::get<double>(p[i]);
      iv->lo = std::min(iv->lo, x);
      iv->hi = std::max(iv->hi, x);
    } else {
      insert_sorted(std::get<CategorySet>(g.ranges[i]), std::get<CategoryId>(p[i]));
    }
  }
}

inline Generalization extended(Generalization g, const QiPoint& p) {
  extend(g, p);
  return g;
}

// Smallest generalization covering both.
inline Generalization hull(const Generalization& a, const Generalization& b) {
  Generalization out;
  out.ranges.reserve(a.ranges.size());
  for (std::size_t i = 0; i < a.ranges.size(); ++i) {
    if (const auto* ia = std::get_if<Interval>(&a.ranges[i])) {
      const auto& ib = std::get<Interval>(b.ranges[i]);
      out.ranges.emplace_back(Interval{std::min(ia->lo, ib.lo), std::max(ia->hi, ib.hi)});
    } else {
      const auto& sa = std::get<CategorySet>(a.ranges[i]);
      const auto& sb = std::get<CategorySet>(b.ranges[i]);
      CategorySet merged;
      merged.reserve(sa.size() + sb.size());
      std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(merged));
      out.ranges.emplace_back(std::move(merged));
    }
  }
  return out;
}

inline bool covers(const Generalization& g, const QiPoint& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (const auto* iv = std::get_if<Interval>(&g.ranges[i])) {
      double x = std::get<double>(p[i]);
      if (x < iv->lo || x > iv->hi) return false;
    } else {
      const auto& set = std::get<CategorySet>(g.ranges[i]);
      if (!std::binary_search(set.begin(), set.end(), std::get<CategoryId>(p[i]))) return false;
    }
  }
  return true;
}

inline double qi_loss(const QiRange& r, const QiDomain& d) {
  if (const auto* iv = std::get_if<Interval>(&r)) {
    double span = d.hi - d.lo;
    if (span <= 0) return 0.0;
    return std::clamp((iv->hi - iv->lo) / span, 0.0, 1.0);
  }
  const auto& set = std::get<CategorySet>(r);
  if (d.universe.empty()) return 0.0;
  return std::clamp(static_cast<double>(set.size()) / static_cast<double>(d.universe.size()), 0.0,
                    1.0);
}

inline double info_loss(const Generalization& g, const Domain& domain) {
  if (g.ranges.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < g.ranges.size(); ++i) sum += qi_loss(g.ranges[i], domain[i]);
  return sum / static_cast<double>(g.ranges.size());
}

// Loss increase from absorbing p into g; 0 when g already covers p.
inline double enlargement(const Generalization& g, const QiPoint& p, const Domain& domain) {
  if (covers(g, p)) return 0.0;
  return std::max(0.0, info_loss(extended(g, p), domain) - info_loss(g, domain));
}

inline Generalization full_generalization(const Domain& domain) {
  Generalization g;
  for (const auto& d : domain) g.ranges.push_back(d.full_range());
  return g;
}

}  // namespace kstream
