#pragma once

// Streaming k_s-anonymization over a tuple stream.
//
// Arriving tuples are buffered in clusters. A tuple joins the active cluster
// whose information loss grows least, provided the grown cluster stays under
// the loss threshold tau; otherwise it opens a new cluster. Once a cluster
// holds k distinct individuals it is released in bulk, every member published
// under the cluster's generalization. A tuple that has waited delta arrivals
// forces its cluster out: via a previously released generalization that
// covers it, by merging with neighbours until the k-criterion holds, or, when
// the whole buffer holds fewer than k individuals, as a flagged suppression
// release under the global ranges.

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kstream/config.hpp"
#include "kstream/errors.hpp"
#include "kstream/generalization.hpp"
#include "kstream/message.hpp"

namespace kstream {

using ClusterId = std::uint64_t;

struct Member {
  Message message;
  QiPoint point;
  std::optional<AttributeValue> pid;
  std::uint64_t arrival = 0;  // engine arrival index
};

struct Cluster {
  ClusterId id = 0;
  std::vector<Member> members;  // ascending arrival
  Generalization gen;
  std::map<AttributeValue, std::uint32_t> pids;

  std::size_t distinct_pids() const noexcept { return pids.size(); }

  void add(Member m) {
    if (members.empty()) {
      gen = point_generalization(m.point);
    } else {
      extend(gen, m.point);
    }
    if (m.pid) ++pids[*m.pid];
    auto pos = std::upper_bound(members.begin(), members.end(), m.arrival,
                                [](std::uint64_t a, const Member& x) { return a < x.arrival; });
    members.insert(pos, std::move(m));
  }

  Member remove_front() {
    Member m = std::move(members.front());
    members.erase(members.begin());
    if (m.pid) {
      auto it = pids.find(*m.pid);
      if (--it->second == 0) pids.erase(it);
    }
    gen = recomputed_hull();
    return m;
  }

  void absorb(Cluster&& other) {
    for (auto& m : other.members) add(std::move(m));
  }

  Generalization recomputed_hull() const {
    if (members.empty()) return {};
    Generalization g = point_generalization(members.front().point);
    for (std::size_t i = 1; i < members.size(); ++i) extend(g, members[i].point);
    return g;
  }
};

struct ReleasedTuple {
  Message message;  // original tuple; the egress formatter never writes its QI values
  Generalization gen;
  ClusterId cluster_id = 0;
  bool suppressed = false;
  std::uint64_t arrival_index = 0;
  std::uint64_t release_index = 0;
  Clock::time_point release_time{};
};

// Among clusters, the one whose absorption of p costs least while keeping
// its loss <= tau. Ties go to the lowest id.
inline const Cluster* best_cluster(std::span<const Cluster> clusters, const QiPoint& p,
                                   const Domain& domain, double tau) {
  constexpr double kSlack = 1e-12;
  const Cluster* best = nullptr;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const auto& c : clusters) {
    Generalization grown = extended(c.gen, p);
    if (info_loss(grown, domain) > tau + kSlack) continue;
    double cost = enlargement(c.gen, p, domain);
    if (cost < best_cost || (cost == best_cost && best != nullptr && c.id < best->id)) {
      best = &c;
      best_cost = cost;
    }
  }
  return best;
}

class CastleEngine {
 public:
  explicit CastleEngine(AnonConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    domain_.resize(cfg_.quasi_identifiers.size());
    for (std::size_t i = 0; i < domain_.size(); ++i) {
      domain_[i].categorical = cfg_.is_categorized(cfg_.quasi_identifiers[i]);
    }
  }

  const AnonConfig& config() const noexcept { return cfg_; }
  const Domain& domain() const noexcept { return domain_; }
  std::span<const Cluster> active_clusters() const noexcept { return active_; }
  std::uint64_t seq_head() const noexcept { return head_; }

  double tau() const {
    if (loss_window_.empty()) return 1.0;
    return std::accumulate(loss_window_.begin(), loss_window_.end(), 0.0) /
           static_cast<double>(loss_window_.size());
  }

  std::size_t buffered() const {
    std::size_t n = 0;
    for (const auto& c : active_) n += c.members.size();
    return n;
  }

  double info_loss(const Generalization& g) const { return kstream::info_loss(g, domain_); }

  // Throws TypeMismatch, leaving the engine untouched, when a QI (or the
  // configured identifier) is missing or of the wrong kind.
  std::vector<ReleasedTuple> ingest(Message t) {
    Member m = extract(std::move(t));
    for (std::size_t i = 0; i < m.point.size(); ++i) domain_[i].observe(m.point[i]);
    m.arrival = next_arrival_++;
    head_ = m.arrival;
    if (m.pid) ++engine_pids_[*m.pid];

    std::vector<ReleasedTuple> out;
    std::size_t target;
    if (const Cluster* c = best_cluster(active_, m.point, domain_, tau())) {
      target = index_of(c->id);
    } else if (active_.size() >= cfg_.beta && active_.size() == 1) {
      target = 0;
    } else {
      if (active_.size() >= cfg_.beta) merge_cheapest_pair(out);
      active_.push_back(Cluster{next_cluster_id_++, {}, {}, {}});
      target = active_.size() - 1;
    }
    active_[target].add(std::move(m));
    if (satisfies_k(active_[target])) release_cluster_at(target, out);

    auto expired = delay_check();
    out.insert(out.end(), std::make_move_iterator(expired.begin()),
               std::make_move_iterator(expired.end()));
    assert(check_invariants());
    return out;
  }

  // Forces out every tuple that has waited delta arrivals.
  std::vector<ReleasedTuple> delay_check() {
    std::vector<ReleasedTuple> out;
    while (auto ci = oldest_cluster()) {
      if (head_ - active_[*ci].members.front().arrival < cfg_.delta) break;
      expire_front(*ci, out);
    }
    return out;
  }

  // Drains the buffer as though every tuple had expired.
  std::vector<ReleasedTuple> flush() {
    std::vector<ReleasedTuple> out;
    while (auto ci = oldest_cluster()) expire_front(*ci, out);
    return out;
  }

  // Releases the active cluster with the given id. It must satisfy the k-criterion.
  std::vector<ReleasedTuple> release_cluster(ClusterId id) {
    std::vector<ReleasedTuple> out;
    release_cluster_at(index_of(id), out);
    return out;
  }

  bool satisfies_k(const Cluster& c) const {
    if (cfg_.identifier_attribute) return c.distinct_pids() >= cfg_.k;
    return c.members.size() >= cfg_.k;
  }

  // Hull tightness, capacity and delay bounds. Cheap enough for tests, not
  // meant for the hot path.
  bool check_invariants() const {
    if (active_.size() > cfg_.beta) return false;
    for (const auto& c : active_) {
      if (c.members.empty()) return false;
      if (!(c.gen == c.recomputed_hull())) return false;
      for (const auto& m : c.members) {
        if (head_ - m.arrival >= cfg_.delta) return false;
      }
    }
    return true;
  }

 private:
  struct ReusableGen {
    Generalization gen;
    ClusterId cluster_id;
  };

  Member extract(Message t) const {
    Member m;
    m.point.reserve(cfg_.quasi_identifiers.size());
    for (std::size_t i = 0; i < cfg_.quasi_identifiers.size(); ++i) {
      const auto& qi = cfg_.quasi_identifiers[i];
      const AttributeValue* v = t.attributes.find(qi);
      if (v == nullptr) throw TypeMismatch("missing quasi-identifier '" + qi + "'");
      if (domain_[i].categorical) {
        if (!v->is_category()) throw TypeMismatch("quasi-identifier '" + qi + "' is not categorized");
        m.point.emplace_back(v->category());
      } else {
        if (!v->is_number()) throw TypeMismatch("quasi-identifier '" + qi + "' is not numeric");
        m.point.emplace_back(v->number());
      }
    }
    if (cfg_.identifier_attribute) {
      const AttributeValue* pid = t.attributes.find(*cfg_.identifier_attribute);
      if (pid == nullptr) {
        throw TypeMismatch("missing identifier '" + *cfg_.identifier_attribute + "'");
      }
      m.pid = *pid;
    }
    m.message = std::move(t);
    return m;
  }

  std::size_t index_of(ClusterId id) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), id,
                               [](const Cluster& c, ClusterId x) { return c.id < x; });
    if (it == active_.end() || it->id != id) {
      throw ContractViolation("no active cluster " + std::to_string(id));
    }
    return static_cast<std::size_t>(it - active_.begin());
  }

  std::optional<std::size_t> oldest_cluster() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (!best || active_[i].members.front().arrival < active_[*best].members.front().arrival) {
        best = i;
      }
    }
    return best;
  }

  std::size_t engine_individuals() const {
    return cfg_.identifier_attribute ? engine_pids_.size() : buffered();
  }

  void forget_pid(const Member& m) {
    if (!m.pid) return;
    auto it = engine_pids_.find(*m.pid);
    if (--it->second == 0) engine_pids_.erase(it);
  }

  ReleasedTuple make_release(Member&& m, Generalization gen, ClusterId id, bool suppressed,
                             Clock::time_point now) {
    forget_pid(m);
    return ReleasedTuple{std::move(m.message), std::move(gen), id, suppressed, m.arrival, head_, now};
  }

  void release_cluster_at(std::size_t ci, std::vector<ReleasedTuple>& out) {
    Cluster& c = active_[ci];
    if (!satisfies_k(c)) {
      throw ContractViolation("cluster " + std::to_string(c.id) + " is not k-anonymous");
    }
    const auto now = Clock::now();
    for (auto& m : c.members) out.push_back(make_release(std::move(m), c.gen, c.id, false, now));

    loss_window_.push_back(info_loss(c.gen));
    if (loss_window_.size() > cfg_.mu) loss_window_.pop_front();
    reusable_.push_back(ReusableGen{std::move(c.gen), c.id});
    if (reusable_.size() > cfg_.mu) reusable_.pop_front();
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(ci));
  }

  // Merges two active clusters; the result keeps the lower id so active_
  // stays sorted. Returns the merged cluster's index.
  std::size_t merge_into(std::size_t a, std::size_t b) {
    std::size_t keep = active_[a].id < active_[b].id ? a : b;
    std::size_t gone = keep == a ? b : a;
    active_[keep].absorb(std::move(active_[gone]));
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(gone));
    return gone < keep ? keep - 1 : keep;
  }

  void merge_cheapest_pair(std::vector<ReleasedTuple>& out) {
    std::size_t best_a = 0, best_b = 1;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      for (std::size_t b = a + 1; b < active_.size(); ++b) {
        double loss = info_loss(hull(active_[a].gen, active_[b].gen));
        if (loss < best_loss) {
          best_loss = loss;
          best_a = a;
          best_b = b;
        }
      }
    }
    std::size_t merged = merge_into(best_a, best_b);
    if (satisfies_k(active_[merged])) release_cluster_at(merged, out);
  }

  std::optional<std::size_t> reusable_for(const QiPoint& p) const {
    std::optional<std::size_t> best;
    double best_loss = std::numeric_limits<double>::infinity();
    const double threshold = tau();
    for (std::size_t i = 0; i < reusable_.size(); ++i) {
      if (!covers(reusable_[i].gen, p)) continue;
      double loss = info_loss(reusable_[i].gen);
      if (loss <= threshold + 1e-12 && loss < best_loss) {
        best = i;
        best_loss = loss;
      }
    }
    return best;
  }

  // Handles the oldest tuple of active_[ci], which has run out of time.
  void expire_front(std::size_t ci, std::vector<ReleasedTuple>& out) {
    if (satisfies_k(active_[ci])) {
      release_cluster_at(ci, out);
      return;
    }
    if (auto ri = reusable_for(active_[ci].members.front().point)) {
      release_front_alone(ci, reusable_[*ri].gen, reusable_[*ri].cluster_id, false, out);
      return;
    }
    if (engine_individuals() >= cfg_.k) {
      while (!satisfies_k(active_[ci])) {
        std::size_t partner = ci == 0 ? 1 : 0;
        double best_loss = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < active_.size(); ++j) {
          if (j == ci) continue;
          double loss = info_loss(hull(active_[ci].gen, active_[j].gen));
          if (loss < best_loss) {
            best_loss = loss;
            partner = j;
          }
        }
        ci = merge_into(ci, partner);
      }
      release_cluster_at(ci, out);
      return;
    }
    release_front_alone(ci, full_generalization(domain_), active_[ci].id, true, out);
  }

  void release_front_alone(std::size_t ci, Generalization gen, ClusterId id, bool suppressed,
                           std::vector<ReleasedTuple>& out) {
    Member m = active_[ci].remove_front();
    out.push_back(make_release(std::move(m), std::move(gen), id, suppressed, Clock::now()));
    if (active_[ci].members.empty()) active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(ci));
  }

  AnonConfig cfg_;
  Domain domain_;
  std::vector<Cluster> active_;  // ascending id
  std::deque<ReusableGen> reusable_;
  std::deque<double> loss_window_;
  std::map<AttributeValue, std::uint32_t> engine_pids_;
  ClusterId next_cluster_id_ = 0;
  std::uint64_t next_arrival_ = 0;
  std::uint64_t head_ = 0;
};

}  // namespace kstream
