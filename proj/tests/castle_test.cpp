#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "kstream/castle.hpp"

namespace kstream {
namespace {

AnonConfig numeric_config(std::uint32_t k, std::uint32_t delta, std::uint32_t beta, std::uint32_t mu = 10,
                          bool with_pid = true) {
  AnonConfig c;
  c.k = k;
  c.delta = delta;
  c.beta = beta;
  c.mu = mu;
  c.quasi_identifiers = {"x"};
  c.sensitive_attribute = "s";
  if (with_pid) c.identifier_attribute = "pid";
  return c;
}

Message tuple(double x, const std::string& pid, std::uint64_t seq = 0) {
  Message m;
  m.seq = seq;
  m.attributes.set("pid", pid);
  m.attributes.set("x", x);
  m.attributes.set("s", 1);
  return m;
}

Cluster cluster_over(ClusterId id, std::initializer_list<double> xs) {
  Cluster c;
  c.id = id;
  std::uint64_t arrival = 0;
  for (double x : xs) c.add(Member{tuple(x, "p"), QiPoint{QiValue{x}}, std::nullopt, arrival++});
  return c;
}

Domain numeric_domain(double lo, double hi) {
  Domain d(1);
  d[0].observe(lo);
  d[0].observe(hi);
  return d;
}

// ---- best_cluster ----

TEST(BestCluster, EmptyActiveSet) {
  EXPECT_EQ(best_cluster({}, QiPoint{QiValue{1.0}}, numeric_domain(0, 10), 1.0), nullptr);
}

// Brute-force oracle: argmin of enlargement over all admissible clusters.
TEST(BestCluster, PicksSmallestEnlargement) {
  Domain dom = numeric_domain(0, 10);
  std::vector<Cluster> clusters = {cluster_over(0, {0, 4}), cluster_over(1, {8, 10})};
  const QiPoint t{QiValue{5.0}};
  std::vector<double> costs;
  for (const auto& c : clusters) costs.push_back(enlargement(c.gen, t, dom));
  ASSERT_NEAR(costs[0], 0.1, 1e-12);
  ASSERT_NEAR(costs[1], 0.3, 1e-12);
  const Cluster* best = best_cluster(clusters, t, dom, 1.0);
  ASSERT_NE(best, nullptr);
  EXPECT_EQ(best->id, 0u);
}

TEST(BestCluster, TieGoesToLowerId) {
  Domain dom = numeric_domain(0, 10);
  std::vector<Cluster> clusters = {cluster_over(3, {0, 4}), cluster_over(1, {6, 10})};
  const QiPoint t{QiValue{5.0}};
  ASSERT_EQ(enlargement(clusters[0].gen, t, dom), enlargement(clusters[1].gen, t, dom));
  EXPECT_EQ(best_cluster(clusters, t, dom, 1.0)->id, 1u);
}

TEST(BestCluster, ThresholdExcludesCostlyClusters) {
  Domain dom = numeric_domain(0, 10);
  std::vector<Cluster> clusters = {cluster_over(0, {0, 4}), cluster_over(1, {8, 10})};
  // Absorbing 5 gives losses 0.5 and 0.5; nothing fits under 0.45.
  EXPECT_EQ(best_cluster(clusters, QiPoint{QiValue{5.0}}, dom, 0.45), nullptr);
  EXPECT_NE(best_cluster(clusters, QiPoint{QiValue{5.0}}, dom, 0.5), nullptr);
}

// ---- ingest / delay_check / release ----

TEST(Ingest, FirstTupleMakesSingleton) {
  CastleEngine e(numeric_config(2, 5, 3));
  EXPECT_TRUE(e.ingest(tuple(1, "a")).empty());
  ASSERT_EQ(e.active_clusters().size(), 1u);
  EXPECT_EQ(e.active_clusters()[0].members.size(), 1u);
  EXPECT_TRUE(e.check_invariants());
}

TEST(Ingest, FullClusterReleasesTogether) {
  CastleEngine e(numeric_config(5, 200, 50));
  std::vector<ReleasedTuple> out;
  const std::vector<std::string> pids = {"p1", "p2", "p3", "p4", "p5"};
  for (std::size_t i = 0; i < pids.size(); ++i) {
    auto r = e.ingest(tuple(42, pids[i], i));
    out.insert(out.end(), r.begin(), r.end());
  }
  ASSERT_EQ(out.size(), 5u);
  for (const auto& r : out) {
    EXPECT_EQ(r.gen, out[0].gen);
    EXPECT_EQ(r.cluster_id, out[0].cluster_id);
    EXPECT_FALSE(r.suppressed);
    EXPECT_LE(r.release_index - r.arrival_index, 200u);
  }
  EXPECT_EQ(out[0].gen, (Generalization{{Interval{42, 42}}}));
  EXPECT_EQ(e.buffered(), 0u);
}

TEST(Ingest, ClusterWaitsForDistinctIndividuals) {
  CastleEngine e(numeric_config(3, 50, 5));
  EXPECT_TRUE(e.ingest(tuple(1, "a")).empty());
  EXPECT_TRUE(e.ingest(tuple(1, "a")).empty());
  EXPECT_TRUE(e.ingest(tuple(1, "b")).empty());
  EXPECT_EQ(e.ingest(tuple(1, "c")).size(), 4u);
}

TEST(Ingest, WithoutIdentifierCountsTuples) {
  CastleEngine e(numeric_config(3, 50, 5, 10, false));
  Message m;
  m.attributes.set("x", 1);
  EXPECT_TRUE(e.ingest(m).empty());
  EXPECT_TRUE(e.ingest(m).empty());
  EXPECT_EQ(e.ingest(m).size(), 3u);
}

// Two identical-QI individuals release at zero loss, which pins tau at 0.
void prime_zero_tau(CastleEngine& e, double x) {
  ASSERT_TRUE(e.ingest(tuple(x, "X")).empty());
  ASSERT_EQ(e.ingest(tuple(x, "Y")).size(), 2u);
  ASSERT_EQ(e.tau(), 0.0);
}

TEST(Ingest, BetaOneAbsorbsFarTuple) {
  CastleEngine e(numeric_config(2, 10, 1));
  prime_zero_tau(e, 0);
  EXPECT_TRUE(e.ingest(tuple(0, "c")).empty());
  EXPECT_TRUE(e.ingest(tuple(100, "c")).empty());
  ASSERT_EQ(e.active_clusters().size(), 1u);
  EXPECT_EQ(e.active_clusters()[0].members.size(), 2u);
  EXPECT_EQ(e.active_clusters()[0].gen, (Generalization{{Interval{0, 100}}}));
  EXPECT_TRUE(e.check_invariants());
}

TEST(Ingest, BetaOverflowMergesClosestClusters) {
  CastleEngine e(numeric_config(2, 50, 2));
  prime_zero_tau(e, 50);
  // tau == 0 forces a new cluster for every distinct value.
  EXPECT_TRUE(e.ingest(tuple(0, "a")).empty());
  EXPECT_TRUE(e.ingest(tuple(10, "a")).empty());
  ASSERT_EQ(e.active_clusters().size(), 2u);
  // Third distinct value: merge {0},{10} first (loss of [0,10] is the only
  // candidate), then open a cluster for 90.
  EXPECT_TRUE(e.ingest(tuple(90, "a")).empty());
  ASSERT_EQ(e.active_clusters().size(), 2u);
  EXPECT_EQ(e.active_clusters()[0].gen, (Generalization{{Interval{0, 10}}}));
  EXPECT_EQ(e.active_clusters()[1].gen, (Generalization{{Interval{90, 90}}}));
  EXPECT_TRUE(e.check_invariants());
}

TEST(Ingest, TypeMismatchLeavesEngineUntouched) {
  CastleEngine e(numeric_config(2, 5, 3));
  Message missing_qi;
  missing_qi.attributes.set("pid", "a");
  EXPECT_THROW(e.ingest(missing_qi), TypeMismatch);
  Message text_qi = tuple(1, "a");
  text_qi.attributes.set("x", "one");
  EXPECT_THROW(e.ingest(text_qi), TypeMismatch);
  Message missing_pid;
  missing_pid.attributes.set("x", 1);
  EXPECT_THROW(e.ingest(missing_pid), TypeMismatch);
  EXPECT_EQ(e.buffered(), 0u);
  EXPECT_EQ(e.seq_head(), 0u);
  EXPECT_FALSE(e.domain()[0].seen);
}

TEST(Ingest, CategorizedQiNeedsCategoryIds) {
  AnonConfig c = numeric_config(2, 5, 3);
  c.quasi_identifiers = {"model"};
  c.non_categorized_attributes = {"model"};
  CastleEngine e(c);
  Message m;
  m.attributes.set("pid", "a");
  m.attributes.set("model", "e-tron 55");
  EXPECT_THROW(e.ingest(m), TypeMismatch);
  m.attributes.set("model", CategoryId{3});
  EXPECT_TRUE(e.ingest(m).empty());
}

TEST(DelayCheck, NothingExpired) {
  CastleEngine e(numeric_config(3, 10, 5));
  e.ingest(tuple(1, "a"));
  e.ingest(tuple(2, "b"));
  EXPECT_TRUE(e.delay_check().empty());
}

// k=2, delta=3, one individual only: when the first tuple expires nothing can
// make it 2-anonymous, so it leaves under the global range, flagged.
TEST(DelayCheck, SuppressionWhenTooFewIndividuals) {
  CastleEngine e(numeric_config(2, 3, 5));
  EXPECT_TRUE(e.ingest(tuple(1, "A")).empty());
  EXPECT_TRUE(e.ingest(tuple(2, "A")).empty());
  EXPECT_TRUE(e.ingest(tuple(3, "A")).empty());
  auto out = e.ingest(tuple(4, "A"));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].suppressed);
  EXPECT_EQ(out[0].arrival_index, 0u);
  EXPECT_EQ(out[0].release_index, 3u);
  EXPECT_EQ(out[0].gen, (Generalization{{Interval{1, 4}}}));
  EXPECT_EQ(e.buffered(), 3u);
}

TEST(Flush, TwoSamePidTuplesAreSuppressed) {
  CastleEngine e(numeric_config(2, 3, 5));
  e.ingest(tuple(1, "A"));
  e.ingest(tuple(2, "A"));
  auto out = e.flush();
  ASSERT_EQ(out.size(), 2u);
  for (const auto& r : out) {
    EXPECT_TRUE(r.suppressed);
    EXPECT_EQ(r.gen, (Generalization{{Interval{1, 2}}}));
  }
  EXPECT_EQ(e.buffered(), 0u);
}

// k=2: two singleton clusters with distinct individuals. When the older
// expires, it merges with the other and both leave together.
TEST(Flush, TwoSingletonsMergeThenRelease) {
  CastleEngine e(numeric_config(2, 10, 5));
  prime_zero_tau(e, 50);
  e.ingest(tuple(0, "A"));
  e.ingest(tuple(100, "B"));
  ASSERT_EQ(e.active_clusters().size(), 2u);
  auto out = e.flush();
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].cluster_id, out[1].cluster_id);
  EXPECT_FALSE(out[0].suppressed);
  EXPECT_EQ(out[0].gen, (Generalization{{Interval{0, 100}}}));
}

TEST(DelayCheck, ExpiryMergesWithCheapestPartner) {
  CastleEngine e(numeric_config(2, 2, 5));
  prime_zero_tau(e, 50);              // arrivals 0,1
  EXPECT_TRUE(e.ingest(tuple(0, "A")).empty());    // 2 -> C_a
  EXPECT_TRUE(e.ingest(tuple(100, "B")).empty());  // 3 -> C_b
  ASSERT_EQ(e.active_clusters().size(), 2u);
  // Arrival 4 opens C_c at 40; the tuple from arrival 2 is now due. Merging
  // with {40} costs 0.4, with {100} costs 1.0.
  auto out = e.ingest(tuple(40, "C"));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].gen, (Generalization{{Interval{0, 40}}}));
  EXPECT_EQ(out[0].arrival_index, 2u);
  EXPECT_EQ(out[1].arrival_index, 4u);
  ASSERT_EQ(e.active_clusters().size(), 1u);
  EXPECT_EQ(e.active_clusters()[0].gen, (Generalization{{Interval{100, 100}}}));
}

TEST(DelayCheck, ReusesReleasedGeneralization) {
  CastleEngine e(numeric_config(2, 2, 5));
  ASSERT_TRUE(e.ingest(tuple(0, "X")).empty());
  auto first = e.ingest(tuple(10, "Y"));
  ASSERT_EQ(first.size(), 2u);
  const ClusterId released_id = first[0].cluster_id;
  ASSERT_DOUBLE_EQ(e.tau(), 1.0);
  EXPECT_TRUE(e.ingest(tuple(5, "A")).empty());  // arrival 2
  EXPECT_TRUE(e.ingest(tuple(5, "A")).empty());  // arrival 3
  auto out = e.ingest(tuple(5, "A"));            // arrival 4, arrival 2 due
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].suppressed);
  EXPECT_EQ(out[0].cluster_id, released_id);
  EXPECT_EQ(out[0].gen, (Generalization{{Interval{0, 10}}}));
  EXPECT_EQ(out[0].arrival_index, 2u);
  EXPECT_EQ(e.buffered(), 2u);
  EXPECT_TRUE(e.check_invariants());
}

TEST(ReleaseCluster, RejectsUnderfilledCluster) {
  CastleEngine e(numeric_config(3, 10, 5));
  e.ingest(tuple(1, "a"));
  EXPECT_THROW(e.release_cluster(e.active_clusters()[0].id), ContractViolation);
  EXPECT_THROW(e.release_cluster(999), ContractViolation);
}

TEST(ReleaseCluster, OutputIntervalCoversMember) {
  CastleEngine e(numeric_config(2, 10, 1));
  prime_zero_tau(e, 0);
  e.ingest(tuple(2, "a"));
  e.ingest(tuple(9, "a"));
  auto out = e.ingest(tuple(4, "b"));
  ASSERT_EQ(out.size(), 3u);
  for (const auto& r : out) {
    EXPECT_EQ(r.gen, (Generalization{{Interval{2, 9}}}));
  }
}

TEST(Flush, EmptyEngine) {
  CastleEngine e(numeric_config(2, 3, 5));
  EXPECT_TRUE(e.flush().empty());
}

TEST(Tau, MeanOfLastMuLosses) {
  CastleEngine e(numeric_config(1, 1, 5, 2, false));
  Message m;
  EXPECT_EQ(e.tau(), 1.0);
  m.attributes.set("x", 0);
  e.ingest(m);  // loss 0
  EXPECT_EQ(e.tau(), 0.0);
}

// ---- randomized properties ----

struct Released {
  ReleasedTuple r;
  std::string pid;
};

TEST(CastleEngine, RandomStreamsKeepInvariants) {
  std::mt19937 rng(21);
  for (int run = 0; run < 200; ++run) {
    const std::uint32_t k = 1 + rng() % 4;
    const std::uint32_t delta = k + rng() % 12;
    const std::uint32_t beta = 1 + rng() % 5;
    const std::uint32_t mu = 1 + rng() % 6;
    AnonConfig cfg = numeric_config(k, delta, beta, mu);
    cfg.quasi_identifiers = {"x", "c"};
    cfg.non_categorized_attributes = {"c"};
    CastleEngine e(cfg);
    const int n = 20 + static_cast<int>(rng() % 80);
    const int persons = 1 + static_cast<int>(rng() % 10);
    std::vector<ReleasedTuple> out;
    for (int i = 0; i < n; ++i) {
      Message m;
      m.seq = static_cast<std::uint64_t>(i);
      m.attributes.set("pid", "p" + std::to_string(rng() % static_cast<unsigned>(persons)));
      m.attributes.set("x", static_cast<double>(rng() % 50));
      m.attributes.set("c", CategoryId{static_cast<std::uint32_t>(rng() % 5)});
      auto r = e.ingest(m);
      ASSERT_TRUE(e.check_invariants());
      ASSERT_LE(e.active_clusters().size(), beta);
      out.insert(out.end(), r.begin(), r.end());
    }
    auto rest = e.flush();
    out.insert(out.end(), rest.begin(), rest.end());
    ASSERT_EQ(out.size(), static_cast<std::size_t>(n));
    EXPECT_EQ(e.buffered(), 0u);

    std::map<std::pair<ClusterId, std::string>, std::set<std::string>> groups;
    std::set<std::uint64_t> seqs;
    for (const auto& r : out) {
      seqs.insert(r.message.seq);
      QiPoint p{QiValue{r.message.attributes.find("x")->number()},
                QiValue{r.message.attributes.find("c")->category()}};
      EXPECT_TRUE(covers(r.gen, p));
      if (!r.suppressed) {
        EXPECT_LE(r.release_index - r.arrival_index, delta);
        std::string key;
        for (const auto& q : r.gen.ranges) {
          if (const auto* iv = std::get_if<Interval>(&q)) {
            key += std::to_string(iv->lo) + ":" + std::to_string(iv->hi) + ";";
          } else {
            for (auto c : std::get<CategorySet>(q)) key += std::to_string(c.value) + ",";
          }
        }
        groups[{r.cluster_id, key}].insert(r.message.attributes.find("pid")->text());
      }
    }
    EXPECT_EQ(seqs.size(), static_cast<std::size_t>(n));
    for (const auto& [g, pids] : groups) EXPECT_GE(pids.size(), k);
  }
}

}  // namespace
}  // namespace kstream
