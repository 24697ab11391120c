#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "cdindex/did.hpp"
#include "cdindex/error.hpp"

using namespace cdindex;

namespace {

NodeRecord node(std::string id, int year) {
  NodeRecord r;
  r.id = std::move(id);
  r.grant_year = year;
  return r;
}

/// Adds one cluster with `pre` citations in each pre year and a per-year
/// post series.
void add_cluster(std::vector<PanelRow>& panel, const std::string& id, Group g, EventWindow pre,
                 std::int64_t pre_value, EventWindow post, const std::vector<std::int64_t>& post_values) {
  for (int e = pre.first; e <= pre.last; ++e) panel.push_back({id, g, e, pre_value, false});
  for (int e = post.first; e <= post.last; ++e) {
    panel.push_back({id, g, e, post_values[static_cast<std::size_t>(e - post.first) % post_values.size()], false});
  }
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

constexpr EventWindow kPre{-4, -1};
constexpr EventWindow kPost{1, 4};

std::vector<PanelRow> zero_noise_panel() {
  std::vector<PanelRow> panel;
  for (int k = 0; k < 10; ++k) {
    add_cluster(panel, "t" + std::to_string(k), Group::treated, kPre, 2, kPost, {2, 1});
    add_cluster(panel, "c" + std::to_string(k), Group::control, kPre, 2, kPost, {2});
  }
  return panel;
}

}  // namespace

TEST(Panel, CountsCitationsByEventYear) {
  const std::vector<NodeRecord> nodes{node("F", 1995), node("P", 1990), node("x94", 1994),
                                      node("x96a", 1996), node("x96b", 1996), node("G", 1995),
                                      node("Q", 1990)};
  const std::vector<CitationEdge> edges{{"F", "P"}, {"x94", "P"}, {"x96a", "P"}, {"x96b", "P"},
                                        {"G", "Q"}};
  const auto g = finalize(nodes, edges);
  PanelOptions o;
  o.data_start = 1980;
  o.data_end = 2010;
  const std::vector<PairLink> links{{"F", "P", "G", "Q"}};
  const auto panel = build_panel(g, links, o);
  EXPECT_TRUE(panel.truncated_pairs.empty());
  ASSERT_EQ(panel.rows.size(), 32u);
  for (const auto& row : panel.rows) {
    if (row.group == Group::control) {
      EXPECT_EQ(row.citations, 0);
      continue;
    }
    const std::int64_t want = row.event_year == -1 ? 1 : row.event_year == 1 ? 2 : 0;
    EXPECT_EQ(row.citations, want) << row.event_year;
  }
}

TEST(Panel, TruncatedAtDataStart) {
  // Data begins in 1990; a focal granted 1992 loses event years -5..-3.
  std::vector<NodeRecord> nodes{node("F", 1992), node("P", 1990), node("G", 1999), node("Q", 1990)};
  std::vector<CitationEdge> edges{{"F", "P"}, {"G", "Q"}};
  std::map<int, int> per_year;
  for (int y = 1990; y <= 2005; ++y) {
    for (int k = 0; k < (y % 3) + 1; ++k) {
      const auto id = "c" + std::to_string(y) + "-" + std::to_string(k);
      nodes.push_back(node(id, y));
      edges.push_back({id, "P"});
      ++per_year[y];
    }
  }
  const auto g = finalize(nodes, edges);
  const std::vector<PairLink> links{{"F", "P", "G", "Q"}};
  const auto panel = build_panel(g, links);
  EXPECT_EQ(panel.truncated_pairs, (std::vector<std::string>{"F/P", "G/Q"}));
  int first_event = 100;
  for (const auto& row : panel.rows) {
    if (row.pair_id != "F/P") continue;
    EXPECT_TRUE(row.truncated);
    first_event = std::min(first_event, row.event_year);
    EXPECT_EQ(row.citations, per_year[1992 + row.event_year]);
  }
  EXPECT_EQ(first_event, -2);
}

TEST(Panel, EmptyMatchedSet) {
  const auto g = finalize({node("A", 1990)}, {});
  EXPECT_TRUE(build_panel(g, {}).rows.empty());
  PanelOptions bad;
  bad.window = {3, 1};
  const std::vector<PairLink> links{{"A", "A", "A", "A"}};
  EXPECT_EQ(code_of([&] { build_panel(g, links, bad); }), Errc::window_empty);
}

TEST(Panel, FileRoundTrip) {
  const auto panel = zero_noise_panel();
  std::stringstream buf;
  write_panel(buf, panel);
  EXPECT_EQ(read_panel(buf), panel);
}

TEST(Did, ZeroNoiseRecoversEffect) {
  const auto panel = zero_noise_panel();
  const auto e = did_estimate(panel, kPre, kPost);
  EXPECT_EQ(e.did, -0.5);
  EXPECT_EQ(e.treated_clusters, 10u);
  BootstrapOptions o;
  o.replications = 200;
  const auto b = block_bootstrap(panel, kPre, kPost, o);
  EXPECT_EQ(b.did, -0.5);
  EXPECT_EQ(b.se_bootstrap, 0.0);
  EXPECT_EQ(b.ci_low, -0.5);
  EXPECT_EQ(b.ci_high, -0.5);
}

TEST(Did, IdenticalGroupsGiveZero) {
  std::vector<PanelRow> panel;
  for (int k = 0; k < 4; ++k) {
    add_cluster(panel, "t" + std::to_string(k), Group::treated, kPre, k, kPost, {k + 1, k});
    add_cluster(panel, "c" + std::to_string(k), Group::control, kPre, k, kPost, {k + 1, k});
  }
  EXPECT_EQ(did_estimate(panel, kPre, kPost).did, 0.0);
}

TEST(Did, PublishedGapArithmetic) {
  // 100 clusters per group. Control: 1 citation a year before, 2 after.
  // Treated: 4 clusters have none before, 33 have only one after.
  std::vector<PanelRow> panel;
  const EventWindow pre{-5, -1};
  const EventWindow post{1, 5};
  for (int k = 0; k < 100; ++k) {
    add_cluster(panel, "c" + std::to_string(k), Group::control, pre, 1, post, {2});
    add_cluster(panel, "t" + std::to_string(k), Group::treated, pre, k < 4 ? 0 : 1, post, {k < 33 ? 1 : 2});
  }
  const auto e = did_estimate(panel, pre, post);
  EXPECT_NEAR(e.pre_diff, -0.04, 1e-12);
  EXPECT_NEAR(e.post_diff, -0.33, 1e-12);
  EXPECT_NEAR(e.did, -0.29, 1e-12);
  EXPECT_NEAR(e.relative_decline, -29.0, 1e-9);
}

TEST(Did, Errors) {
  std::vector<PanelRow> only_treated;
  add_cluster(only_treated, "t", Group::treated, kPre, 1, kPost, {1});
  EXPECT_EQ(code_of([&] { did_estimate(only_treated, kPre, kPost); }), Errc::missing_group);
  EXPECT_EQ(code_of([&] { did_estimate(only_treated, {-2, 1}, {1, 3}); }), Errc::overlapping_windows);

  std::vector<PanelRow> one_each;
  add_cluster(one_each, "t", Group::treated, kPre, 1, kPost, {1});
  add_cluster(one_each, "c", Group::control, kPre, 1, kPost, {1});
  EXPECT_EQ(code_of([&] { block_bootstrap(one_each, kPre, kPost); }), Errc::too_few_clusters);
  BootstrapOptions few;
  few.replications = 10;
  EXPECT_EQ(code_of([&] { block_bootstrap(zero_noise_panel(), kPre, kPost, few); }),
            Errc::invalid_argument);
}

TEST(Bootstrap, SeededAndWorkerIndependent) {
  std::vector<PanelRow> panel;
  std::mt19937_64 rng(6);
  for (int k = 0; k < 40; ++k) {
    add_cluster(panel, "t" + std::to_string(k), Group::treated, kPre, static_cast<std::int64_t>(rng() % 5),
                kPost, {static_cast<std::int64_t>(rng() % 4), static_cast<std::int64_t>(rng() % 6)});
    add_cluster(panel, "c" + std::to_string(k), Group::control, kPre, static_cast<std::int64_t>(rng() % 5),
                kPost, {static_cast<std::int64_t>(rng() % 7)});
  }
  BootstrapOptions o;
  o.replications = 300;
  o.seed = 17;
  const auto a = block_bootstrap(panel, kPre, kPost, o);
  const auto b = block_bootstrap(panel, kPre, kPost, o);
  o.workers = 4;
  const auto c = block_bootstrap(panel, kPre, kPost, o);
  EXPECT_GT(a.se_bootstrap, 0.0);
  EXPECT_EQ(a.se_bootstrap, b.se_bootstrap);
  EXPECT_EQ(a.ci_low, c.ci_low);
  EXPECT_EQ(a.ci_high, c.ci_high);
  EXPECT_EQ(a.se_bootstrap, c.se_bootstrap);
  EXPECT_LE(a.ci_low, a.did);
  EXPECT_GE(a.ci_high, a.did);

  // Rebuilding every replication from the audited resample reproduces the SE.
  double mean = 0.0;
  double m2 = 0.0;
  for (int r = 0; r < o.replications; ++r) {
    const double d = did_estimate(bootstrap_sample(panel, o.seed, r), kPre, kPost).did;
    const double delta = d - mean;
    mean += delta / (r + 1);
    m2 += delta * (d - mean);
  }
  EXPECT_NEAR(std::sqrt(m2 / (o.replications - 1)), a.se_bootstrap, 1e-12);
}
