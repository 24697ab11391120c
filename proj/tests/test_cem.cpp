#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cdindex/cem.hpp"
#include "cdindex/error.hpp"

using namespace cdindex;

namespace {

std::string separation_oracle(int y) {
  if (y <= 2) return "0-2";
  if (y <= 8) return std::to_string(y);
  if (y <= 10) return "9-10";
  if (y <= 12) return "11-12";
  return "13+";
}

std::string recent_oracle(int c) {
  if (c <= 5) return std::to_string(c);
  if (c <= 7) return "6-7";
  if (c <= 10) return "8-10";
  if (c <= 16) return "11-16";
  if (c <= 45) return "17-45";
  return "46+";
}

std::string prior_count_oracle(int c) {
  if (c <= 5) return std::to_string(c);
  if (c <= 7) return "6-7";
  if (c <= 10) return "8-10";
  if (c <= 14) return "11-14";
  return "15+";
}

PairRecord pair(std::string focal, std::string prior, std::string cat, int year, int sep,
                int recent, int count) {
  PairRecord p;
  p.focal_id = std::move(focal);
  p.prior_art_id = std::move(prior);
  p.focal_category = cat;
  p.prior_art_category = cat;
  p.focal_grant_year = year;
  p.prior_art_grant_year = year - sep;
  p.separation_years = sep;
  p.prior_art_recent_cites = recent;
  p.focal_prior_art_count = count;
  return p;
}

ResultRow result(std::string id, double d) {
  ResultRow r;
  r.focal_id = std::move(id);
  r.t = 2010;
  r.result.disruptiveness = d;
  r.result.is_isolate = false;
  return r;
}

NodeRecord node(std::string id, int year, std::optional<std::string> category = "Drugs") {
  NodeRecord r;
  r.id = std::move(id);
  r.grant_year = year;
  r.category = std::move(category);
  return r;
}

}  // namespace

TEST(Bins, DocumentedExamples) {
  EXPECT_EQ(bin_separation(5), "5");
  EXPECT_EQ(bin_separation(0), "0-2");
  EXPECT_EQ(bin_recent_cites(30), "17-45");
  EXPECT_EQ(bin_prior_art_count(15), "15+");
}

TEST(Bins, ExhaustivePartition) {
  for (int v = 0; v <= 1000; ++v) {
    EXPECT_EQ(bin_separation(v), separation_oracle(v)) << v;
    if (v == 0) continue;
    EXPECT_EQ(bin_recent_cites(v), recent_oracle(v)) << v;
    EXPECT_EQ(bin_prior_art_count(v), prior_count_oracle(v)) << v;
  }
}

TEST(Bins, OutOfSupport) {
  try {
    bin_recent_cites(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::below_support);
  }
  EXPECT_THROW(bin_prior_art_count(0), Error);
  EXPECT_THROW(bin_separation(-1), Error);
  EXPECT_THROW(bin_recent_cites(-3), Error);
}

TEST(SelectTreated, ThresholdArithmetic) {
  std::vector<NodeRecord> nodes{node("p", 1980)};
  std::vector<CitationEdge> edges;
  const std::vector<std::pair<std::string, double>> values{
      {"a", 0.35}, {"b", 0.05}, {"c", 0.25}, {"d", 0.15}, {"e", 0.2}, {"f", 0.2}, {"g", -0.4}};
  std::vector<ResultRow> rows;
  for (const auto& [id, d] : values) {
    nodes.push_back(node(id, 1990));
    edges.push_back({id, "p"});
    rows.push_back(result(id, d));
  }
  const auto g = finalize(nodes, edges);
  const auto sel = select_treated(rows, g);
  EXPECT_NEAR(sel.mean, 0.2, 1e-12);
  EXPECT_NEAR(sel.sd, 0.1, 1e-12);
  EXPECT_EQ(sel.reference_rows, 6u);
  EXPECT_EQ(sel.treated, std::vector<std::string>{"a"});
}

TEST(SelectTreated, RequiresPriorArt) {
  const std::vector<NodeRecord> nodes{node("p", 1980), node("a", 1990), node("b", 1990), node("z", 1990)};
  const std::vector<CitationEdge> edges{{"a", "p"}, {"b", "p"}};
  const auto g = finalize(nodes, edges);
  const std::vector<ResultRow> rows{result("a", 0.1), result("b", 0.2), result("z", 0.9), result("a", 0.1)};
  TreatmentCriteria c;
  c.threshold_sd = 0.5;
  try {
    select_treated(rows, g, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_result_set);
  }
  c.require_prior_art = false;
  EXPECT_EQ(select_treated(rows, g, c).treated, std::vector<std::string>{"z"});
}

TEST(SelectTreated, AllNegative) {
  const auto g = finalize({node("a", 1990)}, {});
  const std::vector<ResultRow> rows{result("a", -0.5)};
  try {
    select_treated(rows, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_result_set);
  }
}

TEST(BuildPairs, Attributes) {
  // F (1995) cites P1 (1990) and P2 (1980). P1 is cited in 1993, 1994 and
  // 1996; the recent window 1993-1995 holds those two and F itself. P2 is
  // cited by F alone.
  std::vector<NodeRecord> nodes{node("F", 1995), node("P1", 1990, "Chem"), node("P2", 1980),
                                node("x93", 1993), node("x94", 1994), node("x96", 1996),
                                node("G", 1995), node("P3", 1980)};
  const std::vector<CitationEdge> edges{{"F", "P1"}, {"F", "P2"}, {"x93", "P1"}, {"x94", "P1"},
                                        {"x96", "P1"}, {"G", "P3"}};
  const auto g = finalize(nodes, edges);
  const std::string focal[] = {"F"};
  const auto b = build_pairs(g, focal);
  ASSERT_EQ(b.pairs.size(), 2u);
  const auto& p = b.pairs[0];
  EXPECT_EQ(p.prior_art_id, "P1");
  EXPECT_EQ(p.prior_art_category, "Chem");
  EXPECT_EQ(p.separation_years, 5);
  EXPECT_EQ(p.prior_art_recent_cites, 3);
  EXPECT_EQ(p.focal_prior_art_count, 2);
  EXPECT_EQ(b.pairs[1].prior_art_recent_cites, 1);
  EXPECT_EQ(b.pairs[1].separation_years, 15);

  PairOptions o;
  o.min_prior_art_year = 1985;
  const auto filtered = build_pairs(g, focal, o);
  EXPECT_EQ(filtered.before_min_year, 1u);
  EXPECT_EQ(filtered.pairs.size(), 1u);

  o = {};
  const std::string other[] = {"G"};
  o.max_focal_year = 1990;
  EXPECT_EQ(build_pairs(g, other, o).after_max_focal_year, 1u);
}

TEST(Match, UniqueControlIsDeterministic) {
  const std::vector<PairRecord> treated{pair("T", "P", "Drugs", 1990, 5, 3, 2)};
  const std::vector<PairRecord> control{pair("C", "Q", "Drugs", 1990, 5, 3, 2),
                                        pair("D", "R", "Drugs", 1991, 5, 3, 2)};
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto r = match(treated, control, seed);
    ASSERT_EQ(r.matched.size(), 1u);
    EXPECT_EQ(r.matched[0].control.focal_id, "C");
    EXPECT_TRUE(r.unmatched.empty());
  }
}

TEST(Match, EmptyStratumIsUnmatched) {
  const std::vector<PairRecord> treated{pair("T", "P", "Drugs", 1990, 5, 3, 2)};
  const std::vector<PairRecord> control{pair("C", "Q", "Other", 1990, 5, 3, 2)};
  const auto r = match(treated, control, 1);
  EXPECT_TRUE(r.matched.empty());
  ASSERT_EQ(r.unmatched.size(), 1u);
  EXPECT_EQ(r.unmatched[0].focal_id, "T");
}

TEST(Match, BinnedValuesShareAStratum) {
  const std::vector<PairRecord> treated{pair("T", "P", "Drugs", 1990, 9, 20, 6)};
  const std::vector<PairRecord> control{pair("C", "Q", "Drugs", 1990, 10, 44, 7)};
  EXPECT_EQ(match(treated, control, 1).matched.size(), 1u);
}

TEST(Match, OverlappingPools) {
  const std::vector<PairRecord> both{pair("T", "P", "Drugs", 1990, 5, 3, 2)};
  try {
    match(both, both, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::overlapping_pools);
  }
}

TEST(Match, CountsFollowStratumOccupancy) {
  std::mt19937_64 rng(31);
  const char* cats[] = {"A", "B", "C"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PairRecord> treated;
    std::vector<PairRecord> control;
    std::map<std::string, std::pair<int, int>> occupancy;
    for (int s = 0; s < 12; ++s) {
      const std::string cat = cats[s % 3];
      const int year = 1990 + s / 3;
      const int t = static_cast<int>(rng() % 6);
      const int c = static_cast<int>(rng() % 6);
      const auto key = cat + std::to_string(year);
      occupancy[key] = {t, c};
      for (int k = 0; k < t; ++k) {
        treated.push_back(pair("t" + key + "-" + std::to_string(k), "p", cat, year, 4, 12, 3));
      }
      for (int k = 0; k < c; ++k) {
        control.push_back(pair("c" + key + "-" + std::to_string(k), "p", cat, year, 4, 12, 3));
      }
    }
    std::size_t expected = 0;
    for (const auto& [key, tc] : occupancy) expected += static_cast<std::size_t>(std::min(tc.first, tc.second));
    const auto r = match(treated, control, rng());
    EXPECT_EQ(r.matched.size(), expected);
    EXPECT_EQ(r.matched.size() + r.unmatched.size(), treated.size());
    std::set<std::string> used;
    for (const auto& m : r.matched) {
      EXPECT_EQ(stratum_key(m.treated), stratum_key(m.control));
      EXPECT_EQ(m.key, stratum_key(m.treated));
      EXPECT_TRUE(used.insert(m.control.focal_id).second) << "control reused";
    }
  }
}

TEST(Match, WithReplacementMatchesEveryTreatedInOccupiedStrata) {
  std::vector<PairRecord> treated;
  for (int k = 0; k < 5; ++k) treated.push_back(pair("t" + std::to_string(k), "p", "A", 1990, 4, 2, 1));
  const std::vector<PairRecord> control{pair("c", "p", "A", 1990, 4, 2, 1)};
  EXPECT_EQ(match(treated, control, 1).matched.size(), 1u);
  EXPECT_EQ(match(treated, control, 1, true).matched.size(), 5u);
}

TEST(Match, SameSeedSameBytes) {
  std::vector<PairRecord> treated;
  std::vector<PairRecord> control;
  for (int k = 0; k < 30; ++k) treated.push_back(pair("t" + std::to_string(k), "p", "A", 1990, k % 4, 2, 1));
  for (int k = 0; k < 50; ++k) control.push_back(pair("c" + std::to_string(k), "p", "A", 1990, k % 4, 2, 1));
  std::ostringstream a;
  std::ostringstream b;
  write_matched(a, match(treated, control, 42).matched);
  write_matched(b, match(treated, control, 42).matched);
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_matched(c, match(treated, control, 43).matched);
  EXPECT_NE(a.str(), c.str());
}

TEST(Match, ControlDrawsAreUniform) {
  const std::vector<PairRecord> treated{pair("t", "p", "A", 1990, 4, 2, 1)};
  std::vector<PairRecord> control;
  for (int k = 0; k < 4; ++k) control.push_back(pair("c" + std::to_string(k), "p", "A", 1990, 4, 2, 1));
  std::map<std::string, int> hits;
  constexpr int kRuns = 8000;
  for (int s = 0; s < kRuns; ++s) ++hits[match(treated, control, static_cast<std::uint64_t>(s)).matched[0].control.focal_id];
  // Chi-square with 3 df; 16.27 is the 0.999 quantile.
  double chi2 = 0.0;
  for (const auto& [id, h] : hits) chi2 += (h - kRuns / 4.0) * (h - kRuns / 4.0) / (kRuns / 4.0);
  EXPECT_EQ(hits.size(), 4u);
  EXPECT_LT(chi2, 16.27);
}

TEST(PairFiles, RoundTrip) {
  const std::vector<PairRecord> pairs{pair("T", "P", "Drugs, etc", 1990, 5, 3, 2),
                                      pair("U", "Q", "Other", 1991, 13, 50, 20)};
  std::stringstream buf;
  write_pairs(buf, pairs);
  EXPECT_EQ(read_pairs(buf), pairs);

  std::stringstream matched;
  const auto r = match({&pairs[0], 1}, {&pairs[1], 1}, 1);
  write_matched(matched, r.matched);
  EXPECT_TRUE(read_matched(matched).empty());
}
