#pragma once

// Coarsened exact matching of (focal, prior-art) pairs. A treated pair is
// matched to a control pair only when both fall into the same cell of:
// focal category, prior-art category, focal grant year, and the binned
// separation, recent prior-art citations and focal prior-art count.

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdindex/batch.hpp"
#include "cdindex/graph.hpp"

namespace cdindex {

struct PairRecord {
  std::string focal_id;
  std::string prior_art_id;
  std::string focal_category;
  std::string prior_art_category;
  int focal_grant_year = 0;
  int prior_art_grant_year = 0;
  int separation_years = 0;       ///< focal grant year - prior-art grant year
  int prior_art_recent_cites = 0; ///< citations to the prior art near focal issue
  int focal_prior_art_count = 0;  ///< prior art cited by the focal node

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct StratumKey {
  std::string focal_category;
  std::string prior_art_category;
  int focal_grant_year = 0;
  std::string separation_bin;
  std::string recent_cites_bin;
  std::string prior_art_count_bin;

  auto operator<=>(const StratumKey&) const = default;
  std::string to_string() const;
};

/// Bins: 0-2, 3, 4, 5, 6, 7, 8, 9-10, 11-12, 13+.
std::string_view bin_separation(int years);
/// Bins: 1, 2, 3, 4, 5, 6-7, 8-10, 11-16, 17-45, 46+. Zero is BelowSupport.
std::string_view bin_recent_cites(int count);
/// Bins: 1, 2, 3, 4, 5, 6-7, 8-10, 11-14, 15+. Zero is BelowSupport.
std::string_view bin_prior_art_count(int count);

StratumKey stratum_key(const PairRecord& pair);

struct TreatmentCriteria {
  double threshold_sd = 1.0;
  /// Compute mean and SD over positive-disruptiveness rows only.
  bool require_positive = true;
  /// Focal node must cite at least one prior-art node.
  bool require_prior_art = true;
  bool require_category = true;
};

struct TreatmentSelection {
  std::vector<std::string> treated;  ///< ascending id order
  std::size_t reference_rows = 0;    ///< rows entering the mean and SD
  double mean = 0.0;
  double sd = 0.0;
  double cutoff = 0.0;               ///< mean + threshold_sd * sd
};

/// Focal nodes with disruptiveness strictly above the cutoff. Throws
/// Error(empty_result_set) when nothing qualifies.
TreatmentSelection select_treated(std::span<const ResultRow> results, const CitationGraph& graph,
                                  const TreatmentCriteria& criteria = {});

struct PairOptions {
  /// Drop pairs whose prior art was granted before this year.
  std::optional<int> min_prior_art_year;
  /// Drop focal nodes granted after this year.
  std::optional<int> max_focal_year;
  /// Recent citations counted over this many years ending at the focal grant year.
  int recent_window_years = 3;
};

struct PairBuild {
  std::vector<PairRecord> pairs;
  std::vector<PairRecord> below_support;
  std::size_t missing_category = 0;
  std::size_t before_min_year = 0;
  std::size_t after_max_focal_year = 0;
  std::size_t negative_separation = 0;
};

/// One record per (focal, cited prior art) for the given focal nodes, in
/// (focal, prior) id order.
PairBuild build_pairs(const CitationGraph& graph, std::span<const std::string> focal_ids,
                      const PairOptions& options = {});

struct MatchedPair {
  PairRecord treated;
  PairRecord control;
  StratumKey key;
};

struct MatchResult {
  std::vector<MatchedPair> matched;
  std::vector<PairRecord> unmatched;
  std::size_t strata = 0;  ///< distinct treated strata
};

/// Matches every treated pair to a control pair with an identical stratum
/// key, drawing controls uniformly with the seeded generator. Without
/// replacement each control is used at most once.
MatchResult match(std::span<const PairRecord> treated, std::span<const PairRecord> control,
                  std::uint64_t seed, bool with_replacement = false);

void write_pairs(std::ostream& out, std::span<const PairRecord> pairs);
std::vector<PairRecord> read_pairs(std::istream& in);

void write_matched(std::ostream& out, std::span<const MatchedPair> matched);

/// Identifier columns of a matched-pairs file.
struct PairLink {
  std::string treated_focal;
  std::string treated_prior;
  std::string control_focal;
  std::string control_prior;
};

std::vector<PairLink> read_matched(std::istream& in);

}  // namespace cdindex
