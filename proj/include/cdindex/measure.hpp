#pragma once

// Disruptiveness and radicalness of a focal node set.
//
// A focal set (size m) cites its prior art (size q). Every node outside the
// focal set that cites a focal member or a prior-art member is a forward
// citer; each citer i contributes the term -2*f_i*b_i + f_i. Disruptiveness
// averages the terms over the n citers; radicalness sums them divided by a
// per-citer weight.
//
// Two incidence treatments are supported:
//   indicator   f_i, b_i in {0,1}: does i cite the focal set / any prior art.
//   fractional  f_i = (focal members cited)/m, b_i = (prior art cited)/q for
//               disruptiveness; radicalness uses the raw tie counts.
// The automatic mode picks indicator for m = 1 and fractional otherwise.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cdindex/graph.hpp"

namespace cdindex {

enum class CiterWindow {
  post_grant,  ///< citers granted no earlier than the latest focal grant
  all_years,
};

enum class Incidence { automatic, indicator, fractional };

std::string_view to_string(CiterWindow w) noexcept;
std::string_view to_string(Incidence i) noexcept;

struct ContextOptions {
  CiterWindow window = CiterWindow::post_grant;
  Incidence incidence = Incidence::automatic;
  /// Let focal members count as citers of one another.
  bool include_focal_citers = false;
};

struct CiterRow {
  NodeIndex citer = 0;
  int grant_year = 0;
  std::uint32_t focal_hits = 0;  ///< focal members cited by this citer
  std::uint32_t prior_hits = 0;  ///< prior-art members cited by this citer

  friend bool operator==(const CiterRow&, const CiterRow&) = default;
};

struct ClassCounts {
  std::size_t focal_only = 0;
  std::size_t prior_only = 0;
  std::size_t both = 0;
};

class FocalContext {
 public:
  /// Assembles a context from its parts. Throws on an empty focal set, a row
  /// that cites neither class, or hit counts larger than their class.
  FocalContext(std::vector<NodeIndex> focal_set, std::vector<NodeIndex> prior_art, int horizon_year,
               std::vector<CiterRow> citers, Incidence incidence = Incidence::automatic);

  std::span<const NodeIndex> focal_set() const noexcept { return focal_; }
  std::span<const NodeIndex> prior_art() const noexcept { return prior_; }
  std::span<const CiterRow> citers() const noexcept { return citers_; }
  int horizon_year() const noexcept { return horizon_; }
  /// Resolved treatment, never automatic.
  Incidence incidence() const noexcept { return incidence_; }

  std::size_t m() const noexcept { return m_; }
  std::size_t q() const noexcept { return q_; }
  std::size_t n() const noexcept { return citers_.size(); }
  bool is_isolate() const noexcept { return citers_.empty(); }

  double f(const CiterRow& row) const noexcept;
  double b(const CiterRow& row) const noexcept;

  ClassCounts counts() const noexcept;

  /// Same context seen at an earlier horizon: drops citers granted after `year`.
  FocalContext at_horizon(int year) const;
  /// Collapses each class to a single 0/1 indicator column (m = 1, q <= 1).
  FocalContext collapsed() const;
  FocalContext with_incidence(Incidence incidence) const;

 private:
  FocalContext() = default;

  std::vector<NodeIndex> focal_;
  std::vector<NodeIndex> prior_;
  std::vector<CiterRow> citers_;
  int horizon_ = 0;
  std::size_t m_ = 0;
  std::size_t q_ = 0;
  Incidence incidence_ = Incidence::indicator;
};

/// Reusable scratch space for building many contexts over one graph. Not
/// thread-safe; use one builder per worker.
class ContextBuilder {
 public:
  explicit ContextBuilder(const CitationGraph& graph);

  FocalContext build(std::span<const NodeIndex> focal_set, int horizon_year,
                     const ContextOptions& options = {});

 private:
  void next_epoch();

  const CitationGraph& graph_;
  std::uint32_t epoch_ = 0;
  // Per-node scratch packed together so a citer visit touches one line.
  struct Slot {
    std::uint32_t member_epoch = 0;
    std::uint32_t touched_epoch = 0;
    std::uint32_t focal_hits = 0;
    std::uint32_t prior_hits = 0;
    std::uint8_t member_kind = 0;
  };
  std::vector<Slot> slots_;
  std::vector<NodeIndex> touched_;
};

FocalContext build_context(const CitationGraph& graph, std::span<const std::string> focal_ids,
                           int horizon_year, const ContextOptions& options = {});

struct WeightScheme {
  enum class Kind { uniform, age_decay, custom_table };

  Kind kind = Kind::uniform;
  double constant = 1.0;
  double half_life = 10.0;
  std::shared_ptr<const std::unordered_map<std::string, double>> table;
  /// Weight for citers absent from the table.
  double table_default = 1.0;

  static WeightScheme uniform(double value = 1.0);
  /// w_i = 2^((t - grant_year_i) / half_life).
  static WeightScheme age_decay(double half_life_years);
  static WeightScheme custom(std::unordered_map<std::string, double> weights,
                             double fallback = 1.0);
};

std::string describe(const WeightScheme& scheme);

/// One weight per citer row of `ctx`, in row order. Throws
/// Error(non_positive_weight) naming the first offending citer.
std::vector<double> resolve_weights(const WeightScheme& scheme, const CitationGraph& graph,
                                    const FocalContext& ctx);

/// Dispatches on the context's incidence. Zero for a context without citers.
double disruptiveness(const FocalContext& ctx);

/// Indicator form: sum of (-2 f b + f) over binary f, b, divided by n.
double disruptiveness_indicator(const FocalContext& ctx);

/// Incidence-matrix form over per-citer tie fractions, divided by n.
double disruptiveness_generalized(const FocalContext& ctx);

/// Sum of (-2 f b + f) / w_i. `weights` holds one positive value per citer.
double radicalness(const FocalContext& ctx, std::span<const double> weights);
double radicalness(const FocalContext& ctx, const WeightScheme& scheme, const CitationGraph& graph);

struct MeasureResult {
  double disruptiveness = 0.0;
  double radicalness = 0.0;
  std::size_t n_citers = 0;
  std::size_t count_focal_only = 0;
  std::size_t count_prior_only = 0;
  std::size_t count_both = 0;
  bool is_isolate = true;
  int horizon_year = 0;
  std::size_t focal_size = 0;
  std::size_t prior_art_size = 0;
};

MeasureResult measure(const FocalContext& ctx, std::span<const double> weights);
MeasureResult measure(const FocalContext& ctx, const WeightScheme& scheme, const CitationGraph& graph);

struct TimePoint {
  int year = 0;
  MeasureResult result;
};

/// One result per year in [from_year, to_year], each at horizon = that year.
std::vector<TimePoint> disruptiveness_timeseries(const CitationGraph& graph,
                                                 std::span<const NodeIndex> focal_set,
                                                 int from_year, int to_year,
                                                 const ContextOptions& options = {},
                                                 const WeightScheme& scheme = {});

std::vector<TimePoint> disruptiveness_timeseries(const CitationGraph& graph,
                                                 std::span<const std::string> focal_ids,
                                                 int from_year, int to_year,
                                                 const ContextOptions& options = {},
                                                 const WeightScheme& scheme = {});

}  // namespace cdindex
