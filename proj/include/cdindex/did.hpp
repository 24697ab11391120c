#pragma once

// Event-time citation panels around focal grant years, the
// difference-in-differences contrast between treated and control prior art,
// and cluster (block) bootstrap uncertainty for it.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdindex/cem.hpp"
#include "cdindex/graph.hpp"

namespace cdindex {

enum class Group { treated, control };

std::string_view to_string(Group g) noexcept;

struct PanelRow {
  std::string pair_id;  ///< cluster: one focal/prior-art pair
  Group group = Group::treated;
  int event_year = 0;   ///< calendar year minus focal grant year
  std::int64_t citations = 0;
  bool truncated = false;  ///< some window years of this pair fall outside the data

  friend bool operator==(const PanelRow&, const PanelRow&) = default;
};

/// Inclusive range of event years.
struct EventWindow {
  int first = 0;
  int last = 0;

  bool contains(int e) const noexcept { return e >= first && e <= last; }
};

struct Panel {
  std::vector<PanelRow> rows;
  std::vector<std::string> truncated_pairs;
};

struct PanelOptions {
  EventWindow window{-5, 10};
  /// Calendar years outside [data_start, data_end] are unobservable.
  /// Default to the graph's grant-year range.
  std::optional<int> data_start;
  std::optional<int> data_end;
};

/// Annual citation counts to each prior-art node, from every citer in the
/// graph except the pair's own focal node, for every event year of the window.
Panel build_panel(const CitationGraph& graph, std::span<const PairLink> matched,
                  const PanelOptions& options = {});

struct DidEstimate {
  double treated_pre = 0.0;
  double treated_post = 0.0;
  double control_pre = 0.0;
  double control_post = 0.0;
  double pre_diff = 0.0;   ///< treated - control, pre window
  double post_diff = 0.0;  ///< treated - control, post window
  double did = 0.0;        ///< post_diff - pre_diff
  /// 100 * did / (control_post - control_pre); NaN when the control mean does not move.
  double relative_decline = 0.0;
  double se_bootstrap = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::size_t treated_clusters = 0;
  std::size_t control_clusters = 0;
};

/// Point estimate from group-by-window means of the panel rows.
DidEstimate did_estimate(std::span<const PanelRow> panel, EventWindow pre = {-5, -1},
                         EventWindow post = {1, 5});

struct BootstrapOptions {
  int replications = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  double confidence = 0.95;
};

/// Resamples whole clusters with replacement within each group and reports
/// the SD and percentile interval of the replicated estimates.
DidEstimate block_bootstrap(std::span<const PanelRow> panel, EventWindow pre, EventWindow post,
                            const BootstrapOptions& options = {});

/// The resampled panel used by replication `replication` (cluster ids get a
/// "#k" suffix per draw). Exposed for auditing.
std::vector<PanelRow> bootstrap_sample(std::span<const PanelRow> panel, std::uint64_t seed,
                                       int replication);

void write_panel(std::ostream& out, std::span<const PanelRow> rows);
std::vector<PanelRow> read_panel(std::istream& in);

}  // namespace cdindex
