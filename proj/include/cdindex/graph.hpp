#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdindex/tabular.hpp"

namespace cdindex {

using NodeIndex = std::uint32_t;

/// Grant year of stub nodes; orders before every real year.
inline constexpr int kUnknownYear = std::numeric_limits<int>::min();

struct NodeRecord {
  std::string id;
  int grant_year = kUnknownYear;
  std::optional<int> application_year;
  std::optional<std::string> category;
  /// Extra columns of the node file in file order.
  std::vector<std::pair<std::string, std::string>> attributes;
  /// Created for an edge endpoint missing from the node table.
  bool stub = false;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct CitationEdge {
  std::string citing;
  std::string cited;

  friend bool operator==(const CitationEdge&, const CitationEdge&) = default;
};

enum class DanglingPolicy { reject, drop, keep_as_stub };

struct EdgeLoadResult {
  std::vector<CitationEdge> edges;
  /// Placeholder records for unknown endpoints (keep_as_stub only), sorted by id.
  std::vector<NodeRecord> stubs;
  std::size_t rows_read = 0;
  std::size_t dropped = 0;
  std::size_t duplicates = 0;
};

std::vector<NodeRecord> load_nodes(std::istream& in, Delimiter delimiter = Delimiter::automatic);

EdgeLoadResult load_edges(std::istream& in, std::span<const NodeRecord> nodes,
                          DanglingPolicy policy = DanglingPolicy::drop,
                          Delimiter delimiter = Delimiter::automatic);

/// Immutable citation network. Node indices follow byte-wise id order, so
/// every adjacency list sorted by index is also sorted by id.
class CitationGraph {
 public:
  CitationGraph() = default;

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return cited_targets_.size(); }

  std::optional<NodeIndex> find(std::string_view id) const noexcept;
  /// Throws Error(unknown_node).
  NodeIndex index_of(std::string_view id) const;

  const NodeRecord& node(NodeIndex v) const { return nodes_[v]; }
  const std::string& id(NodeIndex v) const { return nodes_[v].id; }
  int grant_year(NodeIndex v) const { return years_[v]; }
  std::span<const NodeRecord> nodes() const noexcept { return nodes_; }

  /// Forward adjacency: nodes citing v.
  std::span<const NodeIndex> citers(NodeIndex v) const noexcept {
    return {citing_sources_.data() + citing_offsets_[v],
            citing_sources_.data() + citing_offsets_[v + 1]};
  }
  /// Non-stub citers of v granted in [from_year, to_year], ordered by grant
  /// year and then index.
  std::span<const NodeIndex> citers_granted(NodeIndex v, int from_year, int to_year) const noexcept;

  /// Backward adjacency: nodes cited by v.
  std::span<const NodeIndex> cited(NodeIndex v) const noexcept {
    return {cited_targets_.data() + cited_offsets_[v],
            cited_targets_.data() + cited_offsets_[v + 1]};
  }

  /// Non-stub nodes granted in `year`.
  std::span<const NodeIndex> granted_in(int year) const noexcept;

  /// Range of grant years over non-stub nodes; nullopt for an empty graph.
  std::optional<int> min_year() const noexcept;
  std::optional<int> max_year() const noexcept;

  /// Ids of nodes citing `id` with grant year in [from_year, up_to_year];
  /// a missing bound is unbounded.
  std::vector<std::string> citers_of(std::string_view id, std::optional<int> up_to_year = {},
                                     std::optional<int> from_year = {}) const;

  /// Canonical text form; equal graphs serialize to identical bytes.
  void serialize(std::ostream& out) const;

  friend CitationGraph finalize(std::vector<NodeRecord> nodes, std::span<const CitationEdge> edges);

 private:
  std::vector<NodeRecord> nodes_;
  std::vector<std::size_t> citing_offsets_;
  std::vector<NodeIndex> citing_sources_;
  std::vector<std::size_t> dated_offsets_;
  std::vector<NodeIndex> dated_sources_;
  std::vector<int> dated_years_;
  std::vector<int> years_;
  std::vector<std::size_t> cited_offsets_;
  std::vector<NodeIndex> cited_targets_;
  int first_year_ = 0;
  std::vector<std::size_t> year_offsets_;
  std::vector<NodeIndex> year_members_;
};

/// Builds the graph. Duplicate edges collapse to one; self-citations and
/// unresolved endpoints are rejected.
CitationGraph finalize(std::vector<NodeRecord> nodes, std::span<const CitationEdge> edges);

struct GraphLoadOptions {
  DanglingPolicy dangling = DanglingPolicy::drop;
  Delimiter delimiter = Delimiter::automatic;
};

struct GraphLoadReport {
  std::size_t nodes = 0;
  std::size_t edge_rows = 0;
  std::size_t edges = 0;
  std::size_t dropped = 0;
  std::size_t stubs = 0;
  std::size_t duplicates = 0;
};

/// load_nodes + load_edges + finalize over files (gzip-aware).
CitationGraph load_graph(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path,
                         const GraphLoadOptions& options = {}, GraphLoadReport* report = nullptr);

}  // namespace cdindex
