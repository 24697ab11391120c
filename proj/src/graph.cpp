#include "cdindex/graph.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <unordered_set>

#include "cdindex/error.hpp"

namespace cdindex {

namespace {

std::string row_context(std::size_t line) {
  return "line " + std::to_string(line);
}

const std::string& field_at(const std::vector<std::string>& fields, std::size_t col,
                            std::size_t line) {
  if (col >= fields.size()) {
    throw Error(Errc::malformed_row, row_context(line) + ": expected at least " +
                                         std::to_string(col + 1) + " fields, got " +
                                         std::to_string(fields.size()));
  }
  return fields[col];
}

}  // namespace

std::vector<NodeRecord> load_nodes(std::istream& in, Delimiter delimiter) {
  DelimitedReader reader(in, delimiter);
  std::vector<NodeRecord> nodes;
  if (reader.header().empty()) return nodes;

  const auto id_col = reader.column("id");
  const auto grant_col = reader.column("grant_year");
  if (!id_col) throw Error(Errc::missing_required_column, "node file has no 'id' column");
  if (!grant_col) throw Error(Errc::missing_required_column, "node file has no 'grant_year' column");
  const auto app_col = reader.column("application_year");
  const auto cat_col = reader.column("category");

  std::vector<std::size_t> extra_cols;
  for (std::size_t c = 0; c < reader.header().size(); ++c) {
    if (c != *id_col && c != *grant_col && c != app_col && c != cat_col) extra_cols.push_back(c);
  }

  std::unordered_set<std::string> seen;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const auto line = reader.line_number();
    if (fields.size() != reader.header().size()) {
      throw Error(Errc::malformed_row, row_context(line) + ": expected " +
                                           std::to_string(reader.header().size()) +
                                           " fields, got " + std::to_string(fields.size()));
    }
    NodeRecord node;
    node.id = field_at(fields, *id_col, line);
    if (node.id.empty()) throw Error(Errc::malformed_row, row_context(line) + ": empty id");

    const auto grant = parse_year(field_at(fields, *grant_col, line));
    if (!grant) {
      throw Error(Errc::malformed_row,
                  row_context(line) + ": bad grant_year '" + fields[*grant_col] + "'");
    }
    node.grant_year = *grant;

    if (app_col && !fields[*app_col].empty()) {
      const auto app = parse_year(fields[*app_col]);
      if (!app) {
        throw Error(Errc::malformed_row,
                    row_context(line) + ": bad application_year '" + fields[*app_col] + "'");
      }
      if (*app > node.grant_year) {
        throw Error(Errc::malformed_row, row_context(line) + ": application_year " +
                                             std::to_string(*app) + " after grant_year " +
                                             std::to_string(node.grant_year));
      }
      node.application_year = *app;
    }
    if (cat_col && !fields[*cat_col].empty()) node.category = fields[*cat_col];
    for (const auto c : extra_cols) node.attributes.emplace_back(reader.header()[c], fields[c]);

    if (!seen.insert(node.id).second) throw Error(Errc::duplicate_id, node.id);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

EdgeLoadResult load_edges(std::istream& in, std::span<const NodeRecord> nodes,
                          DanglingPolicy policy, Delimiter delimiter) {
  DelimitedReader reader(in, delimiter);
  EdgeLoadResult result;
  if (reader.header().empty()) return result;

  const auto citing_col = reader.column("citing");
  const auto cited_col = reader.column("cited");
  if (!citing_col) throw Error(Errc::missing_required_column, "edge file has no 'citing' column");
  if (!cited_col) throw Error(Errc::missing_required_column, "edge file has no 'cited' column");

  std::unordered_set<std::string_view> known;
  known.reserve(nodes.size());
  for (const auto& n : nodes) known.insert(n.id);

  std::unordered_set<std::string> stub_ids;
  std::vector<std::pair<std::string, std::string>> accepted;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const auto line = reader.line_number();
    ++result.rows_read;
    std::string citing = field_at(fields, *citing_col, line);
    std::string cited = field_at(fields, *cited_col, line);
    if (citing.empty() || cited.empty()) {
      throw Error(Errc::malformed_row, row_context(line) + ": empty endpoint");
    }
    if (citing == cited) throw Error(Errc::self_citation, row_context(line) + ": " + citing);

    const bool citing_known = known.contains(citing);
    const bool cited_known = known.contains(cited);
    if (!citing_known || !cited_known) {
      const auto& missing = citing_known ? cited : citing;
      switch (policy) {
        case DanglingPolicy::reject:
          throw Error(Errc::dangling_endpoint, row_context(line) + ": unknown node '" + missing + "'");
        case DanglingPolicy::drop:
          ++result.dropped;
          continue;
        case DanglingPolicy::keep_as_stub:
          if (!citing_known) stub_ids.insert(citing);
          if (!cited_known) stub_ids.insert(cited);
          break;
      }
    }
    accepted.emplace_back(std::move(citing), std::move(cited));
  }

  // Citation lists are sets; keep the first occurrence of each pair.
  std::vector<std::size_t> order(accepted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return accepted[a] < accepted[b]; });
  std::vector<bool> keep(accepted.size(), true);
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (accepted[order[i]] == accepted[order[i - 1]]) {
      keep[order[i]] = false;
      ++result.duplicates;
    }
  }
  result.edges.reserve(accepted.size() - result.duplicates);
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (keep[i]) {
      result.edges.push_back({std::move(accepted[i].first), std::move(accepted[i].second)});
    }
  }

  std::vector<std::string> sorted_stubs(stub_ids.begin(), stub_ids.end());
  std::sort(sorted_stubs.begin(), sorted_stubs.end());
  for (auto& id : sorted_stubs) {
    NodeRecord stub;
    stub.id = std::move(id);
    stub.stub = true;
    result.stubs.push_back(std::move(stub));
  }
  return result;
}

CitationGraph finalize(std::vector<NodeRecord> nodes, std::span<const CitationEdge> edges) {
  CitationGraph g;
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].id == nodes[i - 1].id) throw Error(Errc::duplicate_id, nodes[i].id);
  }
  for (const auto& n : nodes) {
    if (n.id.empty()) throw Error(Errc::malformed_row, "empty node id");
    if (!n.stub && n.application_year && *n.application_year > n.grant_year) {
      throw Error(Errc::malformed_row, n.id + ": application_year after grant_year");
    }
  }
  if (nodes.size() >= std::numeric_limits<NodeIndex>::max()) {
    throw Error(Errc::invalid_argument, "too many nodes");
  }
  g.nodes_ = std::move(nodes);
  const auto n = g.nodes_.size();

  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;  // (citing, cited)
  pairs.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.citing == e.cited) throw Error(Errc::self_citation, e.citing);
    const auto u = g.find(e.citing);
    const auto v = g.find(e.cited);
    if (!u || !v) {
      throw Error(Errc::dangling_endpoint,
                  "edge " + e.citing + " -> " + e.cited + " references an unknown node");
    }
    pairs.emplace_back(*u, *v);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  // Backward CSR straight from the sorted pair list.
  g.cited_offsets_.assign(n + 1, 0);
  g.cited_targets_.reserve(pairs.size());
  for (const auto& [u, v] : pairs) {
    ++g.cited_offsets_[u + 1];
    g.cited_targets_.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) g.cited_offsets_[i + 1] += g.cited_offsets_[i];

  // Forward CSR by counting sort on the cited endpoint; iterating pairs in
  // citing order keeps every bucket sorted.
  g.citing_offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : pairs) ++g.citing_offsets_[v + 1];
  for (std::size_t i = 0; i < n; ++i) g.citing_offsets_[i + 1] += g.citing_offsets_[i];
  g.citing_sources_.resize(pairs.size());
  std::vector<std::size_t> cursor(g.citing_offsets_.begin(), g.citing_offsets_.end() - 1);
  for (const auto& [u, v] : pairs) g.citing_sources_[cursor[v]++] = u;

  g.years_.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.years_[i] = g.nodes_[i].grant_year;

  // Second forward CSR without stub citers, each bucket ordered by grant
  // year so a year window is a binary search.
  g.dated_offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : pairs) {
    if (!g.nodes_[u].stub) ++g.dated_offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.dated_offsets_[i + 1] += g.dated_offsets_[i];
  g.dated_sources_.resize(g.dated_offsets_.back());
  g.dated_years_.resize(g.dated_offsets_.back());
  cursor.assign(g.dated_offsets_.begin(), g.dated_offsets_.end() - 1);
  for (const auto& [u, v] : pairs) {
    if (!g.nodes_[u].stub) g.dated_sources_[cursor[v]++] = u;
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto first = g.dated_sources_.begin() + static_cast<std::ptrdiff_t>(g.dated_offsets_[v]);
    const auto last = g.dated_sources_.begin() + static_cast<std::ptrdiff_t>(g.dated_offsets_[v + 1]);
    std::stable_sort(first, last, [&](NodeIndex a, NodeIndex b) { return g.years_[a] < g.years_[b]; });
    for (auto k = g.dated_offsets_[v]; k < g.dated_offsets_[v + 1]; ++k) {
      g.dated_years_[k] = g.years_[g.dated_sources_[k]];
    }
  }

  std::optional<int> lo;
  std::optional<int> hi;
  for (const auto& node : g.nodes_) {
    if (node.stub) continue;
    lo = lo ? std::min(*lo, node.grant_year) : node.grant_year;
    hi = hi ? std::max(*hi, node.grant_year) : node.grant_year;
  }
  if (lo) {
    g.first_year_ = *lo;
    const auto span = static_cast<std::size_t>(*hi - *lo + 1);
    g.year_offsets_.assign(span + 1, 0);
    for (const auto& node : g.nodes_) {
      if (!node.stub) ++g.year_offsets_[static_cast<std::size_t>(node.grant_year - *lo) + 1];
    }
    for (std::size_t i = 0; i < span; ++i) g.year_offsets_[i + 1] += g.year_offsets_[i];
    g.year_members_.resize(g.year_offsets_.back());
    std::vector<std::size_t> ycur(g.year_offsets_.begin(), g.year_offsets_.end() - 1);
    for (NodeIndex v = 0; v < n; ++v) {
      const auto& node = g.nodes_[v];
      if (!node.stub) g.year_members_[ycur[static_cast<std::size_t>(node.grant_year - *lo)]++] = v;
    }
  }
  return g;
}

std::optional<NodeIndex> CitationGraph::find(std::string_view id) const noexcept {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const NodeRecord& r, std::string_view key) { return r.id < key; });
  if (it == nodes_.end() || it->id != id) return std::nullopt;
  return static_cast<NodeIndex>(it - nodes_.begin());
}

NodeIndex CitationGraph::index_of(std::string_view id) const {
  if (const auto v = find(id)) return *v;
  throw Error(Errc::unknown_node, std::string(id));
}

std::span<const NodeIndex> CitationGraph::citers_granted(NodeIndex v, int from_year,
                                                          int to_year) const noexcept {
  const auto years_first = dated_years_.begin() + static_cast<std::ptrdiff_t>(dated_offsets_[v]);
  const auto years_last = dated_years_.begin() + static_cast<std::ptrdiff_t>(dated_offsets_[v + 1]);
  const auto lo = std::lower_bound(years_first, years_last, from_year);
  const auto hi = std::upper_bound(lo, years_last, to_year);
  const auto begin = dated_sources_.data() + (lo - dated_years_.begin());
  return {begin, static_cast<std::size_t>(hi - lo)};
}

std::span<const NodeIndex> CitationGraph::granted_in(int year) const noexcept {
  if (year_offsets_.empty() || year < first_year_) return {};
  const auto slot = static_cast<std::size_t>(static_cast<long long>(year) - first_year_);
  if (slot + 1 >= year_offsets_.size()) return {};
  return {year_members_.data() + year_offsets_[slot], year_members_.data() + year_offsets_[slot + 1]};
}

std::optional<int> CitationGraph::min_year() const noexcept {
  if (year_offsets_.empty()) return std::nullopt;
  return first_year_;
}

std::optional<int> CitationGraph::max_year() const noexcept {
  if (year_offsets_.empty()) return std::nullopt;
  return first_year_ + static_cast<int>(year_offsets_.size()) - 2;
}

std::vector<std::string> CitationGraph::citers_of(std::string_view id, std::optional<int> up_to_year,
                                                  std::optional<int> from_year) const {
  const auto v = index_of(id);
  std::vector<std::string> out;
  for (const auto c : citers(v)) {
    const int y = nodes_[c].grant_year;
    if (up_to_year && y > *up_to_year) continue;
    if (from_year && y < *from_year) continue;
    out.push_back(nodes_[c].id);
  }
  return out;
}

void CitationGraph::serialize(std::ostream& out) const {
  out << "nodes " << nodes_.size() << '\n';
  for (const auto& n : nodes_) {
    out << n.id << '\t' << (n.stub ? std::string("?") : std::to_string(n.grant_year)) << '\t'
        << (n.application_year ? std::to_string(*n.application_year) : "") << '\t'
        << n.category.value_or("");
    for (const auto& [k, v] : n.attributes) out << '\t' << k << '=' << v;
    out << '\n';
  }
  out << "edges " << edge_count() << '\n';
  for (NodeIndex u = 0; u < nodes_.size(); ++u) {
    for (const auto v : cited(u)) out << nodes_[u].id << '\t' << nodes_[v].id << '\n';
  }
}

CitationGraph load_graph(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path, const GraphLoadOptions& options,
                         GraphLoadReport* report) {
  auto node_stream = open_input(nodes_path);
  auto nodes = load_nodes(*node_stream, options.delimiter);
  auto edge_stream = open_input(edges_path);
  auto loaded = load_edges(*edge_stream, nodes, options.dangling, options.delimiter);

  GraphLoadReport local;
  local.nodes = nodes.size();
  local.edge_rows = loaded.rows_read;
  local.dropped = loaded.dropped;
  local.stubs = loaded.stubs.size();
  local.duplicates = loaded.duplicates;
  for (auto& s : loaded.stubs) nodes.push_back(std::move(s));

  auto graph = finalize(std::move(nodes), loaded.edges);
  local.edges = graph.edge_count();
  if (local.dropped > 0) {
    spdlog::info("dropped {} edges with an endpoint missing from {}", local.dropped,
                 nodes_path.string());
  }
  if (local.stubs > 0) spdlog::info("created {} stub nodes for unknown endpoints", local.stubs);
  if (local.duplicates > 0) spdlog::info("collapsed {} duplicate edges", local.duplicates);
  if (report != nullptr) *report = local;
  return graph;
}

}  // namespace cdindex
