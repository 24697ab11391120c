#include "cdindex/did.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <thread>
#include <unordered_map>

#include "cdindex/error.hpp"
#include "cdindex/quantile.hpp"
#include "cdindex/rng.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

std::string_view to_string(Group g) noexcept {
  return g == Group::treated ? "treated" : "control";
}

// ---------------------------------------------------------------------------
// Panel construction

Panel build_panel(const CitationGraph& graph, std::span<const PairLink> matched,
                  const PanelOptions& options) {
  const auto& window = options.window;
  if (window.first > window.last) {
    throw Error(Errc::window_empty, "event window [" + std::to_string(window.first) + ", " +
                                        std::to_string(window.last) + "] is empty");
  }
  Panel panel;
  if (matched.empty()) return panel;

  const int data_start = options.data_start.value_or(graph.min_year().value_or(0));
  const int data_end = options.data_end.value_or(graph.max_year().value_or(0));

  std::unordered_map<std::string, int> seen;
  const auto add_cluster = [&](const std::string& focal_id, const std::string& prior_id,
                               Group group) {
    const auto f = graph.index_of(focal_id);
    const auto p = graph.index_of(prior_id);
    const int grant = graph.grant_year(f);
    if (graph.node(f).stub) throw Error(Errc::unknown_node, focal_id + " has no grant year");

    std::string pair_id = focal_id + "/" + prior_id;
    if (const int k = seen[pair_id]++; k > 0) pair_id += "#" + std::to_string(k + 1);

    std::map<int, std::int64_t> per_year;
    // The pair's own focal citation is the matching event, not an outcome.
    for (const auto c : graph.citers(p)) {
      if (c != f && !graph.node(c).stub) ++per_year[graph.grant_year(c)];
    }
    const bool truncated =
        grant + window.first < data_start || grant + window.last > data_end;
    if (truncated) panel.truncated_pairs.push_back(pair_id);
    for (int e = window.first; e <= window.last; ++e) {
      const int year = grant + e;
      if (year < data_start || year > data_end) continue;
      const auto it = per_year.find(year);
      panel.rows.push_back({pair_id, group, e, it == per_year.end() ? 0 : it->second, truncated});
    }
  };

  for (const auto& link : matched) {
    add_cluster(link.treated_focal, link.treated_prior, Group::treated);
    add_cluster(link.control_focal, link.control_prior, Group::control);
  }
  return panel;
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

struct Cluster {
  Group group = Group::treated;
  double pre_sum = 0.0;
  double pre_n = 0.0;
  double post_sum = 0.0;
  double post_n = 0.0;
  std::vector<std::size_t> rows;
};

struct ClusterTable {
  std::vector<Cluster> clusters;  // pair_id order
  std::vector<std::size_t> treated;
  std::vector<std::size_t> control;
};

void check_windows(EventWindow pre, EventWindow post) {
  if (pre.first > pre.last || post.first > post.last) {
    throw Error(Errc::window_empty, "pre or post window is empty");
  }
  if (pre.first <= post.last && post.first <= pre.last) {
    throw Error(Errc::overlapping_windows, "pre and post windows overlap");
  }
}

ClusterTable tabulate(std::span<const PanelRow> panel, EventWindow pre, EventWindow post) {
  std::map<std::string_view, std::size_t> index;
  for (const auto& row : panel) index.emplace(row.pair_id, 0);
  std::size_t next = 0;
  for (auto& [id, slot] : index) slot = next++;

  ClusterTable t;
  t.clusters.resize(index.size());
  std::vector<bool> assigned(index.size(), false);
  for (std::size_t r = 0; r < panel.size(); ++r) {
    const auto& row = panel[r];
    if (row.citations < 0) throw Error(Errc::malformed_row, "negative citation count");
    auto& c = t.clusters[index[row.pair_id]];
    if (!assigned[index[row.pair_id]]) {
      assigned[index[row.pair_id]] = true;
      c.group = row.group;
    } else if (c.group != row.group) {
      throw Error(Errc::invalid_argument, "cluster " + row.pair_id + " appears in both groups");
    }
    c.rows.push_back(r);
    const auto y = static_cast<double>(row.citations);
    if (pre.contains(row.event_year)) {
      c.pre_sum += y;
      c.pre_n += 1.0;
    } else if (post.contains(row.event_year)) {
      c.post_sum += y;
      c.post_n += 1.0;
    }
  }
  for (std::size_t i = 0; i < t.clusters.size(); ++i) {
    (t.clusters[i].group == Group::treated ? t.treated : t.control).push_back(i);
  }
  return t;
}

struct Sums {
  double pre_sum = 0.0, pre_n = 0.0, post_sum = 0.0, post_n = 0.0;
  void add(const Cluster& c) {
    pre_sum += c.pre_sum;
    pre_n += c.pre_n;
    post_sum += c.post_sum;
    post_n += c.post_n;
  }
};

DidEstimate contrast(const Sums& treated, const Sums& control) {
  DidEstimate e;
  e.treated_pre = treated.pre_sum / treated.pre_n;
  e.treated_post = treated.post_sum / treated.post_n;
  e.control_pre = control.pre_sum / control.pre_n;
  e.control_post = control.post_sum / control.post_n;
  e.pre_diff = e.treated_pre - e.control_pre;
  e.post_diff = e.treated_post - e.control_post;
  e.did = e.post_diff - e.pre_diff;
  const double growth = e.control_post - e.control_pre;
  e.relative_decline =
      growth != 0.0 ? 100.0 * e.did / growth : std::numeric_limits<double>::quiet_NaN();
  return e;
}

std::vector<std::size_t> draw(std::mt19937_64& rng, std::span<const std::size_t> members) {
  std::vector<std::size_t> picks(members.size());
  for (auto& p : picks) p = members[uniform_index(rng, members.size())];
  return picks;
}

}  // namespace

DidEstimate did_estimate(std::span<const PanelRow> panel, EventWindow pre, EventWindow post) {
  check_windows(pre, post);
  const auto table = tabulate(panel, pre, post);
  Sums treated;
  Sums control;
  for (const auto i : table.treated) treated.add(table.clusters[i]);
  for (const auto i : table.control) control.add(table.clusters[i]);
  if (table.treated.empty() || treated.pre_n == 0 || treated.post_n == 0) {
    throw Error(Errc::missing_group, "treated group has no rows in the pre or post window");
  }
  if (table.control.empty() || control.pre_n == 0 || control.post_n == 0) {
    throw Error(Errc::missing_group, "control group has no rows in the pre or post window");
  }
  auto e = contrast(treated, control);
  e.treated_clusters = table.treated.size();
  e.control_clusters = table.control.size();
  return e;
}

DidEstimate block_bootstrap(std::span<const PanelRow> panel, EventWindow pre, EventWindow post,
                            const BootstrapOptions& options) {
  if (options.replications < 100) {
    throw Error(Errc::invalid_argument, "at least 100 bootstrap replications are required");
  }
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(Errc::invalid_argument, "confidence must lie in (0, 1)");
  }
  auto estimate = did_estimate(panel, pre, post);
  const auto table = tabulate(panel, pre, post);
  if (table.treated.size() < 2 || table.control.size() < 2) {
    throw Error(Errc::too_few_clusters, "need at least 2 clusters per group, have " +
                                            std::to_string(table.treated.size()) + " treated and " +
                                            std::to_string(table.control.size()) + " control");
  }

  const auto reps = static_cast<std::size_t>(options.replications);
  std::vector<double> replicated(reps);
  const auto run = [&](std::size_t r) {
    std::mt19937_64 rng(stream_seed(options.seed, r));
    Sums t;
    Sums c;
    for (const auto i : draw(rng, table.treated)) t.add(table.clusters[i]);
    for (const auto i : draw(rng, table.control)) c.add(table.clusters[i]);
    const bool usable = t.pre_n > 0 && t.post_n > 0 && c.pre_n > 0 && c.post_n > 0;
    replicated[r] = usable ? contrast(t, c).did : std::numeric_limits<double>::quiet_NaN();
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, options.replications));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) run(r);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < reps; r += workers) run(r);
      });
    }
  }

  std::vector<double> finite;
  finite.reserve(reps);
  for (const double v : replicated) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.size() < 2) throw Error(Errc::too_few_clusters, "no usable bootstrap replications");

  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (const double v : finite) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  std::sort(finite.begin(), finite.end());
  const double tail = (1.0 - options.confidence) / 2.0;
  estimate.se_bootstrap = std::sqrt(m2 / static_cast<double>(k - 1));
  estimate.ci_low = quantile_sorted(finite, tail);
  estimate.ci_high = quantile_sorted(finite, 1.0 - tail);
  estimate.replications = options.replications;
  estimate.seed = options.seed;
  return estimate;
}

std::vector<PanelRow> bootstrap_sample(std::span<const PanelRow> panel, std::uint64_t seed,
                                       int replication) {
  // Windows do not affect which clusters are drawn.
  const auto table = tabulate(panel, {0, 0}, {1, 1});
  std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(replication)));
  std::vector<PanelRow> out;
  std::size_t draw_no = 0;
  for (const auto* members : {&table.treated, &table.control}) {
    for (const auto i : draw(rng, *members)) {
      ++draw_no;
      for (const auto r : table.clusters[i].rows) {
        auto row = panel[r];
        row.pair_id += "#" + std::to_string(draw_no);
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

void write_panel(std::ostream& out, std::span<const PanelRow> rows) {
  out << "pair_id,group,event_year,citations\n";
  for (const auto& r : rows) {
    write_field(out, r.pair_id, ',');
    out << ',' << to_string(r.group) << ',' << r.event_year << ',' << r.citations << '\n';
  }
  if (!out) throw Error(Errc::io_error, "failed writing panel");
}

std::vector<PanelRow> read_panel(std::istream& in) {
  DelimitedReader reader(in);
  std::vector<PanelRow> rows;
  if (reader.header().empty()) return rows;
  const auto need = [&](std::string_view name) {
    const auto c = reader.column(name);
    if (!c) throw Error(Errc::missing_required_column, "panel file has no '" + std::string(name) + "' column");
    return *c;
  };
  const auto c_id = need("pair_id");
  const auto c_group = need("group");
  const auto c_event = need("event_year");
  const auto c_cites = need("citations");
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto bad = [&](const std::string& what) {
      return Error(Errc::malformed_row,
                   "panel line " + std::to_string(reader.line_number()) + ": " + what);
    };
    if (f.size() < reader.header().size()) throw bad("too few fields");
    PanelRow row;
    row.pair_id = f[c_id];
    if (f[c_group] == "treated") {
      row.group = Group::treated;
    } else if (f[c_group] == "control") {
      row.group = Group::control;
    } else {
      throw bad("group must be 'treated' or 'control'");
    }
    const auto e = parse_int(f[c_event]);
    const auto y = parse_int(f[c_cites]);
    if (!e || !y) throw bad("non-integer event_year or citations");
    if (*y < 0) throw bad("negative citations");
    row.event_year = static_cast<int>(*e);
    row.citations = *y;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cdindex
