#include "cdindex/cli.hpp"

#include <openssl/evp.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "cdindex/batch.hpp"
#include "cdindex/cem.hpp"
#include "cdindex/did.hpp"
#include "cdindex/error.hpp"
#include "cdindex/graph.hpp"
#include "cdindex/measure.hpp"
#include "cdindex/stats.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kVersion = "1.0.0";

std::string round2(double v) {
  const std::string s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

/// "A:B" with optional signs on either side.
std::pair<int, int> parse_range(const std::string& text, std::string_view flag) {
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) {
    throw CLI::ValidationError(std::string(flag), "expected FROM:TO, got '" + text + "'");
  }
  const auto a = parse_int(text.substr(0, colon));
  const auto b = parse_int(text.substr(colon + 1));
  if (!a || !b) throw CLI::ValidationError(std::string(flag), "expected integers in '" + text + "'");
  return {static_cast<int>(*a), static_cast<int>(*b)};
}

// ---------------------------------------------------------------------------
// Shared option groups

struct GraphFlags {
  std::string nodes;
  std::string edges;
  std::string delimiter = "auto";
  std::string dangling = "drop";

  void add(CLI::App& app, bool required = true) {
    auto* n = app.add_option("--nodes", nodes, "Node file (id, grant_year[, application_year, category, ...])");
    auto* e = app.add_option("--edges", edges, "Edge file (citing, cited)");
    if (required) {
      n->required();
      e->required();
    }
    app.add_option("--delimiter", delimiter, "Input delimiter")
        ->check(CLI::IsMember({"auto", "comma", "tab"}))
        ->capture_default_str();
    app.add_option("--dangling", dangling, "Edges with an unknown endpoint")
        ->check(CLI::IsMember({"reject", "drop", "stub"}))
        ->capture_default_str();
  }

  Delimiter delim() const {
    if (delimiter == "comma") return Delimiter::comma;
    if (delimiter == "tab") return Delimiter::tab;
    return Delimiter::automatic;
  }

  CitationGraph load() const {
    GraphLoadOptions opts;
    opts.delimiter = delim();
    opts.dangling = dangling == "reject" ? DanglingPolicy::reject
                    : dangling == "stub" ? DanglingPolicy::keep_as_stub
                                         : DanglingPolicy::drop;
    GraphLoadReport report;
    auto g = load_graph(nodes, edges, opts, &report);
    spdlog::info("loaded {} nodes, {} edges ({} dropped, {} stubs)", report.nodes, report.edges,
                 report.dropped, report.stubs);
    return g;
  }

  void echo(Json& j) const {
    j["nodes"] = nodes;
    j["edges"] = edges;
    j["delimiter"] = delimiter;
    j["dangling"] = dangling;
  }
};

struct MeasureFlags {
  std::optional<int> t;
  std::string window = "post";
  std::string incidence = "auto";
  bool include_focal_citers = false;
  std::string weights = "uniform";
  double uniform_weight = 1.0;
  double half_life = 10.0;
  double table_default = 1.0;
  unsigned workers = 1;
  std::string format = "csv";

  void add(CLI::App& app) {
    app.add_option("--t", t, "Horizon year (default: latest grant year in the graph)");
    app.add_option("--window", window, "Citer window: post = citers granted no earlier than the focal node")
        ->check(CLI::IsMember({"post", "all"}))
        ->capture_default_str();
    app.add_option("--incidence", incidence,
                   "auto = indicator for one focal node, fractional for focal sets")
        ->check(CLI::IsMember({"auto", "indicator", "fractional"}))
        ->capture_default_str();
    app.add_flag("--include-focal-citers", include_focal_citers,
                 "Count focal-set members as citers of one another");
    app.add_option("--weights", weights, "uniform | age-decay | table:FILE")->capture_default_str();
    app.add_option("--uniform-weight", uniform_weight, "Constant for uniform weights")->capture_default_str();
    app.add_option("--half-life", half_life, "Half-life in years for age-decay weights")->capture_default_str();
    app.add_option("--table-default", table_default, "Weight for citers missing from a weight table")
        ->capture_default_str();
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--format", format, "Result format")
        ->check(CLI::IsMember({"csv", "jsonl"}))
        ->capture_default_str();
  }

  ContextOptions context() const {
    ContextOptions o;
    o.window = window == "all" ? CiterWindow::all_years : CiterWindow::post_grant;
    o.incidence = incidence == "indicator"    ? Incidence::indicator
                  : incidence == "fractional" ? Incidence::fractional
                                              : Incidence::automatic;
    o.include_focal_citers = include_focal_citers;
    return o;
  }

  std::string table_path() const {
    return weights.rfind("table:", 0) == 0 ? weights.substr(6) : std::string();
  }

  WeightScheme scheme() const {
    if (weights == "uniform") return WeightScheme::uniform(uniform_weight);
    if (weights == "age-decay") return WeightScheme::age_decay(half_life);
    const auto path = table_path();
    if (path.empty()) {
      throw CLI::ValidationError("--weights", "expected uniform, age-decay or table:FILE");
    }
    auto in = open_input(path);
    DelimitedReader reader(*in);
    const auto id_col = reader.column("id");
    const auto w_col = reader.column("weight");
    if (!id_col || !w_col) {
      throw Error(Errc::missing_required_column, "weight table needs 'id' and 'weight' columns");
    }
    std::unordered_map<std::string, double> table;
    std::vector<std::string> f;
    while (reader.next(f)) {
      const auto w = f.size() > *w_col ? parse_double(f[*w_col]) : std::nullopt;
      if (!w || f.size() <= *id_col) {
        throw Error(Errc::malformed_row, "weight table line " + std::to_string(reader.line_number()));
      }
      table[f[*id_col]] = *w;
    }
    return WeightScheme::custom(std::move(table), table_default);
  }

  void echo(Json& j, int effective_t) const {
    j["t"] = effective_t;
    j["window"] = window;
    j["incidence"] = incidence;
    j["include_focal_citers"] = include_focal_citers;
    j["weights"] = weights;
    j["uniform_weight"] = uniform_weight;
    j["half_life"] = half_life;
    j["table_default"] = table_default;
    j["workers"] = workers;
    j["format"] = format;
  }
};

struct SelectionFlags {
  std::string focal;
  std::string focal_set;
  bool all = false;
  std::string ids;
  std::string years;
  std::size_t top_cited = 0;

  void add(CLI::App& app) {
    auto* f = app.add_option("--focal", focal, "Single focal node id");
    auto* s = app.add_option("--focal-set", focal_set, "Comma-separated ids forming one focal set");
    auto* a = app.add_flag("--all", all, "Every dated node");
    auto* i = app.add_option("--ids", ids, "Comma-separated ids, or @FILE with one id per line");
    auto* y = app.add_option("--years", years, "Nodes granted in FROM:TO");
    auto* k = app.add_option("--top-cited", top_cited, "The K most-cited nodes");
    for (auto* opt : {f, s, a, i, y, k}) {
      for (auto* other : {f, s, a, i, y, k}) {
        if (opt != other) opt->excludes(other);
      }
    }
  }

  std::vector<std::string> id_list() const {
    if (ids.empty() || ids.front() != '@') return split_list(ids);
    auto in = open_input(ids.substr(1));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(*in, line)) {
      const auto t = trim(line);
      if (!t.empty()) out.emplace_back(t);
    }
    return out;
  }

  Selection selection() const {
    if (!focal.empty()) return Selection::of_ids({focal});
    if (!ids.empty()) return Selection::of_ids(id_list());
    if (!years.empty()) {
      const auto [a, b] = parse_range(years, "--years");
      return Selection::granted_between(a, b);
    }
    if (top_cited > 0) return Selection::most_cited(top_cited);
    return Selection::everything();
  }

  void echo(Json& j) const {
    if (!focal.empty()) j["focal"] = focal;
    if (!focal_set.empty()) j["focal_set"] = split_list(focal_set);
    if (!ids.empty()) j["ids"] = ids;
    if (!years.empty()) j["years"] = years;
    if (top_cited > 0) j["top_cited"] = top_cited;
    if (all || (focal.empty() && focal_set.empty() && ids.empty() && years.empty() && top_cited == 0)) {
      j["all"] = true;
    }
  }
};

// ---------------------------------------------------------------------------
// Output plumbing

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw Error(Errc::io_error, "cannot write " + path);
      stream_ = file_.get();
    }
  }

  std::ostream& stream() { return *stream_; }
  bool to_file() const { return file_ != nullptr; }

  void close() {
    if (file_) {
      file_->close();
      if (!*file_) throw Error(Errc::io_error, "failed writing " + path_);
    }
  }

 private:
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::unique_ptr<ResultSink> make_sink(const std::string& format, std::ostream& out) {
  if (format == "jsonl") return std::make_unique<JsonlResultWriter>(out);
  return std::make_unique<CsvResultWriter>(out);
}

void write_config_echo(const std::string& out_path, Json config,
                       const std::vector<std::string>& inputs, std::ostream& err) {
  Json digests = Json::object();
  for (const auto& path : inputs) {
    if (!path.empty()) digests[path] = file_digest(path);
  }
  config["version"] = kVersion;
  config["inputs"] = std::move(digests);
  const auto text = config.dump(2) + "\n";
  if (out_path.empty()) {
    err << "config: " << config.dump() << '\n';
    return;
  }
  const auto echo_path = out_path + ".config.json";
  std::ofstream f(echo_path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) throw Error(Errc::io_error, "cannot write " + echo_path);
}

int horizon_or_default(const CitationGraph& g, const std::optional<int>& t) {
  if (t) return *t;
  if (const auto y = g.max_year()) return *y;
  throw Error(Errc::empty_selection, "graph has no dated nodes");
}

std::string focal_label(const std::vector<std::string>& ids) {
  std::string label;
  for (const auto& id : ids) label += (label.empty() ? "" : "+") + id;
  return label;
}

void print_measure(std::ostream& out, const std::string& label, const MeasureResult& r) {
  out << fmt::format(
      "focal {}  t={}  disruptiveness {}  radicalness {}  n={} (focal-only {}, prior-only {}, both {}){}\n",
      label, r.horizon_year, round2(r.disruptiveness), round2(r.radicalness), r.n_citers,
      r.count_focal_only, r.count_prior_only, r.count_both, r.is_isolate ? "  isolate" : "");
}

// ---------------------------------------------------------------------------
// Subcommands

struct ComputeCommand {
  GraphFlags graph;
  MeasureFlags measure;
  SelectionFlags select;
  std::string out;
  bool timeseries = false;
  std::optional<int> from;
  std::optional<int> to;

  int run(std::ostream& stdout_, std::ostream& err) const {
    const auto g = graph.load();
    auto opts = measure.context();
    const auto scheme = measure.scheme();
    int horizon = horizon_or_default(g, timeseries && to ? to : measure.t);
    Output output(out, stdout_);
    std::ostream& report = output.to_file() ? stdout_ : err;

    if (!select.focal_set.empty()) {
      const auto ids = split_list(select.focal_set);
      if (ids.empty()) throw Error(Errc::empty_focal_set, "--focal-set is empty");
      const auto label = focal_label(ids);
      auto sink = make_sink(measure.format, output.stream());
      sink->begin(timeseries);
      if (ids.size() > 1 && opts.incidence != Incidence::indicator) {
        spdlog::info("focal set of {} nodes: using the generalized incidence-matrix form", ids.size());
      }
      MeasureResult final_result;
      if (timeseries) {
        std::vector<NodeIndex> focal;
        int start = kUnknownYear;
        for (const auto& id : ids) {
          focal.push_back(g.index_of(id));
          start = std::max(start, g.grant_year(focal.back()));
        }
        const auto series = disruptiveness_timeseries(g, focal, from.value_or(start), horizon, opts, scheme);
        for (const auto& p : series) sink->write({label, horizon, p.year, p.result, {}});
        final_result = series.back().result;
      } else {
        const auto ctx = build_context(g, ids, horizon, opts);
        final_result = cdindex::measure(ctx, scheme, g);
        sink->write({label, horizon, std::nullopt, final_result, {}});
      }
      sink->finish();
      output.close();
      print_measure(report, label, final_result);
    } else {
      BatchJob job;
      job.selection = select.selection();
      job.horizon_year = horizon;
      job.context = opts;
      job.weights = scheme;
      job.emit_timeseries = timeseries;
      job.series_from = from;
      job.worker_count = measure.workers;
      auto sink = make_sink(measure.format, output.stream());
      if (!select.focal.empty()) {
        VectorSink rows;
        run_batch(g, job, rows);
        sink->begin(timeseries);
        for (const auto& row : rows.rows) sink->write(row);
        sink->finish();
        output.close();
        const auto& last = rows.rows.back();
        if (!last.ok()) throw Error(Errc::unknown_node, last.error);
        print_measure(report, last.focal_id, last.result);
      } else {
        const auto s = run_batch(g, job, *sink);
        output.close();
        report << fmt::format(
            "focal nodes {}  rows {}  errors {}  isolates {}  t={}\n"
            "disruptiveness mean {}  sd {}  min {}  max {}\n"
            "citer classes: focal-only {}  prior-only {}  both {}\n"
            "wall time {:.3f}s on {} workers\n",
            s.focal_count, s.rows, s.error_rows, s.isolates, s.horizon_year,
            round2(s.mean_disruptiveness), round2(s.sd_disruptiveness), round2(s.min_disruptiveness),
            round2(s.max_disruptiveness), s.total_focal_only, s.total_prior_only, s.total_both,
            s.wall_seconds, measure.workers);
      }
    }

    Json config;
    config["command"] = timeseries ? "timeseries" : "compute";
    graph.echo(config);
    measure.echo(config, horizon);
    select.echo(config);
    if (timeseries && from) config["from"] = *from;
    config["out"] = out;
    std::vector<std::string> inputs{graph.nodes, graph.edges};
    if (!measure.table_path().empty()) inputs.push_back(measure.table_path());
    if (!select.ids.empty() && select.ids.front() == '@') inputs.push_back(select.ids.substr(1));
    write_config_echo(out, std::move(config), inputs, err);
    return kExitOk;
  }
};

struct MatchCommand {
  GraphFlags graph;
  std::string results;
  std::string pairs_in;
  std::string out;
  std::string unmatched_out;
  std::string pairs_out;
  double threshold_sd = 1.0;
  bool keep_nonpositive = false;
  std::optional<int> min_prior_art_year;
  std::optional<int> max_focal_year;
  int recent_window = 3;
  std::uint64_t seed = 1;
  bool with_replacement = false;

  int run(std::ostream& stdout_, std::ostream& err) const {
    const auto g = graph.load();
    std::vector<ResultRow> rows;
    {
      auto in = open_input(results);
      rows = read_results(*in);
    }
    TreatmentCriteria criteria;
    criteria.threshold_sd = threshold_sd;
    criteria.require_positive = !keep_nonpositive;
    const auto sel = select_treated(rows, g, criteria);

    PairOptions popts;
    popts.min_prior_art_year = min_prior_art_year;
    popts.max_focal_year = max_focal_year;
    popts.recent_window_years = recent_window;

    std::vector<PairRecord> treated;
    std::vector<PairRecord> control;
    std::size_t below_support = 0;
    if (!pairs_in.empty()) {
      auto in = open_input(pairs_in);
      const auto all = read_pairs(*in);
      for (const auto& p : all) {
        if (p.prior_art_recent_cites == 0 || p.focal_prior_art_count == 0) {
          ++below_support;
          continue;
        }
        const bool is_treated = std::binary_search(sel.treated.begin(), sel.treated.end(), p.focal_id);
        (is_treated ? treated : control).push_back(p);
      }
    } else {
      std::vector<std::string> others;
      for (const auto& n : g.nodes()) {
        if (!n.stub && !std::binary_search(sel.treated.begin(), sel.treated.end(), n.id)) {
          others.push_back(n.id);
        }
      }
      auto t = build_pairs(g, sel.treated, popts);
      auto c = build_pairs(g, others, popts);
      below_support = t.below_support.size() + c.below_support.size();
      treated = std::move(t.pairs);
      control = std::move(c.pairs);
      if (!pairs_out.empty()) {
        std::vector<PairRecord> all = treated;
        all.insert(all.end(), control.begin(), control.end());
        std::sort(all.begin(), all.end(), [](const PairRecord& a, const PairRecord& b) {
          return std::tie(a.focal_id, a.prior_art_id) < std::tie(b.focal_id, b.prior_art_id);
        });
        Output po(pairs_out, stdout_);
        write_pairs(po.stream(), all);
        po.close();
      }
    }
    if (below_support > 0) {
      spdlog::warn("{} pairs below bin support (no recent citations or no prior art) excluded",
                   below_support);
    }

    const auto result = match(treated, control, seed, with_replacement);
    Output output(out, stdout_);
    write_matched(output.stream(), result.matched);
    output.close();
    if (!unmatched_out.empty()) {
      Output u(unmatched_out, stdout_);
      write_pairs(u.stream(), result.unmatched);
      u.close();
    }

    std::vector<std::string> unmatched_focal;
    for (const auto& p : result.unmatched) unmatched_focal.push_back(p.focal_id);
    std::sort(unmatched_focal.begin(), unmatched_focal.end());
    unmatched_focal.erase(std::unique(unmatched_focal.begin(), unmatched_focal.end()), unmatched_focal.end());

    std::ostream& report = output.to_file() ? stdout_ : err;
    report << fmt::format(
        "treated focal nodes {} (cutoff {} = mean {} + {} sd {}, over {} rows)\n"
        "treated pairs {}  control pairs {}  strata {}\n"
        "matched {}  unmatched pairs {}  (focal nodes with an unmatched pair: {})\n",
        sel.treated.size(), format_double(sel.cutoff), round2(sel.mean), format_double(threshold_sd),
        round2(sel.sd), sel.reference_rows, treated.size(), control.size(), result.strata,
        result.matched.size(), result.unmatched.size(), unmatched_focal.size());

    Json config;
    config["command"] = "match";
    graph.echo(config);
    config["results"] = results;
    config["pairs"] = pairs_in;
    config["threshold_sd"] = threshold_sd;
    config["require_positive"] = !keep_nonpositive;
    config["min_prior_art_year"] = min_prior_art_year ? Json(*min_prior_art_year) : Json(nullptr);
    config["max_focal_year"] = max_focal_year ? Json(*max_focal_year) : Json(nullptr);
    config["recent_window"] = recent_window;
    config["seed"] = seed;
    config["with_replacement"] = with_replacement;
    config["out"] = out;
    write_config_echo(out, std::move(config), {graph.nodes, graph.edges, results, pairs_in}, err);
    return kExitOk;
  }
};

struct DidCommand {
  GraphFlags graph;
  std::string panel_in;
  std::string matched;
  std::string panel_out;
  std::string window = "-5:10";
  std::string pre = "-5:-1";
  std::string post = "1:5";
  std::optional<int> data_start;
  int reps = 1000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out;

  int run(std::ostream& stdout_, std::ostream& err) const {
    std::vector<PanelRow> rows;
    std::size_t truncated = 0;
    if (!panel_in.empty()) {
      auto in = open_input(panel_in);
      rows = read_panel(*in);
    } else {
      if (graph.nodes.empty() || graph.edges.empty() || matched.empty()) {
        throw CLI::ValidationError("did", "either --panel or --nodes, --edges and --matched are required");
      }
      const auto g = graph.load();
      std::vector<PairLink> links;
      {
        auto in = open_input(matched);
        links = read_matched(*in);
      }
      PanelOptions popts;
      const auto [a, b] = parse_range(window, "--window");
      popts.window = {a, b};
      popts.data_start = data_start;
      auto panel = build_panel(g, links, popts);
      truncated = panel.truncated_pairs.size();
      rows = std::move(panel.rows);
      if (!panel_out.empty()) {
        Output po(panel_out, stdout_);
        write_panel(po.stream(), rows);
        po.close();
      }
    }
    const auto [pre_a, pre_b] = parse_range(pre, "--pre");
    const auto [post_a, post_b] = parse_range(post, "--post");
    BootstrapOptions bopts;
    bopts.replications = reps;
    bopts.seed = seed;
    bopts.workers = workers;
    const auto e = block_bootstrap(rows, {pre_a, pre_b}, {post_a, post_b}, bopts);

    const auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json report;
    report["pre_window"] = {pre_a, pre_b};
    report["post_window"] = {post_a, post_b};
    report["treated_pre_mean"] = num(e.treated_pre);
    report["treated_post_mean"] = num(e.treated_post);
    report["control_pre_mean"] = num(e.control_pre);
    report["control_post_mean"] = num(e.control_post);
    report["pre_diff"] = num(e.pre_diff);
    report["post_diff"] = num(e.post_diff);
    report["did"] = num(e.did);
    report["relative_decline_pct"] = num(e.relative_decline);
    report["se_bootstrap"] = num(e.se_bootstrap);
    report["ci_low"] = num(e.ci_low);
    report["ci_high"] = num(e.ci_high);
    report["replications"] = e.replications;
    report["seed"] = e.seed;
    report["treated_clusters"] = e.treated_clusters;
    report["control_clusters"] = e.control_clusters;
    report["panel_rows"] = rows.size();
    report["truncated_pairs"] = truncated;

    Output output(out, stdout_);
    output.stream() << report.dump(2) << '\n';
    output.close();
    std::ostream& summary = output.to_file() ? stdout_ : err;
    summary << fmt::format("              pre     post\n"
                           "treated  {:>8} {:>8}\n"
                           "control  {:>8} {:>8}\n"
                           "diff     {:>8} {:>8}\n"
                           "did {}  se {}  95% ci [{}, {}]  ({} reps)\n",
                           round2(e.treated_pre), round2(e.treated_post), round2(e.control_pre),
                           round2(e.control_post), round2(e.pre_diff), round2(e.post_diff),
                           round2(e.did), round2(e.se_bootstrap), round2(e.ci_low),
                           round2(e.ci_high), e.replications);

    Json config;
    config["command"] = "did";
    if (panel_in.empty()) {
      graph.echo(config);
      config["matched"] = matched;
      config["window"] = window;
      config["data_start"] = data_start ? Json(*data_start) : Json(nullptr);
    } else {
      config["panel"] = panel_in;
    }
    config["pre"] = pre;
    config["post"] = post;
    config["reps"] = reps;
    config["seed"] = seed;
    config["workers"] = workers;
    config["out"] = out;
    write_config_echo(out, std::move(config), {graph.nodes, graph.edges, matched, panel_in}, err);
    return kExitOk;
  }
};

struct StatsCommand {
  std::string results;
  std::string nodes;
  std::string vars = "disruptiveness,radicalness,n";
  std::string by_year;
  std::string value = "disruptiveness";
  std::string quantiles;
  std::string format = "text";
  std::string out;

  int run(std::ostream& stdout_, std::ostream& err) const {
    DataTable table;
    {
      auto in = open_input(results);
      table = DataTable::read(*in);
    }
    if (!nodes.empty()) join_nodes(table);

    Output output(out, stdout_);
    auto& os = output.stream();
    if (!by_year.empty()) {
      std::vector<double> q(std::begin(kDefaultQuantiles), std::end(kDefaultQuantiles));
      if (!quantiles.empty()) {
        q.clear();
        for (const auto& s : split_list(quantiles)) {
          const auto v = parse_double(s);
          if (!v) throw CLI::ValidationError("--quantiles", "not a number: " + s);
          q.push_back(*v);
        }
      }
      const auto d = yearly_distribution(table, value, by_year, q);
      if (format == "json") {
        os << render_json(d, q) << '\n';
      } else if (format == "csv") {
        render_csv(os, d, q);
      } else {
        render_text(os, d, q);
      }
    } else {
      const auto names = split_list(vars);
      const auto s = summarize(table, names);
      for (const auto& w : s.warnings) spdlog::warn("{}", w);
      if (format == "json") {
        os << render_json(s) << '\n';
      } else if (format == "csv") {
        render_csv(os, s);
      } else {
        render_text(os, s);
      }
    }
    output.close();

    Json config;
    config["command"] = "stats";
    config["results"] = results;
    config["nodes"] = nodes;
    config["vars"] = vars;
    config["by_year"] = by_year;
    config["value"] = value;
    config["quantiles"] = quantiles;
    config["format"] = format;
    config["out"] = out;
    write_config_echo(out, std::move(config), {results, nodes}, err);
    return kExitOk;
  }

  /// Adds grant_year, application_year and numeric node attributes by focal id.
  void join_nodes(DataTable& table) const {
    auto in = open_input(nodes);
    const auto records = load_nodes(*in);
    std::unordered_map<std::string_view, const NodeRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);
    const auto key = table.has("focal_id") ? "focal_id" : "id";
    const auto ids = table.text(key);

    std::vector<std::string> attribute_names;
    for (const auto& r : records) {
      for (const auto& [k, v] : r.attributes) {
        if (std::find(attribute_names.begin(), attribute_names.end(), k) == attribute_names.end()) {
          attribute_names.push_back(k);
        }
      }
    }
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> grant(table.rows(), nan);
    std::vector<double> app(table.rows(), nan);
    std::vector<std::vector<double>> extra(attribute_names.size(), std::vector<double>(table.rows(), nan));
    for (std::size_t row = 0; row < table.rows(); ++row) {
      const auto it = by_id.find(ids[row]);
      if (it == by_id.end()) continue;
      grant[row] = it->second->grant_year;
      if (it->second->application_year) app[row] = *it->second->application_year;
      for (const auto& [k, v] : it->second->attributes) {
        const auto slot = std::find(attribute_names.begin(), attribute_names.end(), k) - attribute_names.begin();
        if (const auto d = parse_double(v)) extra[static_cast<std::size_t>(slot)][row] = *d;
      }
    }
    table.add_column("grant_year", std::move(grant));
    table.add_column("application_year", std::move(app));
    for (std::size_t i = 0; i < attribute_names.size(); ++i) {
      table.add_column(attribute_names[i], std::move(extra[i]));
    }
  }
};

void configure_logging(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("cdindex", sink);
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("CDINDEX_LOG");
  logger->set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
  spdlog::set_default_logger(logger);
}

}  // namespace

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  configure_logging(err);

  CLI::App app{"Disruptiveness and radicalness of nodes in citation networks", "cdindex"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ComputeCommand compute;
  auto* c = app.add_subcommand("compute", "Disruptiveness/radicalness for one focal node, a focal set, or a batch");
  compute.graph.add(*c);
  compute.measure.add(*c);
  compute.select.add(*c);
  c->add_option("--out", compute.out, "Result file (default: standard output)");

  ComputeCommand series;
  series.timeseries = true;
  auto* ts = app.add_subcommand("timeseries", "Per-year disruptiveness trajectories");
  series.graph.add(*ts);
  series.measure.add(*ts);
  series.select.add(*ts);
  ts->add_option("--from", series.from, "First year (default: focal grant year)");
  ts->add_option("--to", series.to, "Last year (default: --t or the latest grant year)");
  ts->add_option("--out", series.out, "Result file (default: standard output)");

  MatchCommand matcher;
  auto* m = app.add_subcommand("match", "Treated selection and coarsened exact matching of prior-art pairs");
  matcher.graph.add(*m);
  m->add_option("--results", matcher.results, "Result file from compute")->required();
  m->add_option("--pairs", matcher.pairs_in, "Precomputed pair attribute file");
  m->add_option("--out", matcher.out, "Matched-pairs file (default: standard output)");
  m->add_option("--unmatched-out", matcher.unmatched_out, "Unmatched treated pairs");
  m->add_option("--pairs-out", matcher.pairs_out, "Write the pair attributes used for matching");
  m->add_option("--threshold-sd", matcher.threshold_sd, "SDs above the mean for treatment")->capture_default_str();
  m->add_flag("--keep-nonpositive", matcher.keep_nonpositive,
              "Compute the treatment cutoff over all rows, not just positive ones");
  m->add_option("--min-prior-art-year", matcher.min_prior_art_year, "Drop prior art granted earlier");
  m->add_option("--max-focal-year", matcher.max_focal_year, "Drop focal nodes granted later");
  m->add_option("--recent-window", matcher.recent_window, "Years of recent prior-art citations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  m->add_option("--seed", matcher.seed, "Random seed")->capture_default_str();
  m->add_flag("--with-replacement", matcher.with_replacement, "Allow a control pair to be reused");

  DidCommand did;
  auto* d = app.add_subcommand("did", "Event-time panel, difference-in-differences and block bootstrap");
  did.graph.add(*d, false);
  d->add_option("--panel", did.panel_in, "Existing panel file (pair_id, group, event_year, citations)");
  d->add_option("--matched", did.matched, "Matched-pairs file from match");
  d->add_option("--panel-out", did.panel_out, "Write the constructed panel");
  d->add_option("--window", did.window, "Event years FROM:TO kept in the panel")->capture_default_str();
  d->add_option("--pre", did.pre, "Pre-period event years (write --pre=-5:-1)")->capture_default_str();
  d->add_option("--post", did.post, "Post-period event years")->capture_default_str();
  d->add_option("--data-start", did.data_start, "First observable calendar year");
  d->add_option("--reps", did.reps, "Bootstrap replications")->capture_default_str();
  d->add_option("--seed", did.seed, "Random seed")->capture_default_str();
  d->add_option("--workers", did.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--out", did.out, "JSON report (default: standard output)");

  StatsCommand stats;
  auto* s = app.add_subcommand("stats", "Descriptive statistics and correlations of result files");
  s->add_option("--results", stats.results, "Result file (csv or jsonl)")->required();
  s->add_option("--nodes", stats.nodes, "Node file to join grant years and attributes");
  s->add_option("--vars", stats.vars, "Comma-separated variables")->capture_default_str();
  s->add_option("--by-year", stats.by_year, "Year variable for per-year distributions");
  s->add_option("--value", stats.value, "Value variable for per-year distributions")->capture_default_str();
  s->add_option("--quantiles", stats.quantiles, "Comma-separated quantiles (default 0.05,0.25,0.5,0.75,0.95)");
  s->add_option("--format", stats.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();
  s->add_option("--out", stats.out, "Output file (default: standard output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c->parsed()) return compute.run(out, err);
    if (ts->parsed()) return series.run(out, err);
    if (m->parsed()) return matcher.run(out, err);
    if (d->parsed()) return did.run(out, err);
    if (s->parsed()) return stats.run(out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_io_error(e.code()) ? kExitIo : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace cdindex
