#include "cdindex/batch.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cdindex/error.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

Selection Selection::everything() { return {}; }

Selection Selection::of_ids(std::vector<std::string> ids) {
  Selection s;
  s.kind = Kind::id_list;
  s.ids = std::move(ids);
  return s;
}

Selection Selection::granted_between(int from_year, int to_year) {
  Selection s;
  s.kind = Kind::year_range;
  s.from_year = from_year;
  s.to_year = to_year;
  return s;
}

Selection Selection::most_cited(std::size_t k) {
  Selection s;
  s.kind = Kind::top_cited;
  s.k = k;
  return s;
}

// ---------------------------------------------------------------------------
// Writers

namespace {

void check_stream(std::ostream& out) {
  if (!out) throw Error(Errc::sink_write_failure, "result stream is not writable");
}

nlohmann::ordered_json row_json(const ResultRow& row) {
  nlohmann::ordered_json j;
  j["focal_id"] = row.focal_id;
  j["t"] = row.t;
  if (row.year) j["year"] = *row.year;
  if (row.ok()) {
    const auto& r = row.result;
    j["n"] = r.n_citers;
    j["f_only"] = r.count_focal_only;
    j["b_only"] = r.count_prior_only;
    j["both"] = r.count_both;
    j["disruptiveness"] = r.disruptiveness;
    j["radicalness"] = r.radicalness;
    j["is_isolate"] = r.is_isolate;
  } else {
    j["error"] = row.error;
  }
  return j;
}

}  // namespace

void CsvResultWriter::begin(bool timeseries) {
  timeseries_ = timeseries;
  const char d = delim_;
  out_ << "focal_id" << d << 't' << d;
  if (timeseries_) out_ << "year" << d;
  out_ << "n" << d << "f_only" << d << "b_only" << d << "both" << d << "disruptiveness" << d
       << "radicalness" << d << "is_isolate" << d << "error\n";
  check_stream(out_);
}

void CsvResultWriter::write(const ResultRow& row) {
  const char d = delim_;
  write_field(out_, row.focal_id, d);
  out_ << d << row.t << d;
  if (timeseries_) out_ << (row.year ? std::to_string(*row.year) : std::string()) << d;
  if (row.ok()) {
    const auto& r = row.result;
    out_ << r.n_citers << d << r.count_focal_only << d << r.count_prior_only << d << r.count_both
         << d << format_double(r.disruptiveness) << d << format_double(r.radicalness) << d
         << (r.is_isolate ? 1 : 0) << d << '\n';
  } else {
    out_ << d << d << d << d << d << d << d;
    write_field(out_, row.error, d);
    out_ << '\n';
  }
  check_stream(out_);
}

void CsvResultWriter::finish() {
  out_.flush();
  check_stream(out_);
}

void JsonlResultWriter::write(const ResultRow& row) {
  out_ << row_json(row).dump() << '\n';
  check_stream(out_);
}

void JsonlResultWriter::finish() {
  out_.flush();
  check_stream(out_);
}

std::vector<ResultRow> read_results(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string first;
  while (in.peek() != EOF && std::isspace(in.peek())) in.get();
  if (in.peek() == '{') {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        ResultRow row;
        row.focal_id = j.at("focal_id").get<std::string>();
        row.t = j.at("t").get<int>();
        if (j.contains("year")) row.year = j["year"].get<int>();
        if (j.contains("error")) {
          row.error = j["error"].get<std::string>();
        } else {
          auto& r = row.result;
          r.n_citers = j.at("n").get<std::size_t>();
          r.count_focal_only = j.at("f_only").get<std::size_t>();
          r.count_prior_only = j.at("b_only").get<std::size_t>();
          r.count_both = j.at("both").get<std::size_t>();
          r.disruptiveness = j.at("disruptiveness").get<double>();
          r.radicalness = j.at("radicalness").get<double>();
          r.is_isolate = j.at("is_isolate").get<bool>();
          r.horizon_year = row.year.value_or(row.t);
        }
        rows.push_back(std::move(row));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed_row, "results line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return rows;
  }

  DelimitedReader reader(in);
  if (reader.header().empty()) return rows;
  const auto need = [&](std::string_view name) {
    const auto c = reader.column(name);
    if (!c) throw Error(Errc::missing_required_column, "results file has no '" + std::string(name) + "' column");
    return *c;
  };
  const auto c_id = need("focal_id");
  const auto c_t = need("t");
  const auto c_year = reader.column("year");
  const auto c_n = need("n");
  const auto c_fo = need("f_only");
  const auto c_bo = need("b_only");
  const auto c_both = need("both");
  const auto c_d = need("disruptiveness");
  const auto c_r = need("radicalness");
  const auto c_iso = need("is_isolate");
  const auto c_err = reader.column("error");

  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto bad = [&](std::string_view what) {
      return Error(Errc::malformed_row,
                   "results line " + std::to_string(reader.line_number()) + ": " + std::string(what));
    };
    if (f.size() < reader.header().size()) throw bad("too few fields");
    ResultRow row;
    row.focal_id = f[c_id];
    const auto t = parse_int(f[c_t]);
    if (!t) throw bad("bad t");
    row.t = static_cast<int>(*t);
    if (c_year && !f[*c_year].empty()) {
      const auto y = parse_int(f[*c_year]);
      if (!y) throw bad("bad year");
      row.year = static_cast<int>(*y);
    }
    if (c_err && !f[*c_err].empty()) {
      row.error = f[*c_err];
      rows.push_back(std::move(row));
      continue;
    }
    const auto n = parse_int(f[c_n]);
    const auto fo = parse_int(f[c_fo]);
    const auto bo = parse_int(f[c_bo]);
    const auto both = parse_int(f[c_both]);
    const auto d = parse_double(f[c_d]);
    const auto r = parse_double(f[c_r]);
    const auto iso = parse_int(f[c_iso]);
    if (!n || !fo || !bo || !both || !d || !r || !iso) throw bad("non-numeric measure field");
    auto& m = row.result;
    m.n_citers = static_cast<std::size_t>(*n);
    m.count_focal_only = static_cast<std::size_t>(*fo);
    m.count_prior_only = static_cast<std::size_t>(*bo);
    m.count_both = static_cast<std::size_t>(*both);
    m.disruptiveness = *d;
    m.radicalness = *r;
    m.is_isolate = *iso != 0;
    m.horizon_year = row.year.value_or(row.t);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Selection

std::vector<std::string> resolve_selection(const CitationGraph& graph, const Selection& selection) {
  std::vector<std::string> ids;
  switch (selection.kind) {
    case Selection::Kind::all:
      for (const auto& n : graph.nodes()) {
        if (!n.stub) ids.push_back(n.id);
      }
      break;
    case Selection::Kind::id_list:
      ids = selection.ids;
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      break;
    case Selection::Kind::year_range:
      if (selection.from_year > selection.to_year) {
        throw Error(Errc::invalid_year_range, std::to_string(selection.from_year) + " > " +
                                                  std::to_string(selection.to_year));
      }
      for (const auto& n : graph.nodes()) {
        if (!n.stub && n.grant_year >= selection.from_year && n.grant_year <= selection.to_year) {
          ids.push_back(n.id);
        }
      }
      break;
    case Selection::Kind::top_cited: {
      std::vector<NodeIndex> order;
      for (NodeIndex v = 0; v < graph.node_count(); ++v) {
        if (!graph.node(v).stub) order.push_back(v);
      }
      const auto k = std::min(selection.k, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](NodeIndex a, NodeIndex b) {
                          const auto ca = graph.citers(a).size();
                          const auto cb = graph.citers(b).size();
                          return ca != cb ? ca > cb : a < b;
                        });
      order.resize(k);
      std::sort(order.begin(), order.end());
      for (const auto v : order) ids.push_back(graph.id(v));
      break;
    }
  }
  if (ids.empty()) throw Error(Errc::empty_selection, "selection resolves to no nodes");
  return ids;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

void compute_focal(const CitationGraph& graph, const BatchJob& job, int horizon,
                   ContextBuilder& builder, const std::string& focal_id,
                   std::vector<ResultRow>& out) {
  out.clear();
  try {
    const NodeIndex v = graph.index_of(focal_id);
    const NodeIndex focal[] = {v};
    if (!job.emit_timeseries) {
      const auto ctx = builder.build(focal, horizon, job.context);
      out.push_back({focal_id, horizon, std::nullopt, measure(ctx, job.weights, graph), {}});
      return;
    }
    const int from = job.series_from.value_or(graph.grant_year(v));
    if (from > horizon) {
      throw Error(Errc::invalid_year_range, std::to_string(from) + " > " + std::to_string(horizon));
    }
    const auto full = builder.build(focal, horizon, job.context);
    for (int year = from; year <= horizon; ++year) {
      const auto ctx = year == horizon ? full : full.at_horizon(year);
      out.push_back({focal_id, horizon, year, measure(ctx, job.weights, graph), {}});
    }
  } catch (const Error& e) {
    out.clear();
    ResultRow row;
    row.focal_id = focal_id;
    row.t = horizon;
    row.error = e.what();
    out.push_back(std::move(row));
  }
}

}  // namespace

BatchSummary run_batch(const CitationGraph& graph, const BatchJob& job, ResultSink& sink) {
  const auto started = std::chrono::steady_clock::now();
  if (job.worker_count == 0) throw Error(Errc::invalid_argument, "worker_count must be >= 1");
  if (job.shard_size == 0) throw Error(Errc::invalid_argument, "shard_size must be >= 1");

  const auto focal_ids = resolve_selection(graph, job.selection);
  int horizon = 0;
  if (job.horizon_year) {
    horizon = *job.horizon_year;
  } else if (const auto latest = graph.max_year()) {
    horizon = *latest;
  } else {
    throw Error(Errc::empty_selection, "graph has no dated nodes");
  }

  BatchSummary summary;
  summary.focal_count = focal_ids.size();
  summary.horizon_year = horizon;

  // Welford moments over the final-horizon row of each focal node.
  std::size_t moments_n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(job.worker_count, focal_ids.size()));
  std::vector<ContextBuilder> builders;
  builders.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) builders.emplace_back(graph);

  sink.begin(job.emit_timeseries);
  std::vector<std::vector<ResultRow>> shard;
  for (std::size_t shard_begin = 0; shard_begin < focal_ids.size(); shard_begin += job.shard_size) {
    const auto shard_len = std::min(job.shard_size, focal_ids.size() - shard_begin);
    shard.assign(shard_len, {});

    constexpr std::size_t kChunk = 64;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    const auto work = [&](unsigned w) {
      try {
        for (;;) {
          const auto begin = next.fetch_add(kChunk);
          if (begin >= shard_len || failed.load()) return;
          const auto end = std::min(begin + kChunk, shard_len);
          for (auto i = begin; i < end; ++i) {
            compute_focal(graph, job, horizon, builders[w], focal_ids[shard_begin + i], shard[i]);
          }
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& rows : shard) {
      for (const auto& row : rows) {
        sink.write(row);
        ++summary.rows;
      }
      const auto& last = rows.back();
      if (!last.ok()) {
        ++summary.error_rows;
        continue;
      }
      const auto& r = last.result;
      if (r.is_isolate) ++summary.isolates;
      summary.total_focal_only += r.count_focal_only;
      summary.total_prior_only += r.count_prior_only;
      summary.total_both += r.count_both;
      const double d = r.disruptiveness;
      ++moments_n;
      const double delta = d - mean;
      mean += delta / static_cast<double>(moments_n);
      m2 += delta * (d - mean);
      lo = moments_n == 1 ? d : std::min(lo, d);
      hi = moments_n == 1 ? d : std::max(hi, d);
    }
  }
  sink.finish();

  summary.mean_disruptiveness = mean;
  summary.sd_disruptiveness = moments_n > 1 ? std::sqrt(m2 / static_cast<double>(moments_n - 1)) : 0.0;
  summary.min_disruptiveness = lo;
  summary.max_disruptiveness = hi;
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return summary;
}

}  // namespace cdindex
