#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cdindex/graph.hpp"
#include "cdindex/measure.hpp"

namespace cdindex {

struct Selection {
  enum class Kind { all, id_list, year_range, top_cited };

  Kind kind = Kind::all;
  std::vector<std::string> ids;
  int from_year = 0;
  int to_year = 0;
  std::size_t k = 0;

  static Selection everything();
  static Selection of_ids(std::vector<std::string> ids);
  static Selection granted_between(int from_year, int to_year);
  static Selection most_cited(std::size_t k);
};

struct BatchJob {
  Selection selection;
  /// Defaults to the latest grant year in the graph.
  std::optional<int> horizon_year;
  ContextOptions context;
  WeightScheme weights;
  bool emit_timeseries = false;
  /// First year of each series; defaults to the focal node's grant year.
  std::optional<int> series_from;
  unsigned worker_count = 1;
  std::size_t shard_size = 64 * 1024;
};

struct ResultRow {
  std::string focal_id;
  int t = 0;
  std::optional<int> year;  ///< set on time-series rows
  MeasureResult result;
  std::string error;        ///< non-empty marks a row-level failure

  bool ok() const noexcept { return error.empty(); }
};

class ResultSink {
 public:
  virtual ~ResultSink() = default;
  virtual void begin(bool timeseries) { (void)timeseries; }
  virtual void write(const ResultRow& row) = 0;
  virtual void finish() {}
};

/// focal_id,t[,year],n,f_only,b_only,both,disruptiveness,radicalness,is_isolate,error
class CsvResultWriter final : public ResultSink {
 public:
  explicit CsvResultWriter(std::ostream& out, char delimiter = ',') : out_(out), delim_(delimiter) {}
  void begin(bool timeseries) override;
  void write(const ResultRow& row) override;
  void finish() override;

 private:
  std::ostream& out_;
  char delim_;
  bool timeseries_ = false;
};

/// One JSON object per line with the same fields as the CSV form.
class JsonlResultWriter final : public ResultSink {
 public:
  explicit JsonlResultWriter(std::ostream& out) : out_(out) {}
  void write(const ResultRow& row) override;
  void finish() override;

 private:
  std::ostream& out_;
};

class VectorSink final : public ResultSink {
 public:
  void write(const ResultRow& row) override { rows.push_back(row); }
  std::vector<ResultRow> rows;
};

/// Reads either writer's output back (format detected from the first line).
std::vector<ResultRow> read_results(std::istream& in);

struct BatchSummary {
  std::size_t focal_count = 0;
  std::size_t rows = 0;
  std::size_t error_rows = 0;
  std::size_t isolates = 0;
  int horizon_year = 0;
  double mean_disruptiveness = 0.0;
  double sd_disruptiveness = 0.0;
  double min_disruptiveness = 0.0;
  double max_disruptiveness = 0.0;
  std::size_t total_focal_only = 0;
  std::size_t total_prior_only = 0;
  std::size_t total_both = 0;
  double wall_seconds = 0.0;
};

/// Focal ids of the selection in ascending order, unknown list entries
/// included. Throws Error(empty_selection) when nothing is selected.
std::vector<std::string> resolve_selection(const CitationGraph& graph, const Selection& selection);

/// Rows reach the sink in ascending focal-id order for any worker count.
BatchSummary run_batch(const CitationGraph& graph, const BatchJob& job, ResultSink& sink);

}  // namespace cdindex
