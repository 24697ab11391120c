#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdindex {

/// Column-oriented numeric view of a delimited or JSON-lines file. Cells
/// that are empty or not numbers read as NaN; booleans read as 0/1.
class DataTable {
 public:
  static DataTable read(std::istream& in);

  std::size_t rows() const noexcept { return rows_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool has(std::string_view name) const noexcept;
  /// Throws Error(unknown_variable).
  std::span<const double> column(std::string_view name) const;
  /// Raw text of a column, e.g. identifiers; empty strings for missing cells.
  std::span<const std::string> text(std::string_view name) const;

  void add_column(std::string name, std::vector<double> values);

 private:
  std::size_t index(std::string_view name) const;

  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::string>> text_;
};

struct VariableSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  ///< N - 1 denominator
  double min = 0.0;
  double max = 0.0;
};

struct SummaryTable {
  std::size_t n = 0;  ///< rows complete on every requested variable
  std::vector<VariableSummary> variables;
  /// Row-major k x k. Missing where a variable is constant.
  std::vector<std::optional<double>> r;
  /// Two-tailed p-values of r from the t transform with N - 2 df.
  std::vector<std::optional<double>> p;
  std::vector<std::string> warnings;

  std::optional<double> correlation(std::size_t i, std::size_t j) const {
    return r[i * variables.size() + j];
  }
  std::optional<double> p_value(std::size_t i, std::size_t j) const {
    return p[i * variables.size() + j];
  }
};

/// Listwise-complete moments and Pearson correlations.
SummaryTable summarize(const DataTable& table, std::span<const std::string> variables);

/// "+", "*", "**", "***" at p < 0.1, 0.05, 0.01, 0.001.
std::string_view significance_stars(std::optional<double> p) noexcept;

double pearson_p_value(double r, std::size_t n);

struct YearDistribution {
  long long year = 0;
  std::size_t n = 0;
  double mean = 0.0;
  std::vector<double> quantiles;
};

/// Per-year count, mean and type-7 quantiles of `value`, ascending by year.
std::vector<YearDistribution> yearly_distribution(const DataTable& table, std::string_view value,
                                                  std::string_view year,
                                                  std::span<const double> quantiles);

inline constexpr double kDefaultQuantiles[] = {0.05, 0.25, 0.5, 0.75, 0.95};

void render_text(std::ostream& out, const SummaryTable& s);
void render_csv(std::ostream& out, const SummaryTable& s);
std::string render_json(const SummaryTable& s);

void render_text(std::ostream& out, std::span<const YearDistribution> d, std::span<const double> q);
void render_csv(std::ostream& out, std::span<const YearDistribution> d, std::span<const double> q);
std::string render_json(std::span<const YearDistribution> d, std::span<const double> q);

}  // namespace cdindex
