#include "cdindex/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "cdindex/error.hpp"
#include "cdindex/quantile.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cell_value(std::string_view s) {
  if (const auto v = parse_double(s)) return *v;
  if (s == "true") return 1.0;
  if (s == "false") return 0.0;
  return kNaN;
}

std::string fixed(double v, int digits) {
  return fmt::format("{:.{}f}", v, digits);
}

}  // namespace

// ---------------------------------------------------------------------------
// DataTable

DataTable DataTable::read(std::istream& in) {
  DataTable t;
  while (in.peek() != EOF && std::isspace(in.peek())) in.get();
  if (in.peek() == '{') {
    std::map<std::string, std::size_t> slot;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed_row, "line " + std::to_string(lineno) + ": " + e.what());
      }
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!slot.contains(it.key())) {
          slot[it.key()] = t.names_.size();
          t.names_.push_back(it.key());
          t.values_.emplace_back(t.rows_, kNaN);
          t.text_.emplace_back(t.rows_);
        }
      }
      for (std::size_t c = 0; c < t.names_.size(); ++c) {
        double v = kNaN;
        std::string s;
        if (j.contains(t.names_[c])) {
          const auto& cell = j[t.names_[c]];
          if (cell.is_number()) {
            v = cell.get<double>();
            s = cell.dump();
          } else if (cell.is_boolean()) {
            v = cell.get<bool>() ? 1.0 : 0.0;
            s = cell.dump();
          } else if (cell.is_string()) {
            s = cell.get<std::string>();
            v = cell_value(s);
          }
        }
        t.values_[c].push_back(v);
        t.text_[c].push_back(std::move(s));
      }
      ++t.rows_;
    }
    return t;
  }

  DelimitedReader reader(in);
  t.names_ = reader.header();
  t.values_.resize(t.names_.size());
  t.text_.resize(t.names_.size());
  std::vector<std::string> f;
  while (reader.next(f)) {
    for (std::size_t c = 0; c < t.names_.size(); ++c) {
      const std::string cell = c < f.size() ? f[c] : std::string();
      t.values_[c].push_back(cell_value(cell));
      t.text_[c].push_back(cell);
    }
    ++t.rows_;
  }
  return t;
}

bool DataTable::has(std::string_view name) const noexcept {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t DataTable::index(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(Errc::unknown_variable, std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> DataTable::column(std::string_view name) const {
  return values_[index(name)];
}

std::span<const std::string> DataTable::text(std::string_view name) const {
  return text_[index(name)];
}

void DataTable::add_column(std::string name, std::vector<double> values) {
  if (values.size() != rows_) throw Error(Errc::invalid_argument, "column length mismatch");
  if (has(name)) {
    values_[index(name)] = std::move(values);
    return;
  }
  names_.push_back(std::move(name));
  values_.push_back(std::move(values));
  text_.emplace_back(rows_);
  for (std::size_t r = 0; r < rows_; ++r) text_.back()[r] = format_double(values_.back()[r]);
}

// ---------------------------------------------------------------------------
// Summary

double pearson_p_value(double r, std::size_t n) {
  if (n <= 2) return kNaN;
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = std::abs(r) * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, t));
}

std::string_view significance_stars(std::optional<double> p) noexcept {
  if (!p) return "";
  if (*p < 0.001) return "***";
  if (*p < 0.01) return "**";
  if (*p < 0.05) return "*";
  if (*p < 0.1) return "+";
  return "";
}

SummaryTable summarize(const DataTable& table, std::span<const std::string> variables) {
  if (variables.empty()) throw Error(Errc::invalid_argument, "no variables requested");
  const auto k = variables.size();
  std::vector<std::span<const double>> cols;
  for (const auto& v : variables) cols.push_back(table.column(v));

  // Streaming (Welford) means, co-moments and extrema.
  std::vector<double> mean(k, 0.0);
  std::vector<double> lo(k, 0.0);
  std::vector<double> hi(k, 0.0);
  std::vector<double> comoment(k * k, 0.0);
  std::vector<double> delta_old(k);
  std::size_t n = 0;
  for (std::size_t row = 0; row < table.rows(); ++row) {
    bool complete = true;
    for (const auto& c : cols) complete = complete && std::isfinite(c[row]);
    if (!complete) continue;
    ++n;
    for (std::size_t i = 0; i < k; ++i) {
      const double x = cols[i][row];
      delta_old[i] = x - mean[i];
      mean[i] += delta_old[i] / static_cast<double>(n);
      lo[i] = n == 1 ? x : std::min(lo[i], x);
      hi[i] = n == 1 ? x : std::max(hi[i], x);
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        comoment[i * k + j] += delta_old[i] * (cols[j][row] - mean[j]);
      }
    }
  }
  if (n < 2) {
    throw Error(Errc::invalid_argument,
                "need at least 2 complete rows, have " + std::to_string(n));
  }

  SummaryTable s;
  s.n = n;
  for (std::size_t i = 0; i < k; ++i) {
    const double var = comoment[i * k + i] / static_cast<double>(n - 1);
    s.variables.push_back({variables[i], mean[i], std::sqrt(std::max(var, 0.0)), lo[i], hi[i]});
    if (hi[i] == lo[i]) s.warnings.push_back("variable '" + variables[i] + "' is constant; correlations undefined");
  }
  s.r.assign(k * k, std::nullopt);
  s.p.assign(k * k, std::nullopt);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      if (hi[i] == lo[i] || hi[j] == lo[j]) continue;
      double r = 1.0;
      if (i != j) {
        r = comoment[i * k + j] / std::sqrt(comoment[i * k + i] * comoment[j * k + j]);
        r = std::clamp(r, -1.0, 1.0);
      }
      s.r[i * k + j] = s.r[j * k + i] = r;
      const double p = pearson_p_value(r, n);
      if (std::isfinite(p)) s.p[i * k + j] = s.p[j * k + i] = p;
    }
  }
  return s;
}

std::vector<YearDistribution> yearly_distribution(const DataTable& table, std::string_view value,
                                                  std::string_view year,
                                                  std::span<const double> quantiles) {
  const auto values = table.column(value);
  const auto years = table.column(year);
  for (const double q : quantiles) {
    if (!(q >= 0.0 && q <= 1.0)) throw Error(Errc::invalid_argument, "quantile outside [0, 1]");
  }
  std::map<long long, std::vector<double>> by_year;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (!std::isfinite(values[r]) || !std::isfinite(years[r])) continue;
    if (years[r] != std::floor(years[r])) {
      throw Error(Errc::invalid_argument, "year variable '" + std::string(year) + "' is not integer-valued");
    }
    by_year[static_cast<long long>(years[r])].push_back(values[r]);
  }
  std::vector<YearDistribution> out;
  for (auto& [y, v] : by_year) {
    std::sort(v.begin(), v.end());
    YearDistribution d;
    d.year = y;
    d.n = v.size();
    double mean = 0.0;
    std::size_t k = 0;
    for (const double x : v) mean += (x - mean) / static_cast<double>(++k);
    d.mean = mean;
    for (const double q : quantiles) d.quantiles.push_back(quantile_sorted(v, q));
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

void render_text(std::ostream& out, const SummaryTable& s) {
  std::size_t width = 8;
  for (const auto& v : s.variables) width = std::max(width, v.name.size() + 4);
  out << fmt::format("N = {}\n", s.n);
  out << fmt::format("{:<{}}{:>10}{:>10}{:>10}{:>10}", "variable", width, "mean", "sd", "min", "max");
  for (std::size_t j = 0; j < s.variables.size(); ++j) out << fmt::format("{:>12}", j + 1);
  out << '\n';
  for (std::size_t i = 0; i < s.variables.size(); ++i) {
    const auto& v = s.variables[i];
    out << fmt::format("{:<{}}{:>10}{:>10}{:>10}{:>10}", fmt::format("{}. {}", i + 1, v.name), width,
                       fixed(v.mean, 2), fixed(v.sd, 2), fixed(v.min, 2), fixed(v.max, 2));
    for (std::size_t j = 0; j <= i; ++j) {
      const auto r = s.correlation(i, j);
      const std::string cell =
          r ? fixed(*r, 2) + (i == j ? "" : std::string(significance_stars(s.p_value(i, j)))) : "--";
      out << fmt::format("{:>12}", cell);
    }
    out << '\n';
  }
  for (const auto& w : s.warnings) out << "warning: " << w << '\n';
}

void render_csv(std::ostream& out, const SummaryTable& s) {
  out << "variable,n,mean,sd,min,max";
  for (const auto& v : s.variables) out << ",r_" << v.name;
  for (const auto& v : s.variables) out << ",p_" << v.name;
  out << '\n';
  for (std::size_t i = 0; i < s.variables.size(); ++i) {
    const auto& v = s.variables[i];
    out << v.name << ',' << s.n << ',' << format_double(v.mean) << ',' << format_double(v.sd) << ','
        << format_double(v.min) << ',' << format_double(v.max);
    for (std::size_t j = 0; j < s.variables.size(); ++j) {
      const auto r = s.correlation(i, j);
      out << ',' << (r ? format_double(*r) : "");
    }
    for (std::size_t j = 0; j < s.variables.size(); ++j) {
      const auto p = s.p_value(i, j);
      out << ',' << (p ? fixed(*p, 4) : "");
    }
    out << '\n';
  }
}

std::string render_json(const SummaryTable& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  auto& vars = j["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : s.variables) {
    vars.push_back({{"name", v.name}, {"mean", v.mean}, {"sd", v.sd}, {"min", v.min}, {"max", v.max}});
  }
  auto& r = j["correlations"] = nlohmann::ordered_json::array();
  const auto k = s.variables.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      nlohmann::ordered_json cell;
      cell["x"] = s.variables[a].name;
      cell["y"] = s.variables[b].name;
      const auto rv = s.correlation(a, b);
      const auto pv = s.p_value(a, b);
      cell["r"] = rv ? nlohmann::ordered_json(*rv) : nlohmann::ordered_json(nullptr);
      cell["p"] = pv ? nlohmann::ordered_json(std::round(*pv * 1e4) / 1e4) : nlohmann::ordered_json(nullptr);
      cell["stars"] = significance_stars(pv);
      r.push_back(std::move(cell));
    }
  }
  j["warnings"] = s.warnings;
  return j.dump(2);
}

void render_text(std::ostream& out, std::span<const YearDistribution> d, std::span<const double> q) {
  out << fmt::format("{:>8}{:>10}{:>10}", "year", "n", "mean");
  for (const double p : q) out << fmt::format("{:>10}", fmt::format("q{:g}", p * 100));
  out << '\n';
  for (const auto& y : d) {
    out << fmt::format("{:>8}{:>10}{:>10}", y.year, y.n, fixed(y.mean, 2));
    for (const double v : y.quantiles) out << fmt::format("{:>10}", fixed(v, 2));
    out << '\n';
  }
}

void render_csv(std::ostream& out, std::span<const YearDistribution> d, std::span<const double> q) {
  out << "year,n,mean";
  for (const double p : q) out << ",q" << format_double(p);
  out << '\n';
  for (const auto& y : d) {
    out << y.year << ',' << y.n << ',' << format_double(y.mean);
    for (const double v : y.quantiles) out << ',' << format_double(v);
    out << '\n';
  }
}

std::string render_json(std::span<const YearDistribution> d, std::span<const double> q) {
  nlohmann::ordered_json j;
  j["quantiles"] = std::vector<double>(q.begin(), q.end());
  auto& years = j["years"] = nlohmann::ordered_json::array();
  for (const auto& y : d) {
    years.push_back({{"year", y.year}, {"n", y.n}, {"mean", y.mean}, {"quantiles", y.quantiles}});
  }
  return j.dump(2);
}

}  // namespace cdindex
