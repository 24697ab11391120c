#pragma once

// Delimited-text plumbing shared by every loader and writer: delimiter
// detection, quoted fields, gzip-aware file opening and locale-free number
// formatting.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cdindex {

enum class Delimiter { automatic, comma, tab };

class DelimitedReader {
 public:
  /// Reads the header row immediately. An empty stream yields an empty
  /// header and no records.
  explicit DelimitedReader(std::istream& in, Delimiter delimiter = Delimiter::automatic);

  const std::vector<std::string>& header() const noexcept { return header_; }
  char delimiter() const noexcept { return delim_; }

  /// Column position by case-insensitive name.
  std::optional<std::size_t> column(std::string_view name) const;

  /// Fills `fields` with the next non-blank record; false at end of stream.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line number of the record last returned by next().
  std::size_t line_number() const noexcept { return line_; }

 private:
  std::istream& in_;
  char delim_ = ',';
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_record(std::string_view line, char delim);

/// Opens a file for reading; names ending in ".gz" are decompressed.
std::unique_ptr<std::istream> open_input(const std::filesystem::path& path);

void write_field(std::ostream& out, std::string_view field, char delim);

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

std::optional<long long> parse_int(std::string_view text);
std::optional<double> parse_double(std::string_view text);

/// Accepts a bare integer year or a timestamp that starts with one
/// ("1983-05-17", "1983-05-17T00:00"); finer parts are discarded.
std::optional<int> parse_year(std::string_view text);

std::string_view trim(std::string_view text) noexcept;

}  // namespace cdindex
