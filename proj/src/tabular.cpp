#include "cdindex/tabular.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "cdindex/error.hpp"

namespace cdindex {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool blank(std::string_view line) {
  return trim(line).empty();
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string_view trim(std::string_view text) noexcept {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split_record(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && trim(current).empty()) {
      current.clear();
      quoted = true;
    } else if (c == delim) {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw Error(Errc::malformed_row, "unterminated quoted field");
  fields.emplace_back(trim(current));
  return fields;
}

DelimitedReader::DelimitedReader(std::istream& in, Delimiter delimiter) : in_(in) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    strip_cr(line);
    if (line_ == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (blank(line)) continue;
    switch (delimiter) {
      case Delimiter::comma: delim_ = ','; break;
      case Delimiter::tab: delim_ = '\t'; break;
      case Delimiter::automatic:
        delim_ = line.find('\t') != std::string::npos ? '\t' : ',';
        break;
    }
    header_ = split_record(line, delim_);
    for (auto& name : header_) name = lower(name);
    return;
  }
}

std::optional<std::size_t> DelimitedReader::column(std::string_view name) const {
  const auto key = lower(name);
  const auto it = std::find(header_.begin(), header_.end(), key);
  if (it == header_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header_.begin());
}

bool DelimitedReader::next(std::vector<std::string>& fields) {
  if (header_.empty()) return false;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    strip_cr(line);
    if (blank(line)) continue;
    try {
      fields = split_record(line, delim_);
    } catch (const Error& e) {
      throw Error(Errc::malformed_row, "line " + std::to_string(line_) + ": " + e.what());
    }
    return true;
  }
  return false;
}

std::unique_ptr<std::istream> open_input(const std::filesystem::path& path) {
  const auto name = path.string();
  if (name.size() > 3 && name.compare(name.size() - 3, 3, ".gz") == 0) {
    gzFile gz = gzopen(name.c_str(), "rb");
    if (gz == nullptr) throw Error(Errc::io_error, "cannot open " + name);
    auto buffer = std::make_unique<std::stringstream>();
    std::array<char, 1 << 16> chunk{};
    int got = 0;
    while ((got = gzread(gz, chunk.data(), static_cast<unsigned>(chunk.size()))) > 0) {
      buffer->write(chunk.data(), got);
    }
    int status = Z_OK;
    const char* message = gzerror(gz, &status);
    gzclose(gz);
    if (got < 0 || (status != Z_OK && status != Z_STREAM_END)) {
      throw Error(Errc::io_error, "gzip read failed for " + name + ": " + message);
    }
    return buffer;
  }
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw Error(Errc::io_error, "cannot open " + name);
  return file;
}

void write_field(std::ostream& out, std::string_view field, char delim) {
  const bool needs_quotes = field.find(delim) != std::string_view::npos ||
                            field.find('"') != std::string_view::npos ||
                            field.find('\n') != std::string_view::npos;
  if (!needs_quotes) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), ptr);
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

std::optional<int> parse_year(std::string_view text) {
  text = trim(text);
  if (auto whole = parse_int(text)) {
    if (*whole < -100000 || *whole > 100000) return std::nullopt;
    return static_cast<int>(*whole);
  }
  // Timestamp: a 4-digit year followed by a date separator.
  if (text.size() > 4 && std::all_of(text.begin(), text.begin() + 4,
                                     [](unsigned char c) { return std::isdigit(c); })) {
    const char sep = text[4];
    if (sep == '-' || sep == '/' || sep == 'T' || sep == ' ') {
      return static_cast<int>(*parse_int(text.substr(0, 4)));
    }
  }
  return std::nullopt;
}

}  // namespace cdindex
