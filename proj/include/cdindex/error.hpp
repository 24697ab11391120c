#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdindex {

enum class Errc {
  malformed_row,
  duplicate_id,
  missing_required_column,
  self_citation,
  dangling_endpoint,
  unknown_node,
  empty_focal_set,
  non_positive_weight,
  invalid_year_range,
  empty_selection,
  sink_write_failure,
  below_support,
  empty_result_set,
  overlapping_pools,
  window_empty,
  missing_group,
  overlapping_windows,
  too_few_clusters,
  unknown_variable,
  invalid_argument,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline bool is_io_error(Errc code) noexcept {
  return code == Errc::io_error || code == Errc::sink_write_failure;
}

}  // namespace cdindex
