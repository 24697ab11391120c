#include "cdindex/error.hpp"

namespace cdindex {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_row: return "MalformedRow";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::missing_required_column: return "MissingRequiredColumn";
    case Errc::self_citation: return "SelfCitation";
    case Errc::dangling_endpoint: return "DanglingEndpoint";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::empty_focal_set: return "EmptyFocalSet";
    case Errc::non_positive_weight: return "NonPositiveWeight";
    case Errc::invalid_year_range: return "InvalidYearRange";
    case Errc::empty_selection: return "EmptySelection";
    case Errc::sink_write_failure: return "SinkWriteFailure";
    case Errc::below_support: return "BelowSupport";
    case Errc::empty_result_set: return "EmptyResultSet";
    case Errc::overlapping_pools: return "OverlappingPools";
    case Errc::window_empty: return "WindowEmpty";
    case Errc::missing_group: return "MissingGroup";
    case Errc::overlapping_windows: return "OverlappingWindows";
    case Errc::too_few_clusters: return "TooFewClusters";
    case Errc::unknown_variable: return "UnknownVariable";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace cdindex
