#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hsps::cli {

/// Two-channel click record read from a `channel,timestamp` CSV.
struct TimeTags {
  std::vector<double> trigger_ns;
  std::vector<double> signal_ns;
  std::optional<double> integration_time_s;  // from a `# integration_time_s=` header
  std::vector<std::string> warnings;
};

struct TimeTagOptions {
  /// Per-channel reorder depth; rows displaced by more than this are an error.
  std::size_t sort_buffer = 4096;
};

/// Accepted channel labels: trigger/signal, t/s, 1/2 (case-insensitive).
/// Lines starting with '#' are comments, except `# units=ps|ns` (required
/// before the first data row) and `# integration_time_s=<x>`. A first row
/// whose timestamp is not numeric is taken as a column header. Extra columns
/// are ignored.
TimeTags parse_time_tags(const std::string& text, const TimeTagOptions& options = {});

TimeTags read_time_tags(const std::filesystem::path& path, const TimeTagOptions& options = {});

}  // namespace hsps::cli
