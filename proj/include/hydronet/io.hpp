// File I/O helpers: atomic writes, CSV tables keyed by an ISO-8601 time
// column, and provenance sidecars.

#pragma once

#include "hydronet/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hydronet {

/// Write `content` to `path` atomically (temp file in the same directory,
/// then rename). Parent directories are created if missing.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// ----------------------------------------------------------------------------
// CSV
// ----------------------------------------------------------------------------

/// A rectangular CSV with a header row. First column is typically "time".
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    static CsvTable parse(const std::string& text, const std::string& context);
};

/// Serialize a time-indexed numeric matrix: header "time,<ids...>", one row
/// per step with ISO-8601 timestamps.
std::string timeseries_csv(const std::vector<std::string>& ids, const Matrix& values,
                           std::int64_t start_epoch, int timestep_seconds);

struct TimeseriesData {
    std::vector<std::string> ids;
    Matrix values;               // rows = time, cols = ids
    std::int64_t start_epoch = 0;
};

TimeseriesData parse_timeseries_csv(const std::string& text, const std::string& context);

}  // namespace hydronet
