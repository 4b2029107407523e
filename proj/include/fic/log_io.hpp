#pragma once

// Flat-file export of run logs. CSV and JSONL carry the per-tick rows; run
// metadata, events and channel statistics go to a `<path>.meta.json` sidecar.

#include <filesystem>
#include <string>
#include <vector>

#include "fic/scenario.hpp"

namespace fic::sim {

enum class LogFormat { kCsv, kJsonl };

LogFormat parse_log_format(const std::string& name);

/// Column names in file order.
const std::vector<std::string>& log_columns();

/// Writes the rows to `path` and the metadata sidecar next to it.
/// Throws std::runtime_error naming the path on I/O failure.
void export_log(const RunLog& log, const std::filesystem::path& path, LogFormat format);

/// Reads a log written by export_log; the format is taken from the extension
/// (".jsonl" or anything else as CSV). A missing sidecar leaves defaults.
RunLog read_log(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace fic::sim
