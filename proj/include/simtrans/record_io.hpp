#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "simtrans/metrics.hpp"
#include "simtrans/policy_engine.hpp"

namespace simtrans::io {

/// One JSONL line (no trailing newline). Keys are emitted in a fixed order so
/// that identical records serialize byte-identically.
std::string record_to_json(const policy::TranslationRecord& r);
policy::TranslationRecord record_from_json(std::string_view line);

/// Reads a record log. Throws ValidationError naming the first bad line.
std::vector<policy::TranslationRecord> read_records(const std::filesystem::path& path);

std::string report_to_json(const metrics::MetricReport& report);
metrics::MetricReport report_from_json(std::string_view text);

/// Header and one row of (label, BLEU, AL, LAAL, WER, RTF); absent values are empty.
std::string csv_header(std::string_view label_column);
std::string csv_row(std::string_view label, const metrics::MetricReport& report);

}  // namespace simtrans::io
