#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simtrans/asr_stream.hpp"
#include "simtrans/prompt_builder.hpp"

namespace simtrans::data {

struct ManifestEntry {
  std::string id;
  /// Exactly one of these is set. Relative paths resolve against the manifest.
  std::optional<std::string> audio_path;
  std::optional<std::string> fixture_path;
  std::string reference;
  std::optional<std::string> source_text;
  std::optional<std::string> background_id;
  std::optional<std::string> talk_id;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  /// Background documents keyed by background_id.
  std::map<std::string, prompt::BackgroundInfo> backgrounds;
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& relative) const;
  const prompt::BackgroundInfo* background_for(const ManifestEntry& e) const;
};

/// Loads a JSONL manifest and eagerly parses every referenced background
/// document from `<backgrounds_dir>/<background_id>.json`. When
/// `backgrounds_dir` is empty it defaults to `<manifest dir>/backgrounds`.
/// Throws ValidationError listing every offending entry.
Manifest load_manifest(const std::filesystem::path& path, const std::filesystem::path& backgrounds_dir = {});

Manifest parse_manifest(std::string_view jsonl, const std::filesystem::path& base_dir,
                        const std::filesystem::path& backgrounds_dir = {});

/// Canonical JSONL, one entry per line, keys in a fixed order.
std::string serialize_manifest(const Manifest& m);

/// Timed-transcript fixture, JSONL of {word, end_ms, surface_override?}.
asr::AudioTimeline load_timed_transcript(const std::filesystem::path& path, Millis chunk = asr::kDefaultChunk);
std::vector<asr::TimedWord> parse_timed_transcript(std::string_view jsonl);

/// Reads a 16 kHz, 16-bit, mono PCM WAV file. No resampling is attempted.
asr::AudioTimeline read_audio(const std::filesystem::path& path, Millis chunk = asr::kDefaultChunk);
asr::PcmAudio parse_wav(std::string_view bytes);
std::string encode_wav(const asr::PcmAudio& audio);

/// Known evaluation sets and their sentence counts.
struct DatasetShape {
  std::string_view name;
  std::size_t expected_entries;
  bool has_background;
};

inline constexpr DatasetShape kKnownDatasets[] = {
    {"TED-TST-2023", 102, true},
    {"TED-TST-2024", 478, true},
    {"FLEURS", 642, false},
    {"AmbiEval", 96, true},
};

const DatasetShape* find_dataset_shape(std::string_view name);

/// Empty when the manifest matches the named shape, otherwise a description.
std::optional<std::string> check_shape(const Manifest& m, const DatasetShape& shape);

}  // namespace simtrans::data
