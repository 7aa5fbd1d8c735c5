#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simtrans/asr_stream.hpp"
#include "simtrans/error.hpp"
#include "simtrans/llm_backend.hpp"
#include "simtrans/metrics.hpp"
#include "simtrans/policy_engine.hpp"

namespace simtrans::harness {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitBackend = 2,
  kExitPartial = 3,
};

/// A configured backend could not be reached before any session started.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  fs::path manifest;
  fs::path backgrounds_dir;

  /// Live transcription service for entries with audio. Fixture entries
  /// always use the simulated recognizer.
  std::string asr_endpoint;
  std::string asr_model = "whisper-small.en";
  /// Exactly one of these selects the completion backend.
  std::string llm_endpoint;
  fs::path llm_script;
  std::string llm_model;
  bool llm_streaming = true;
  std::string llm_api_key;
  std::string asr_api_key;

  policy::SessionConfig session;
  std::vector<Millis> sweep;

  fs::path out_dir;
  /// 0 picks 1 when wall time is measured and the hardware thread count otherwise.
  std::size_t jobs = 0;
  bool resume = false;
  bool overwrite = false;
  bool dump_prompts = false;
  bool context_carryover = false;
  bool computation_aware = false;
  std::size_t extract_retries = 2;

  bool live_llm() const { return !llm_endpoint.empty(); }
  /// Throws ConfigError.
  void validate(bool needs_manifest = true) const;
  std::size_t effective_jobs() const;
};

struct Backends {
  std::shared_ptr<llm::LlmBackend> llm;
  /// Null when no transcription endpoint is configured.
  std::shared_ptr<asr::AsrBackend> live_asr;
};

using BackendFactory = std::function<Backends(const RunConfig&)>;

/// Builds the backends a config names: a fresh scripted backend per call, or
/// HTTP clients. Credentials fall back to SIMTRANS_LLM_API_KEY and
/// SIMTRANS_ASR_API_KEY.
Backends make_backends(const RunConfig& cfg);

struct RunOutcome {
  metrics::MetricReport report;
  std::size_t completed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  int exit_code = kExitOk;
};

/// Runs one session per manifest entry. Records stream to
/// `<out>/records.jsonl` in manifest order; the report goes to
/// `<out>/report.json` and `<out>/report.csv`. Failed sessions are listed in
/// `<out>/failures.jsonl`.
RunOutcome cmd_run(const RunConfig& cfg, const BackendFactory& factory = make_backends);

struct CurvePoint {
  Millis min_read_time{0};
  std::optional<metrics::MetricReport> report;
  std::string error;
};

/// One run per sweep value under `<out>/min_read_<ms>ms`, plus `<out>/curve.csv`.
std::vector<CurvePoint> cmd_curve(const RunConfig& cfg, const BackendFactory& factory = make_backends);

struct ExtractionInput {
  std::string talk_id;
  std::string text;
};

struct ExtractionResult {
  std::string talk_id;
  std::optional<fs::path> written;
  std::size_t attempts = 0;
  std::string error;
};

/// Text files (talk id = file stem) or JSONL of {talk_id, text}.
std::vector<ExtractionInput> load_extraction_inputs(const std::vector<fs::path>& paths);

/// Writes `<out>/<talk_id>.json` per input, retrying unparseable responses.
/// Failures are also listed in `<out>/failures.jsonl`.
std::vector<ExtractionResult> cmd_extract_background(const std::vector<ExtractionInput>& inputs,
                                                     llm::LlmBackend& backend, const RunConfig& cfg);

/// Recomputes the report from a record log. References are replaced by the
/// manifest's when one is given.
metrics::MetricReport cmd_score(const fs::path& records, const std::optional<fs::path>& manifest = std::nullopt,
                                bool computation_aware = false);

}  // namespace simtrans::harness
