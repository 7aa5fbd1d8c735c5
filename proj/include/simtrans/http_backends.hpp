#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "simtrans/asr_stream.hpp"
#include "simtrans/llm_backend.hpp"

namespace simtrans::http {

/// "http://host:port/prefix" split into the origin and a path prefix.
struct Endpoint {
  std::string origin;
  std::string path_prefix;

  static Endpoint parse(const std::string& url);
};

struct CompletionClientConfig {
  std::string url;
  std::string model;
  std::string api_key;
  std::string completions_path = "/v1/completions";
  std::string models_path = "/v1/models";
  /// Server-sent events; lets generation stop as soon as a word completes.
  bool streaming = true;
  std::vector<std::string> stop;
  std::chrono::seconds timeout{120};
};

/// Raw text-completion client (OpenAI-style `/v1/completions`). Chat
/// endpoints are deliberately unsupported: the caller authors the assistant
/// turn itself. A "stop" finish reason maps to EndOfTurn; "length" ends the
/// stream without one.
class CompletionClient final : public llm::LlmBackend {
 public:
  explicit CompletionClient(CompletionClientConfig cfg);
  void stream(const llm::GenerationRequest& request, const llm::TokenSink& sink) override;
  void check_ready() override;

 private:
  CompletionClientConfig cfg_;
  Endpoint endpoint_;
};

struct TranscriptionClientConfig {
  std::string url;
  std::string model = "whisper-small.en";
  std::string api_key;
  std::string transcriptions_path = "/v1/audio/transcriptions";
  std::string language = "en";
  std::chrono::seconds timeout{60};
};

/// Posts the audio prefix as a 16 kHz mono WAV (multipart "file") and splits
/// the returned `text` on whitespace.
class TranscriptionClient final : public asr::AsrBackend {
 public:
  explicit TranscriptionClient(TranscriptionClientConfig cfg);
  std::vector<std::string> transcribe(const asr::AudioTimeline& timeline, Millis prefix_end) override;
  void check_ready() override;

 private:
  TranscriptionClientConfig cfg_;
  Endpoint endpoint_;
};

}  // namespace simtrans::http
