#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "simtrans/asr_stream.hpp"
#include "simtrans/llm_backend.hpp"
#include "simtrans/prompt_builder.hpp"

namespace simtrans::policy {

struct SessionConfig {
  /// No WRITE happens before this much source audio has been consumed.
  Millis min_read_time{1200};
  Millis chunk_duration{asr::kDefaultChunk};
  std::string src_lang = "English";
  std::string tgt_lang = "German";
  bool priming_enabled = true;
  bool background_enabled = true;
  llm::GenerationLimits limits;
  prompt::ChatTemplate chat_template;
  std::string system_message{prompt::kDefaultSystemMessage};
  std::string background_clause{prompt::kDefaultBackgroundClause};
  /// Measure wall time (live backends). Scripted runs leave it off so that
  /// no timing is ever reported for them.
  bool measure_wall_time = false;

  void validate() const;
  /// Stable hash of every field that can change a translation or its score.
  std::string fingerprint() const;
};

enum class ActionKind { Read, Write };

struct Action {
  ActionKind kind = ActionKind::Read;
  std::string word;
  Millis at_source{0};

  static Action read(Millis at) { return {ActionKind::Read, {}, at}; }
  static Action write(std::string w, Millis at) { return {ActionKind::Write, std::move(w), at}; }
  bool operator==(const Action&) const = default;
};

struct TranslationRecord {
  std::string sentence_id;
  std::string hypothesis;
  std::string reference;
  /// One entry per hypothesis word, in source-audio milliseconds.
  std::vector<Millis> delays;
  std::vector<Action> trace;
  std::optional<Millis> wall_time;
  Millis source_duration{0};
  std::string config_fingerprint;
  /// Recognized source words, and the gold transcript when the dataset has one.
  std::string source_transcript;
  std::optional<std::string> source_text;
  /// Delays that also count elapsed processing time; only with wall timing.
  std::optional<std::vector<Millis>> compute_aware_delays;
  std::vector<std::string> warnings;

  bool operator==(const TranslationRecord&) const = default;
};

/// Words from earlier sentences of the same talk, shown ahead of the current
/// sentence when cross-sentence carryover is on.
struct SessionContext {
  std::vector<std::string> source_prefix;
  std::vector<std::string> target_prefix;
};

struct PromptEvent {
  const std::string& prompt;
  Millis at_source;
  const std::vector<asr::RecognizedWord>& source_words;
};
using PromptHook = std::function<void(const PromptEvent&)>;

inline constexpr const char* kWarnWordOverflow = "word_overflow";
inline constexpr const char* kWarnFinalTruncated = "final_truncated";
inline constexpr const char* kWarnHypothesisOverflow = "hypothesis_overflow";

/// One sentence-level simultaneous translation session. Each step performs
/// one READ or WRITE; once the source is exhausted and the model ends its
/// turn, the rest of the translation is generated in one go and every word
/// of it is stamped with the full source duration.
class Session {
 public:
  Session(std::string session_id, const asr::AudioTimeline& audio, asr::AsrBackend& asr_backend,
          llm::LlmBackend& llm_backend, SessionConfig cfg,
          std::optional<prompt::BackgroundInfo> background = std::nullopt, SessionContext context = {});
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Performs the next action. Returns nullopt when the step finalized the
  /// session instead. Backend errors propagate and leave the session
  /// resumable.
  std::optional<Action> step();
  bool finished() const { return finished_; }

  /// Finished record. `reference` is copied in verbatim.
  TranslationRecord record(std::string reference, std::optional<std::string> source_text = std::nullopt) const;

  std::string current_prompt() const;
  const std::vector<std::string>& partial_target() const { return target_; }
  const std::vector<asr::RecognizedWord>& source_words() const { return asr_.state().committed_words; }
  const std::vector<Action>& trace() const { return trace_; }
  Millis elapsed() const { return asr_.elapsed(); }
  void set_prompt_hook(PromptHook hook) { hook_ = std::move(hook); }

 private:
  std::optional<Action> read_or_finalize();
  void finalize();
  std::size_t hypothesis_limit() const;
  void add_warning(const char* w);
  Millis compute_aware(Millis at) const;

  std::string id_;
  asr::AudioTimeline audio_;
  asr::AsrStream asr_;
  llm::WordGenerator generator_;
  SessionConfig cfg_;
  std::optional<prompt::BackgroundInfo> background_;
  SessionContext context_;
  PromptHook hook_;

  std::vector<std::string> target_;
  std::vector<Millis> delays_;
  std::vector<Millis> ca_delays_;
  std::vector<Action> trace_;
  std::vector<std::string> warnings_;
  bool finished_ = false;
  std::chrono::steady_clock::time_point started_;
  std::optional<Millis> wall_time_;
};

/// Runs a session to completion and returns its record.
TranslationRecord run_session(const std::string& sentence_id, const asr::AudioTimeline& audio,
                              const std::string& reference,
                              const std::optional<prompt::BackgroundInfo>& background,
                              const SessionConfig& cfg, asr::AsrBackend& asr_backend,
                              llm::LlmBackend& llm_backend, const SessionContext& context = {},
                              const PromptHook& hook = {});

}  // namespace simtrans::policy
