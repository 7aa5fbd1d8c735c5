#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace simtrans {

using Millis = std::chrono::milliseconds;

namespace asr {

inline constexpr Millis kDefaultChunk{200};
inline constexpr int kSampleRate = 16000;

/// A word of a timed-transcript fixture. The word counts as recognized once
/// the audio prefix reaches `end`. `surface_override` replaces the text the
/// simulated recognizer reports, to inject recognition errors.
struct TimedWord {
  std::string word;
  Millis end{0};
  std::optional<std::string> surface_override;

  bool operator==(const TimedWord&) const = default;
};

/// 16 kHz mono signed 16-bit samples.
struct PcmAudio {
  std::vector<std::int16_t> samples;
};

struct AudioTimeline {
  Millis total_duration{0};
  Millis chunk_duration{kDefaultChunk};
  std::variant<std::vector<TimedWord>, PcmAudio> source;

  static AudioTimeline from_fixture(std::vector<TimedWord> words, Millis chunk = kDefaultChunk);
  static AudioTimeline from_pcm(PcmAudio audio, Millis chunk = kDefaultChunk);

  bool is_fixture() const { return std::holds_alternative<std::vector<TimedWord>>(source); }
};

struct RecognizedWord {
  std::string text;
  Millis available_at{0};

  bool operator==(const RecognizedWord&) const = default;
};

struct TranscriptState {
  std::vector<RecognizedWord> committed_words;
  std::deque<RecognizedWord> pending_words;
  Millis audio_cursor{0};
  bool audio_finished = false;

  bool exhausted() const { return audio_finished && pending_words.empty(); }
  bool operator==(const TranscriptState&) const = default;
};

/// Transcribes an audio prefix from scratch. Implementations must tolerate
/// concurrent calls for distinct sessions.
class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  /// Word list for the first `prefix_end` of `timeline`. Throws
  /// TransientError on transport failure.
  virtual std::vector<std::string> transcribe(const AudioTimeline& timeline, Millis prefix_end) = 0;
  /// Cheap reachability probe, run before any session starts.
  virtual void check_ready() {}
};

/// Simulated recognizer over timed-transcript fixtures: a word is reported
/// once the prefix covers its end time. Deterministic.
class FixtureAsrBackend final : public AsrBackend {
 public:
  std::vector<std::string> transcribe(const AudioTimeline& timeline, Millis prefix_end) override;
};

/// Consumes one more chunk, re-transcribes the whole prefix and reconciles
/// against the committed words. The last raw word is dropped unless the
/// prefix now covers the whole timeline. On ReconciliationError the state is
/// left untouched.
TranscriptState ingest_chunk(TranscriptState state, const AudioTimeline& timeline, AsrBackend& backend);

/// Moves the head of the pending buffer into the committed words.
std::optional<RecognizedWord> drain_word(TranscriptState& state);

/// Transcribes the full timeline once more without discarding the tail and
/// marks the audio finished. No-op when already finished.
TranscriptState finalize(TranscriptState state, AudioTimeline const& timeline, AsrBackend& backend);

/// Owns a session's transcript and hands out source words one at a time,
/// ingesting more audio whenever the buffer runs dry.
class AsrStream {
 public:
  AsrStream(const AudioTimeline& timeline, AsrBackend& backend);

  /// Next source word, or nullopt once the audio is finished and drained.
  std::optional<RecognizedWord> next_word();

  const TranscriptState& state() const { return state_; }
  const AudioTimeline& timeline() const { return *timeline_; }
  Millis elapsed() const { return state_.audio_cursor; }
  bool exhausted() const { return state_.exhausted(); }

 private:
  const AudioTimeline* timeline_;
  AsrBackend* backend_;
  TranscriptState state_;
};

}  // namespace asr
}  // namespace simtrans
