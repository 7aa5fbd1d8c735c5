#include "simtrans/asr_stream.hpp"

#include <algorithm>

#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::asr {
namespace {

// Committed words are immutable: positions below |committed| are taken as
// settled even if the recognizer now reports something else there. Pending
// words that survive unchanged keep their original timestamp.
void reconcile(TranscriptState& state, const std::vector<std::string>& visible, Millis stamp) {
  const std::size_t n_committed = state.committed_words.size();
  if (visible.size() < n_committed) {
    throw ReconciliationError("transcription has " + std::to_string(visible.size()) +
                              " words but " + std::to_string(n_committed) +
                              " are already committed");
  }
  std::deque<RecognizedWord> pending;
  bool unchanged = true;
  for (std::size_t i = n_committed; i < visible.size(); ++i) {
    const std::size_t k = i - n_committed;
    if (unchanged && k < state.pending_words.size() && state.pending_words[k].text == visible[i]) {
      pending.push_back(state.pending_words[k]);
    } else {
      unchanged = false;
      pending.push_back({visible[i], stamp});
    }
  }
  state.pending_words = std::move(pending);
}

}  // namespace

AudioTimeline AudioTimeline::from_fixture(std::vector<TimedWord> words, Millis chunk) {
  AudioTimeline t;
  t.total_duration = words.empty() ? Millis{0} : words.back().end;
  t.chunk_duration = chunk;
  t.source = std::move(words);
  return t;
}

AudioTimeline AudioTimeline::from_pcm(PcmAudio audio, Millis chunk) {
  AudioTimeline t;
  t.total_duration = Millis{static_cast<long long>(audio.samples.size()) * 1000 / kSampleRate};
  t.chunk_duration = chunk;
  t.source = std::move(audio);
  return t;
}

std::vector<std::string> FixtureAsrBackend::transcribe(const AudioTimeline& timeline, Millis prefix_end) {
  const auto* words = std::get_if<std::vector<TimedWord>>(&timeline.source);
  if (words == nullptr) throw PreconditionError("fixture recognizer needs a timed-transcript timeline");
  std::vector<std::string> out;
  for (const auto& w : *words) {
    if (w.end > prefix_end) break;
    if (w.surface_override) {
      for (auto& piece : text::split_words(*w.surface_override)) out.push_back(std::move(piece));
    } else {
      out.push_back(w.word);
    }
  }
  return out;
}

TranscriptState ingest_chunk(TranscriptState state, const AudioTimeline& timeline, AsrBackend& backend) {
  if (state.audio_finished) throw PreconditionError("ingest_chunk on finished audio");
  if (timeline.chunk_duration <= Millis{0}) throw PreconditionError("chunk_duration must be positive");
  if (timeline.total_duration <= Millis{0}) {
    state.audio_finished = true;
    return state;
  }
  if (state.audio_cursor >= timeline.total_duration) {
    throw PreconditionError("no audio left to ingest");
  }
  const Millis cursor = std::min(state.audio_cursor + timeline.chunk_duration, timeline.total_duration);
  const bool covers_all = cursor == timeline.total_duration;

  std::vector<std::string> raw = backend.transcribe(timeline, cursor);
  if (!covers_all && !raw.empty()) raw.pop_back();

  reconcile(state, raw, cursor);
  state.audio_cursor = cursor;
  state.audio_finished = covers_all;
  return state;
}

std::optional<RecognizedWord> drain_word(TranscriptState& state) {
  if (state.pending_words.empty()) return std::nullopt;
  RecognizedWord w = std::move(state.pending_words.front());
  state.pending_words.pop_front();
  state.committed_words.push_back(w);
  return w;
}

TranscriptState finalize(TranscriptState state, const AudioTimeline& timeline, AsrBackend& backend) {
  if (state.audio_finished) return state;
  if (timeline.total_duration <= Millis{0}) {
    state.audio_finished = true;
    return state;
  }
  const std::vector<std::string> raw = backend.transcribe(timeline, timeline.total_duration);
  reconcile(state, raw, timeline.total_duration);
  state.audio_cursor = timeline.total_duration;
  state.audio_finished = true;
  return state;
}

AsrStream::AsrStream(const AudioTimeline& timeline, AsrBackend& backend)
    : timeline_(&timeline), backend_(&backend) {}

std::optional<RecognizedWord> AsrStream::next_word() {
  while (state_.pending_words.empty() && !state_.audio_finished) {
    state_ = ingest_chunk(state_, *timeline_, *backend_);
  }
  return drain_word(state_);
}

}  // namespace simtrans::asr
