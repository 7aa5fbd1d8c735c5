#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace simtrans::llm {

inline constexpr std::size_t kDefaultWordTokens = 24;
inline constexpr std::size_t kDefaultFinalTokens = 256;

struct GenerationRequest {
  std::string prompt;
  std::size_t max_new_tokens = kDefaultWordTokens;
  /// Only greedy decoding is supported; kept explicit for the wire format.
  double temperature = 0.0;
  /// Routes scripted backends to the right script; ignored by live ones.
  std::string session_id;
};

struct TokenEvent {
  enum class Kind { TextFragment, EndOfTurn };
  Kind kind = Kind::TextFragment;
  std::string payload;

  static TokenEvent fragment(std::string text) { return {Kind::TextFragment, std::move(text)}; }
  static TokenEvent end_of_turn() { return {Kind::EndOfTurn, {}}; }
  bool is_end_of_turn() const { return kind == Kind::EndOfTurn; }
  bool operator==(const TokenEvent&) const = default;
};

/// Receives events in order; return false to stop the stream early.
using TokenSink = std::function<bool(const TokenEvent&)>;

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Streams at most request.max_new_tokens events. Throws TransientError on
  /// transport failure. A stream that ends without EndOfTurn means the token
  /// budget ran out.
  virtual void stream(const GenerationRequest& request, const TokenSink& sink) = 0;
  /// Cheap reachability probe, run before any session starts.
  virtual void check_ready() {}
};

/// Replays per-session fragment scripts. Each session id has its own read
/// position; once a script is exhausted every call yields EndOfTurn.
class ScriptedLlmBackend final : public LlmBackend {
 public:
  using Script = std::vector<TokenEvent>;

  ScriptedLlmBackend() = default;
  explicit ScriptedLlmBackend(std::map<std::string, Script> scripts);

  /// JSONL, one `{"id": ..., "events": [...]}` per line. Strings are text
  /// fragments, null is end of turn.
  static std::map<std::string, Script> load(const std::string& path);
  static std::map<std::string, Script> parse(std::string_view jsonl);

  void set_script(const std::string& session_id, Script script);
  void stream(const GenerationRequest& request, const TokenSink& sink) override;

  /// Events consumed so far for a session.
  std::size_t position(const std::string& session_id) const;
  std::size_t call_count(const std::string& session_id) const;

 private:
  struct Cursor {
    Script script;
    std::size_t position = 0;
    std::size_t calls = 0;
  };
  mutable std::mutex mu_;
  std::map<std::string, Cursor> sessions_;
};

struct Word {
  std::string text;
  bool operator==(const Word&) const = default;
};
struct EndOfTurn {
  bool operator==(const EndOfTurn&) const = default;
};
using WordResult = std::variant<Word, EndOfTurn>;

struct Suffix {
  std::string text;
  bool truncated = false;
};

/// Text generated past the last returned word, plus whether the model already
/// ended its turn right after that word.
struct Carry {
  std::string text;
  bool end_of_turn = false;

  bool empty() const { return text.empty() && !end_of_turn; }
};

/// Splits `accumulated` at the first whitespace that follows a non-space
/// character. Returns false when no such boundary exists yet. On success
/// `word` is the completed word and `rest` starts with the boundary.
bool split_completed_word(std::string_view accumulated, std::string& word, std::string& rest);

struct GenerationLimits {
  std::size_t word_tokens = kDefaultWordTokens;
  std::size_t final_tokens = kDefaultFinalTokens;
};

/// Word-at-a-time greedy generation for one session. The carried-over
/// fragment is appended to the caller's prompt on the next request.
class WordGenerator {
 public:
  WordGenerator(LlmBackend& backend, GenerationLimits limits = {}, std::string session_id = {});

  /// Generates until a full word or end of turn. Throws OverflowError when the
  /// budget runs out with no boundary; the partial text is dropped.
  WordResult complete_word(std::string_view prompt);

  /// Generates until end of turn and returns the whitespace-normalized
  /// remainder of the translation.
  Suffix complete_to_end(std::string_view prompt);

  /// Generates raw text until end of turn with no normalization.
  Suffix generate_text(std::string_view prompt);

  const Carry& carry() const { return carry_; }
  void reset_carry() { carry_ = {}; }

 private:
  LlmBackend* backend_;
  GenerationLimits limits_;
  std::string session_id_;
  Carry carry_;
};

}  // namespace simtrans::llm
