#include "simtrans/policy_engine.hpp"

#include <cstdint>
#include <cstdio>

#include "json.hpp"

#include "simtrans/error.hpp"
#include "simtrans/metrics.hpp"
#include "simtrans/text.hpp"

namespace simtrans::policy {

namespace {

std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void SessionConfig::validate() const {
  if (min_read_time < Millis{0}) throw PreconditionError("min_read_time must be >= 0");
  if (chunk_duration <= Millis{0}) throw PreconditionError("chunk_duration must be > 0");
  if (limits.word_tokens == 0 || limits.final_tokens == 0) {
    throw PreconditionError("generation limits must be positive");
  }
  chat_template.validate();
}

std::string SessionConfig::fingerprint() const {
  nlohmann::ordered_json j;
  j["min_read_time_ms"] = min_read_time.count();
  j["chunk_ms"] = chunk_duration.count();
  j["src_lang"] = src_lang;
  j["tgt_lang"] = tgt_lang;
  j["priming"] = priming_enabled;
  j["background"] = background_enabled;
  j["word_tokens"] = limits.word_tokens;
  j["final_tokens"] = limits.final_tokens;
  j["template"] = {chat_template.begin_marker, chat_template.header_open, chat_template.header_close,
                   chat_template.turn_end, chat_template.system_role, chat_template.user_role,
                   chat_template.assistant_role};
  j["system_message"] = system_message;
  j["background_clause"] = background_clause;
  j["bleu"] = metrics::kBleuSignature;
  return fnv1a_hex(j.dump());
}

Session::Session(std::string session_id, const asr::AudioTimeline& audio, asr::AsrBackend& asr_backend,
                 llm::LlmBackend& llm_backend, SessionConfig cfg,
                 std::optional<prompt::BackgroundInfo> background, SessionContext context)
    : id_(std::move(session_id)),
      audio_(audio),
      asr_(audio_, asr_backend),
      generator_(llm_backend, cfg.limits, id_),
      cfg_(std::move(cfg)),
      background_(cfg_.background_enabled ? std::move(background) : std::nullopt),
      context_(std::move(context)),
      started_(std::chrono::steady_clock::now()) {
  cfg_.validate();
  audio_.chunk_duration = cfg_.chunk_duration;
}

std::string Session::current_prompt() const {
  prompt::PromptSpec spec;
  spec.src_lang = cfg_.src_lang;
  spec.tgt_lang = cfg_.tgt_lang;
  spec.system_message = cfg_.system_message;
  spec.background_clause = cfg_.background_clause;
  spec.background = background_;
  spec.priming_enabled = cfg_.priming_enabled;
  spec.partial_source = context_.source_prefix;
  for (const auto& w : asr_.state().committed_words) spec.partial_source.push_back(w.text);
  spec.partial_target = context_.target_prefix;
  spec.partial_target.insert(spec.partial_target.end(), target_.begin(), target_.end());
  return prompt::render_prompt(spec, cfg_.chat_template);
}

std::size_t Session::hypothesis_limit() const { return 2 * source_words().size() + 20; }

void Session::add_warning(const char* w) {
  for (const auto& existing : warnings_) {
    if (existing == w) return;
  }
  warnings_.emplace_back(w);
}

Millis Session::compute_aware(Millis at) const {
  const auto spent = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - started_);
  return at + spent;
}

std::optional<Action> Session::step() {
  if (finished_) throw PreconditionError("step on a finished session");
  if (asr_.exhausted()) {
    finalize();
    return std::nullopt;
  }
  const bool gated = asr_.elapsed() < cfg_.min_read_time || source_words().empty();
  if (gated) return read_or_finalize();
  if (target_.size() >= hypothesis_limit()) {
    add_warning(kWarnHypothesisOverflow);
    return read_or_finalize();
  }

  const std::string prompt = current_prompt();
  if (hook_) hook_(PromptEvent{prompt, asr_.elapsed(), source_words()});

  llm::WordResult result = llm::EndOfTurn{};
  try {
    result = generator_.complete_word(prompt);
  } catch (const OverflowError&) {
    add_warning(kWarnWordOverflow);
  }

  if (auto* word = std::get_if<llm::Word>(&result)) {
    const Millis at = asr_.elapsed();
    target_.push_back(word->text);
    delays_.push_back(at);
    if (cfg_.measure_wall_time) ca_delays_.push_back(compute_aware(at));
    trace_.push_back(Action::write(word->text, at));
    return trace_.back();
  }
  if (asr_.exhausted()) {
    finalize();
    return std::nullopt;
  }
  return read_or_finalize();
}

std::optional<Action> Session::read_or_finalize() {
  if (!asr_.next_word()) {
    finalize();
    return std::nullopt;
  }
  trace_.push_back(Action::read(asr_.elapsed()));
  return trace_.back();
}

void Session::finalize() {
  const Millis total = audio_.total_duration;
  if (!source_words().empty() || !context_.source_prefix.empty()) {
    const std::string prompt = current_prompt();
    if (hook_) hook_(PromptEvent{prompt, asr_.elapsed(), source_words()});
    const llm::Suffix suffix = generator_.complete_to_end(prompt);
    if (suffix.truncated) add_warning(kWarnFinalTruncated);
    for (auto& w : text::split_words(suffix.text)) {
      target_.push_back(std::move(w));
      delays_.push_back(total);
      if (cfg_.measure_wall_time) ca_delays_.push_back(compute_aware(total));
    }
  }
  const std::size_t limit = hypothesis_limit();
  if (target_.size() > limit) {
    add_warning(kWarnHypothesisOverflow);
    target_.resize(limit);
    delays_.resize(limit);
    if (ca_delays_.size() > limit) ca_delays_.resize(limit);
  }
  if (cfg_.measure_wall_time) {
    wall_time_ = std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - started_);
  }
  finished_ = true;
}

TranslationRecord Session::record(std::string reference, std::optional<std::string> source_text) const {
  if (!finished_) throw PreconditionError("record of an unfinished session");
  TranslationRecord r;
  r.sentence_id = id_;
  r.hypothesis = text::join_words(target_);
  r.reference = std::move(reference);
  r.delays = delays_;
  r.trace = trace_;
  r.wall_time = wall_time_;
  r.source_duration = audio_.total_duration;
  r.config_fingerprint = cfg_.fingerprint();
  std::vector<std::string> src;
  for (const auto& w : source_words()) src.push_back(w.text);
  r.source_transcript = text::join_words(src);
  r.source_text = std::move(source_text);
  if (cfg_.measure_wall_time) r.compute_aware_delays = ca_delays_;
  r.warnings = warnings_;
  return r;
}

TranslationRecord run_session(const std::string& sentence_id, const asr::AudioTimeline& audio,
                              const std::string& reference,
                              const std::optional<prompt::BackgroundInfo>& background,
                              const SessionConfig& cfg, asr::AsrBackend& asr_backend,
                              llm::LlmBackend& llm_backend, const SessionContext& context,
                              const PromptHook& hook) {
  Session session(sentence_id, audio, asr_backend, llm_backend, cfg, background, context);
  if (hook) session.set_prompt_hook(hook);
  while (!session.finished()) session.step();
  return session.record(reference);
}

}  // namespace simtrans::policy
