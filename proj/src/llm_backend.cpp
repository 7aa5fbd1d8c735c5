#include "simtrans/llm_backend.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::llm {

using nlohmann::json;

ScriptedLlmBackend::ScriptedLlmBackend(std::map<std::string, Script> scripts) {
  for (auto& [id, script] : scripts) sessions_[id].script = std::move(script);
}

std::map<std::string, ScriptedLlmBackend::Script> ScriptedLlmBackend::parse(std::string_view jsonl) {
  std::map<std::string, Script> scripts;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::normalize_whitespace(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("script line " + std::to_string(line_no) + ": " + e.what(), e.byte);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("events") ||
        !j["events"].is_array()) {
      throw SchemaError("script line " + std::to_string(line_no) + ": expected {\"id\", \"events\"}");
    }
    Script script;
    for (const auto& ev : j["events"]) {
      if (ev.is_null()) {
        script.push_back(TokenEvent::end_of_turn());
      } else if (ev.is_string()) {
        script.push_back(TokenEvent::fragment(ev.get<std::string>()));
      } else {
        throw SchemaError("script line " + std::to_string(line_no) + ": events must be strings or null");
      }
    }
    const auto id = j["id"].get<std::string>();
    if (scripts.count(id)) {
      throw SchemaError("script line " + std::to_string(line_no) + ": duplicate id " + id);
    }
    scripts[id] = std::move(script);
  }
  return scripts;
}

std::map<std::string, ScriptedLlmBackend::Script> ScriptedLlmBackend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ScriptedLlmBackend::set_script(const std::string& session_id, Script script) {
  std::lock_guard lock(mu_);
  sessions_[session_id] = Cursor{std::move(script), 0, 0};
}

void ScriptedLlmBackend::stream(const GenerationRequest& request, const TokenSink& sink) {
  std::lock_guard lock(mu_);
  Cursor& cur = sessions_[request.session_id];
  ++cur.calls;
  for (std::size_t n = 0; n < request.max_new_tokens; ++n) {
    TokenEvent ev = TokenEvent::end_of_turn();
    if (cur.position < cur.script.size()) ev = cur.script[cur.position++];
    const bool more = sink(ev);
    if (ev.is_end_of_turn() || !more) return;
  }
}

std::size_t ScriptedLlmBackend::position(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? 0 : it->second.position;
}

std::size_t ScriptedLlmBackend::call_count(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? 0 : it->second.calls;
}

bool split_completed_word(std::string_view accumulated, std::string& word, std::string& rest) {
  const std::u32string cps = text::decode_utf8(accumulated);
  std::size_t start = 0;
  while (start < cps.size() && text::is_space(cps[start])) ++start;
  std::size_t end = start;
  while (end < cps.size() && !text::is_space(cps[end])) ++end;
  if (end == start || end == cps.size()) return false;
  const std::u32string_view view(cps);
  word = text::encode_utf8(view.substr(start, end - start));
  rest = text::encode_utf8(view.substr(end));
  return true;
}

WordGenerator::WordGenerator(LlmBackend& backend, GenerationLimits limits, std::string session_id)
    : backend_(&backend), limits_(limits), session_id_(std::move(session_id)) {}

WordResult WordGenerator::complete_word(std::string_view prompt) {
  std::string word;
  std::string rest;
  if (split_completed_word(carry_.text, word, rest)) {
    carry_.text = std::move(rest);
    return Word{std::move(word)};
  }
  if (carry_.end_of_turn) {
    std::string last = text::normalize_whitespace(carry_.text);
    carry_.text.clear();
    if (!last.empty()) return Word{std::move(last)};
    carry_ = {};
    return EndOfTurn{};
  }

  GenerationRequest request;
  request.prompt = std::string(prompt) + carry_.text;
  request.max_new_tokens = limits_.word_tokens;
  request.session_id = session_id_;

  std::string accumulated = carry_.text;
  bool completed = false;
  bool ended = false;
  backend_->stream(request, [&](const TokenEvent& ev) {
    if (ev.is_end_of_turn()) {
      ended = true;
      return false;
    }
    accumulated += ev.payload;
    if (split_completed_word(accumulated, word, rest)) {
      completed = true;
      return false;
    }
    return true;
  });

  if (completed) {
    carry_ = {std::move(rest), false};
    return Word{std::move(word)};
  }
  if (ended) {
    std::string last = text::normalize_whitespace(accumulated);
    if (!last.empty()) {
      carry_ = {{}, true};
      return Word{std::move(last)};
    }
    carry_ = {};
    return EndOfTurn{};
  }
  carry_ = {};
  throw OverflowError("no word boundary within " + std::to_string(limits_.word_tokens) + " tokens");
}

Suffix WordGenerator::generate_text(std::string_view prompt) {
  Suffix out;
  out.text = carry_.text;
  if (carry_.end_of_turn) {
    carry_ = {};
    return out;
  }
  GenerationRequest request;
  request.prompt = std::string(prompt) + carry_.text;
  request.max_new_tokens = limits_.final_tokens;
  request.session_id = session_id_;
  carry_ = {};

  bool ended = false;
  backend_->stream(request, [&](const TokenEvent& ev) {
    if (ev.is_end_of_turn()) {
      ended = true;
      return false;
    }
    out.text += ev.payload;
    return true;
  });
  out.truncated = !ended;
  return out;
}

Suffix WordGenerator::complete_to_end(std::string_view prompt) {
  Suffix out = generate_text(prompt);
  out.text = text::normalize_whitespace(out.text);
  return out;
}

}  // namespace simtrans::llm
