#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simtrans/asr_stream.hpp"
#include "simtrans/llm_backend.hpp"
#include "simtrans/policy_engine.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using simtrans::Millis;

inline fs::path data_path(const std::string& rel) { return fs::path(SIMTRANS_TEST_DATA) / rel; }

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << content;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("simtrans-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline simtrans::asr::AudioTimeline fixture(std::initializer_list<std::pair<const char*, long long>> words,
                                            Millis chunk = simtrans::asr::kDefaultChunk) {
  std::vector<simtrans::asr::TimedWord> out;
  for (const auto& [w, end] : words) out.push_back({w, Millis{end}, std::nullopt});
  return simtrans::asr::AudioTimeline::from_fixture(std::move(out), chunk);
}

/// nullopt stands for end of turn.
using Events = std::vector<std::optional<std::string>>;

inline simtrans::llm::ScriptedLlmBackend::Script script(const Events& events) {
  simtrans::llm::ScriptedLlmBackend::Script s;
  for (const auto& e : events) {
    s.push_back(e ? simtrans::llm::TokenEvent::fragment(*e) : simtrans::llm::TokenEvent::end_of_turn());
  }
  return s;
}

/// One line per action: "READ <ms>" or "WRITE <ms> <word>", then one
/// "FINAL <ms> <word>" per word produced at finalization.
inline std::string trace_text(const simtrans::policy::TranslationRecord& r) {
  std::string out;
  std::size_t writes = 0;
  for (const auto& a : r.trace) {
    if (a.kind == simtrans::policy::ActionKind::Read) {
      out += "READ " + std::to_string(a.at_source.count()) + "\n";
    } else {
      out += "WRITE " + std::to_string(a.at_source.count()) + " " + a.word + "\n";
      ++writes;
    }
  }
  std::istringstream hyp(r.hypothesis);
  std::string w;
  std::size_t i = 0;
  while (hyp >> w) {
    if (i >= writes) out += "FINAL " + std::to_string(r.delays.at(i).count()) + " " + w + "\n";
    ++i;
  }
  return out;
}

/// Drops comment lines.
inline std::string strip_comments(const std::string& s) {
  std::istringstream in(s);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

// Random inputs shared by the property tests.

inline std::vector<simtrans::asr::TimedWord> random_fixture(std::mt19937& rng, std::size_t max_words = 14) {
  static const char* vocab[] = {"the", "minister", "said", "elections", "are", "likely",
                                "in", "autumn", "climate", "crisis", "is", "real", "we", "must", "act"};
  std::uniform_int_distribution<std::size_t> n_words(0, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(vocab) - 1);
  std::uniform_int_distribution<long long> gap(40, 650);
  std::vector<simtrans::asr::TimedWord> words;
  long long t = 0;
  const std::size_t n = n_words(rng);
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    words.push_back({vocab[pick(rng)], Millis{t}, std::nullopt});
  }
  return words;
}

inline Events random_events(std::mt19937& rng, std::size_t max_events = 40) {
  static const char* pieces[] = {" Wahl", "en", " sind", " im", " Herbst", ",", ".", " der", "Minister",
                                 " sagte", " Kli", "ma", " Krise", " wir", " müssen", " handeln", " ja"};
  std::uniform_int_distribution<std::size_t> n_events(0, max_events);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
  std::bernoulli_distribution eot(0.3);
  Events events;
  const std::size_t n = n_events(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (eot(rng)) {
      events.push_back(std::nullopt);
    } else {
      events.push_back(std::string(pieces[pick(rng)]));
    }
  }
  return events;
}

/// Answers every per-word request with end of turn and every final request
/// with the whole translation, so all output is deferred to finalization.
class DeferringBackend final : public simtrans::llm::LlmBackend {
 public:
  DeferringBackend(std::size_t word_tokens, std::string translation)
      : word_tokens_(word_tokens), translation_(std::move(translation)) {}

  void stream(const simtrans::llm::GenerationRequest& request, const simtrans::llm::TokenSink& sink) override {
    using simtrans::llm::TokenEvent;
    if (request.max_new_tokens != word_tokens_) {
      std::istringstream in(translation_);
      std::string w;
      while (in >> w) {
        if (!sink(TokenEvent::fragment(" " + w))) return;
      }
    }
    sink(TokenEvent::end_of_turn());
  }

 private:
  std::size_t word_tokens_;
  std::string translation_;
};

}  // namespace testsupport
