#include "doctest.h"

#include "simtrans/datasets.hpp"
#include "simtrans/error.hpp"
#include "simtrans/policy_engine.hpp"
#include "simtrans/text.hpp"
#include "support.hpp"

using namespace simtrans;
using namespace simtrans::policy;
using testsupport::Events;
using testsupport::fixture;
using testsupport::script;

namespace {

struct Run {
  TranslationRecord record;
  std::vector<std::vector<std::string>> targets;  // partial target after each step
  std::vector<std::string> prompts;
};

Run run(const asr::AudioTimeline& tl, const Events& events, SessionConfig cfg = {},
        std::optional<prompt::BackgroundInfo> bg = std::nullopt, SessionContext ctx = {}) {
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  llm_backend.set_script("s", script(events));
  Session session("s", tl, asr_backend, llm_backend, cfg, std::move(bg), std::move(ctx));
  Run out;
  session.set_prompt_hook([&](const PromptEvent& ev) {
    out.prompts.push_back(ev.prompt);
    for (const auto& w : ev.source_words) CHECK(w.available_at <= ev.at_source);
  });
  while (!session.finished()) {
    session.step();
    out.targets.push_back(session.partial_target());
  }
  out.record = session.record("ref");
  return out;
}

std::size_t count_kind(const TranslationRecord& r, ActionKind k) {
  return static_cast<std::size_t>(
      std::count_if(r.trace.begin(), r.trace.end(), [&](const Action& a) { return a.kind == k; }));
}

void check_invariants(const Run& r, const SessionConfig& cfg, std::size_t n_source_words) {
  const TranslationRecord& rec = r.record;
  const auto hyp = text::split_words(rec.hypothesis);
  REQUIRE(rec.delays.size() == hyp.size());
  Millis last{0};
  for (const auto& a : rec.trace) {
    CHECK(a.at_source >= last);
    last = a.at_source;
    if (a.kind == ActionKind::Write) {
      CHECK(a.at_source >= cfg.min_read_time);
      CHECK_FALSE(a.word.empty());
    } else {
      CHECK(a.word.empty());
    }
  }
  for (std::size_t i = 0; i < rec.delays.size(); ++i) {
    CHECK(rec.delays[i] <= rec.source_duration);
    if (i > 0) CHECK(rec.delays[i] >= rec.delays[i - 1]);
  }
  CHECK(count_kind(rec, ActionKind::Read) == n_source_words);
  CHECK(count_kind(rec, ActionKind::Write) <= hyp.size());
  for (const auto& t : r.targets) {
    REQUIRE(t.size() <= hyp.size());
    CHECK(std::equal(t.begin(), t.end(), hyp.begin()));
  }
}

}  // namespace

TEST_CASE("golden trace") {
  const auto tl = data::load_timed_transcript(testsupport::data_path("golden_trace/fixture.jsonl"));
  const auto scripts =
      llm::ScriptedLlmBackend::load(testsupport::data_path("golden_trace/script.jsonl").string());
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend(scripts);
  const TranslationRecord r = run_session("golden", tl, "", std::nullopt, {}, asr_backend, llm_backend);
  CHECK(testsupport::trace_text(r) ==
        testsupport::strip_comments(testsupport::read_file(testsupport::data_path("golden_trace/expected_trace.txt"))));
  CHECK(r.hypothesis == testsupport::read_file(testsupport::data_path("golden_trace/expected_hypothesis.txt")));
  std::string delays;
  for (Millis d : r.delays) delays += (delays.empty() ? "" : " ") + std::to_string(d.count());
  CHECK(delays + "\n" == testsupport::read_file(testsupport::data_path("golden_trace/expected_delays.txt")));
}

TEST_CASE("step: the gate reads without consulting the backend") {
  const auto tl = fixture({{"Early", 300}, {"elections", 700}, {"are", 1100}, {"likely", 1900}});
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  llm_backend.set_script("s", script({"Vor", "zeitige", " Wahlen"}));
  Session session("s", tl, asr_backend, llm_backend, {});
  const auto a = session.step();
  REQUIRE(a);
  CHECK(a->kind == ActionKind::Read);
  CHECK(a->at_source == Millis{800});
  CHECK(llm_backend.call_count("s") == 0);
}

TEST_CASE("step: a word becomes a WRITE at the current cursor") {
  const auto tl = fixture({{"Early", 300}, {"elections", 700}, {"are", 1100}, {"likely", 1900}});
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  llm_backend.set_script("s", script({"Vor", "zeitige", " Wahlen"}));
  SessionConfig cfg;
  cfg.min_read_time = Millis{400};
  Session session("s", tl, asr_backend, llm_backend, cfg);
  session.step();  // READ "Early" at 800
  const auto a = session.step();
  REQUIRE(a);
  CHECK(*a == Action::write("Vorzeitige", Millis{800}));
  CHECK(session.partial_target() == std::vector<std::string>{"Vorzeitige"});
}

TEST_CASE("step: end of turn mid-audio reads exactly one more word") {
  const auto tl = fixture({{"a", 100}, {"b", 150}, {"c", 180}, {"d", 1900}});
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  llm_backend.set_script("s", script({std::nullopt}));
  SessionConfig cfg;
  cfg.min_read_time = Millis{0};
  Session session("s", tl, asr_backend, llm_backend, cfg);
  session.step();  // first READ: chunk 200 reveals a, b (c is the dropped tail)
  REQUIRE(session.source_words().size() == 1);
  const std::string before = session.current_prompt();
  const auto a = session.step();
  REQUIRE(a);
  CHECK(a->kind == ActionKind::Read);
  CHECK(session.source_words().size() == 2);
  CHECK(session.current_prompt().find("Context: a b\n") != std::string::npos);
  CHECK(before.find("Context: a\n") != std::string::npos);
}

TEST_CASE("wait until end: every delay is the source duration") {
  const auto tl = fixture({{"Thank", 300}, {"you", 500}, {"very", 800}, {"much.", 1100}});
  SessionConfig cfg;
  cfg.min_read_time = Millis{1800};
  const Run r = run(tl, {" Vielen", " Dank.", std::nullopt}, cfg);
  CHECK(r.record.hypothesis == "Vielen Dank.");
  CHECK(r.record.delays == std::vector<Millis>{Millis{1100}, Millis{1100}});
  CHECK(count_kind(r.record, ActionKind::Write) == 0);
}

TEST_CASE("deferring backend: all output at finalization") {
  const auto tl = fixture({{"a", 300}, {"b", 900}, {"c", 1500}, {"d", 2600}});
  asr::FixtureAsrBackend asr_backend;
  testsupport::DeferringBackend backend(llm::kDefaultWordTokens, "eins zwei drei");
  SessionConfig cfg;
  cfg.min_read_time = Millis{0};
  const TranslationRecord r = run_session("s", tl, "", std::nullopt, cfg, asr_backend, backend);
  CHECK(r.hypothesis == "eins zwei drei");
  CHECK(r.delays == std::vector<Millis>(3, Millis{2600}));
  CHECK(count_kind(r, ActionKind::Read) == 4);
}

TEST_CASE("empty translation") {
  const auto tl = fixture({{"a", 300}, {"b", 900}});
  const Run r = run(tl, {std::nullopt});
  CHECK(r.record.hypothesis.empty());
  CHECK(r.record.delays.empty());
  CHECK(count_kind(r.record, ActionKind::Write) == 0);
  CHECK(count_kind(r.record, ActionKind::Read) == 2);
}

TEST_CASE("empty audio gives an empty record without any generation") {
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  llm_backend.set_script("s", script({" nie", std::nullopt}));
  const TranslationRecord r =
      run_session("s", asr::AudioTimeline::from_fixture({}), "", std::nullopt, {}, asr_backend, llm_backend);
  CHECK(r.hypothesis.empty());
  CHECK(r.trace.empty());
  CHECK(llm_backend.call_count("s") == 0);
}

TEST_CASE("runaway generation is truncated with a warning") {
  const auto tl = fixture({{"a", 300}});
  Events events;
  for (int i = 0; i < 60; ++i) events.push_back(" w" + std::to_string(i));
  events.push_back(std::nullopt);
  const Run r = run(tl, events);
  CHECK(text::split_words(r.record.hypothesis).size() == 22);
  CHECK(r.record.delays.size() == 22);
  CHECK(r.record.warnings == std::vector<std::string>{kWarnHypothesisOverflow});
}

TEST_CASE("word overflow counts as end of turn") {
  const auto tl = fixture({{"a", 300}, {"b", 1500}, {"c", 2000}});
  SessionConfig cfg;
  cfg.min_read_time = Millis{0};
  cfg.limits.word_tokens = 2;
  const Run r = run(tl, {"x", "y", "z", " ok", std::nullopt}, cfg);
  CHECK(std::find(r.record.warnings.begin(), r.record.warnings.end(), kWarnWordOverflow) !=
        r.record.warnings.end());
  CHECK(r.record.trace.at(1).kind == ActionKind::Read);
}

TEST_CASE("background and priming only change the prompt") {
  const auto tl = fixture({{"Early", 300}, {"elections", 700}, {"are", 1100}, {"likely", 1900}});
  const Events events{"Vor", "zeitige", " Wahlen", std::nullopt, " sind", std::nullopt, " wahr", "scheinlich", std::nullopt};
  const prompt::BackgroundInfo bg{"Elections", {{"Bundestag", "parliament"}}};
  SessionConfig cfg;
  cfg.min_read_time = Millis{600};
  const Run base = run(tl, events, cfg, bg);
  CHECK(base.prompts.front().find("background information: {\"topic\":\"Elections\"") != std::string::npos);

  SessionConfig no_bg = cfg;
  no_bg.background_enabled = false;
  const Run without = run(tl, events, no_bg, bg);
  SessionConfig no_priming = cfg;
  no_priming.priming_enabled = false;
  const Run unprimed = run(tl, events, no_priming, bg);

  for (const Run* other : {&without, &unprimed}) {
    CHECK(other->record.trace == base.record.trace);
    CHECK(other->record.hypothesis == base.record.hypothesis);
    CHECK(other->record.delays == base.record.delays);
    CHECK(other->prompts.size() == base.prompts.size());
  }
  CHECK(without.prompts.front().find("background information") == std::string::npos);
  CHECK(base.record.config_fingerprint != without.record.config_fingerprint);
  CHECK(base.record.config_fingerprint != unprimed.record.config_fingerprint);
}

TEST_CASE("context carryover prefixes the previous sentence") {
  const auto tl = fixture({{"COP28", 300}, {"starts", 1500}});
  SessionContext ctx{{"Thank", "you."}, {"Danke."}};
  SessionConfig cfg;
  cfg.min_read_time = Millis{0};
  const Run r = run(tl, {" Die", " COP28", std::nullopt}, cfg, std::nullopt, ctx);
  REQUIRE_FALSE(r.prompts.empty());
  CHECK(r.prompts.front().find("Context: Thank you. COP28\n") != std::string::npos);
  CHECK(r.prompts.front().ends_with("German translation: Danke."));
  CHECK(r.record.hypothesis == "Die COP28");
  CHECK(r.record.source_transcript == "COP28 starts");
}

TEST_CASE("config validation") {
  const auto tl = fixture({{"a", 300}});
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  SessionConfig cfg;
  cfg.chunk_duration = Millis{0};
  CHECK_THROWS_AS(Session("s", tl, asr_backend, llm_backend, cfg), PreconditionError);
  cfg = {};
  cfg.min_read_time = Millis{-1};
  CHECK_THROWS_AS(Session("s", tl, asr_backend, llm_backend, cfg), PreconditionError);
}

TEST_CASE("stepping a finished session is an error") {
  const auto tl = fixture({{"a", 300}});
  asr::FixtureAsrBackend asr_backend;
  llm::ScriptedLlmBackend llm_backend;
  Session session("s", tl, asr_backend, llm_backend, {});
  CHECK_THROWS_AS(session.record("r"), PreconditionError);
  while (!session.finished()) session.step();
  CHECK_THROWS_AS(session.step(), PreconditionError);
}

TEST_CASE("a failing recognizer leaves the session resumable") {
  class Flaky final : public asr::AsrBackend {
   public:
    int calls = 0;
    asr::FixtureAsrBackend inner;
    std::vector<std::string> transcribe(const asr::AudioTimeline& tl, Millis end) override {
      if (++calls == 3) throw TransientError("hiccup");
      return inner.transcribe(tl, end);
    }
  } flaky;
  const auto tl = fixture({{"a", 300}, {"b", 900}, {"c", 1300}});
  llm::ScriptedLlmBackend llm_backend;
  Session session("s", tl, flaky, llm_backend, {});
  std::size_t errors = 0;
  while (!session.finished()) {
    try {
      session.step();
    } catch (const TransientError&) {
      ++errors;
    }
  }
  CHECK(errors == 1);
  CHECK(session.record("").source_transcript == "a b c");
}

TEST_CASE("invariants over random sessions") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 150; ++trial) {
    const auto words = testsupport::random_fixture(rng);
    const auto events = testsupport::random_events(rng);
    SessionConfig cfg;
    cfg.min_read_time = Millis{std::uniform_int_distribution<long long>(0, 2400)(rng)};
    cfg.chunk_duration = Millis{100 * std::uniform_int_distribution<long long>(1, 4)(rng)};
    const auto tl = asr::AudioTimeline::from_fixture(words);
    const Run a = run(tl, events, cfg);
    check_invariants(a, cfg, words.size());
    const Run b = run(tl, events, cfg);
    CHECK(a.record == b.record);
  }
}
