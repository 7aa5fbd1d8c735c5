#include "doctest.h"

#include "simtrans/error.hpp"
#include "simtrans/record_io.hpp"
#include "support.hpp"

using namespace simtrans;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

policy::TranslationRecord sample() {
  policy::TranslationRecord r;
  r.sentence_id = "s-1";
  r.hypothesis = "Vorzeitige Wahlen „sind“ wahrscheinlich";
  r.reference = "Vorzeitige Wahlen sind wahrscheinlich.";
  r.delays = {Millis{1400}, Millis{1400}, Millis{1600}, Millis{2000}};
  r.trace = {policy::Action::read(Millis{800}), policy::Action::write("Vorzeitige", Millis{1400}),
             policy::Action::write("Wahlen", Millis{1400}), policy::Action::read(Millis{1600}),
             policy::Action::write("„sind“", Millis{1600})};
  r.source_duration = Millis{2000};
  r.config_fingerprint = "abc123";
  r.source_transcript = "Early elections are likely";
  r.source_text = "Early elections are likely.";
  r.warnings = {"final_truncated"};
  return r;
}

}  // namespace

TEST_CASE("records round trip") {
  const auto r = sample();
  const std::string line = io::record_to_json(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(io::record_from_json(line) == r);

  auto timed = r;
  timed.wall_time = Millis{1234};
  timed.compute_aware_delays = std::vector<Millis>{Millis{1500}, Millis{1500}, Millis{1800}, Millis{2300}};
  timed.source_text.reset();
  CHECK(io::record_from_json(io::record_to_json(timed)) == timed);
}

TEST_CASE("scripted records carry a null wall time") {
  const std::string line = io::record_to_json(sample());
  CHECK(line.find("\"wall_time_ms\":null") != std::string::npos);
}

TEST_CASE("bad records") {
  CHECK_THROWS_AS(io::record_from_json("{\"sentence_id\":"), ParseError);
  CHECK_THROWS_AS(io::record_from_json(R"({"sentence_id":"a"})"), SchemaError);
  CHECK_THROWS_AS(io::record_from_json(R"({"sentence_id":"a","hypothesis":"","reference":"","delays":[],
      "trace":[{"kind":"SKIP","at_source_ms":0}],"source_duration_ms":0})"),
                  SchemaError);
}

TEST_CASE("a damaged log names the line") {
  TempDir dir;
  write_file(dir / "r.jsonl", io::record_to_json(sample()) + "\n\n{\"sentence_id\": \n");
  try {
    io::read_records(dir / "r.jsonl");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("report round trip and csv") {
  metrics::MetricReport rep = metrics::aggregate_report({sample()});
  rep.rtf = 0.86;
  const metrics::MetricReport back = io::report_from_json(io::report_to_json(rep));
  CHECK(back.bleu == rep.bleu);
  CHECK(back.al_ms == rep.al_ms);
  CHECK(back.laal_ms == rep.laal_ms);
  CHECK(back.wer == rep.wer);
  CHECK(back.rtf == rep.rtf);
  CHECK(back.n_records == 1);
  CHECK(back.per_sentence.size() == 1);
  CHECK(back.bleu_signature == rep.bleu_signature);

  CHECK(io::csv_header("config") == "config,bleu,al_ms,laal_ms,wer,rtf\n");
  metrics::MetricReport plain;
  plain.bleu = 12.5;
  plain.al_ms = 1000;
  CHECK(io::csv_row("x", plain) == "x,12.500000,1000.000000,,,\n");
}
