#include "doctest.h"

#include "simtrans/datasets.hpp"
#include "simtrans/error.hpp"
#include "support.hpp"

using namespace simtrans;
using namespace simtrans::data;
using testsupport::TempDir;
using testsupport::write_file;
namespace fs = std::filesystem;

namespace {

void put(std::string& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string wav(std::uint16_t channels, std::uint32_t rate, std::uint16_t bits, std::uint32_t data_bytes,
                std::uint16_t format = 1) {
  std::string out = "RIFF";
  put(out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  put(out, 16, 4);
  put(out, format, 2);
  put(out, channels, 2);
  put(out, rate, 4);
  put(out, rate * channels * bits / 8, 4);
  put(out, channels * bits / 8, 2);
  put(out, bits, 2);
  out += "data";
  put(out, data_bytes, 4);
  out.append(data_bytes, '\0');
  return out;
}

}  // namespace

TEST_CASE("demo manifest") {
  const Manifest m = load_manifest(testsupport::data_path("demo/manifest.jsonl"));
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].id == "climate-001");
  CHECK(m.entries[2].background_id == std::nullopt);
  REQUIRE(m.background_for(m.entries[0]));
  CHECK(m.background_for(m.entries[0])->named_entities.size() == 2);
  CHECK(m.background_for(m.entries[2]) == nullptr);
  CHECK(m.resolve(*m.entries[0].fixture_path) == testsupport::data_path("demo/fixtures/climate-001.jsonl"));
}

TEST_CASE("manifest validation") {
  TempDir dir;
  SUBCASE("both audio and fixture") {
    CHECK_THROWS_AS(parse_manifest(R"({"id":"a","audio_path":"a.wav","fixture_path":"a.jsonl","reference":"r"})",
                                   dir.path()),
                    ValidationError);
  }
  SUBCASE("neither") { CHECK_THROWS_AS(parse_manifest(R"({"id":"a","reference":"r"})", dir.path()), ValidationError); }
  SUBCASE("duplicate ids") {
    CHECK_THROWS_AS(parse_manifest("{\"id\":\"a\",\"fixture_path\":\"x\"}\n{\"id\":\"a\",\"fixture_path\":\"y\"}",
                                   dir.path()),
                    ValidationError);
  }
  SUBCASE("dangling backgrounds are all listed") {
    try {
      parse_manifest(
          "{\"id\":\"a\",\"fixture_path\":\"x\",\"background_id\":\"nope\"}\n"
          "{\"id\":\"b\",\"fixture_path\":\"x\",\"background_id\":\"gone\"}",
          dir.path());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("nope") != std::string::npos);
      CHECK(msg.find("gone") != std::string::npos);
    }
  }
  SUBCASE("a talk uses one background") {
    fs::create_directories(dir / "backgrounds");
    write_file(dir / "backgrounds/x.json", R"({"topic":"X"})");
    write_file(dir / "backgrounds/y.json", R"({"topic":"Y"})");
    CHECK_THROWS_AS(parse_manifest("{\"id\":\"a\",\"fixture_path\":\"f\",\"talk_id\":\"t\",\"background_id\":\"x\"}\n"
                                   "{\"id\":\"b\",\"fixture_path\":\"f\",\"talk_id\":\"t\",\"background_id\":\"y\"}",
                                   dir.path()),
                    ValidationError);
  }
  SUBCASE("backgrounds directory override") {
    fs::create_directories(dir / "elsewhere");
    write_file(dir / "elsewhere/x.json", R"({"topic":"X"})");
    const Manifest m =
        parse_manifest(R"({"id":"a","fixture_path":"f","background_id":"x"})", dir.path(), dir / "elsewhere");
    CHECK(m.backgrounds.at("x").topic == "X");
  }
  SUBCASE("malformed line") { CHECK_THROWS_AS(parse_manifest("{\"id\":", dir.path()), ValidationError); }
}

TEST_CASE("manifest round trip") {
  const Manifest m = load_manifest(testsupport::data_path("demo/manifest.jsonl"));
  const std::string once = serialize_manifest(m);
  const Manifest again = parse_manifest(once, m.base_dir);
  CHECK(again.entries == m.entries);
  CHECK(serialize_manifest(again) == once);
}

TEST_CASE("dataset shapes") {
  const DatasetShape* ted = find_dataset_shape("TED-TST-2024");
  REQUIRE(ted);
  CHECK(ted->expected_entries == 478);
  CHECK(find_dataset_shape("TED-TST-2023")->expected_entries == 102);
  CHECK(find_dataset_shape("FLEURS")->expected_entries == 642);
  CHECK(find_dataset_shape("AmbiEval")->expected_entries == 96);
  CHECK(find_dataset_shape("WMT") == nullptr);

  Manifest m;
  for (int i = 0; i < 478; ++i) {
    ManifestEntry e;
    e.id = "s" + std::to_string(i);
    e.fixture_path = "f";
    e.background_id = "talk";
    m.entries.push_back(e);
  }
  CHECK_FALSE(check_shape(m, *ted));
  m.entries.pop_back();
  CHECK(check_shape(m, *ted));
}

TEST_CASE("timed transcripts") {
  const auto tl = load_timed_transcript(testsupport::data_path("demo/fixtures/climate-001.jsonl"));
  CHECK(tl.total_duration == Millis{2700});
  CHECK(tl.is_fixture());
  CHECK(parse_timed_transcript("{\"word\":\"a\",\"end_ms\":300}\n{\"word\":\"b\",\"end_ms\":700}\n"
                               "{\"word\":\"c\",\"end_ms\":1100}")
            .back()
            .end == Millis{1100});
  CHECK(asr::AudioTimeline::from_fixture(parse_timed_transcript("")).total_duration == Millis{0});
  CHECK_THROWS_AS(parse_timed_transcript("{\"word\":\"a\",\"end_ms\":500}\n{\"word\":\"b\",\"end_ms\":400}"),
                  ValidationError);
  CHECK_THROWS_AS(parse_timed_transcript("{\"word\":\"a b\",\"end_ms\":500}"), ValidationError);
  CHECK_THROWS_AS(parse_timed_transcript("{\"end_ms\":500}"), ValidationError);
  const auto words = parse_timed_transcript(R"({"word":"COP28","end_ms":600,"surface_override":"Cop 28"})");
  CHECK(words[0].surface_override == std::optional<std::string>("Cop 28"));
}

TEST_CASE("fixture words recognized after finalize equal the fixture") {
  const auto tl = load_timed_transcript(testsupport::data_path("golden_trace/fixture.jsonl"));
  asr::FixtureAsrBackend backend;
  asr::AsrStream stream(tl, backend);
  std::size_t n = 0;
  while (stream.next_word()) ++n;
  CHECK(n == 10);
}

TEST_CASE("wav files") {
  TempDir dir;
  SUBCASE("duration from sample count") {
    write_file(dir / "a.wav", wav(1, 16000, 16, 160000 * 2));
    const auto tl = read_audio(dir / "a.wav");
    CHECK(tl.total_duration == Millis{10000});
    CHECK_FALSE(tl.is_fixture());
  }
  SUBCASE("zero length") {
    write_file(dir / "z.wav", wav(1, 16000, 16, 0));
    CHECK(read_audio(dir / "z.wav").total_duration == Millis{0});
  }
  SUBCASE("stereo") {
    write_file(dir / "s.wav", wav(2, 16000, 16, 64));
    CHECK_THROWS_AS(read_audio(dir / "s.wav"), FormatError);
  }
  SUBCASE("wrong rate, width or encoding") {
    CHECK_THROWS_AS(parse_wav(wav(1, 44100, 16, 64)), FormatError);
    CHECK_THROWS_AS(parse_wav(wav(1, 16000, 8, 64)), FormatError);
    CHECK_THROWS_AS(parse_wav(wav(1, 16000, 16, 64, 3)), FormatError);
    CHECK_THROWS_AS(parse_wav("not a wav"), FormatError);
  }
  SUBCASE("encode and parse agree") {
    asr::PcmAudio pcm;
    pcm.samples = {0, 1, -1, 32767, -32768};
    CHECK(parse_wav(encode_wav(pcm)).samples == pcm.samples);
  }
}
