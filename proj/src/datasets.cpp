#include "simtrans/datasets.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::data {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<std::string> optional_string(const json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) {
    throw ValidationError("line " + std::to_string(line_no) + ": \"" + key + "\" must be a string");
  }
  return j[key].get<std::string>();
}

template <typename F>
void for_each_json_line(std::string_view jsonl, const char* what, F&& f) {
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
      throw ValidationError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what());
    }
    f(j, line_no);
  }
}

std::uint32_t le32(std::string_view b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

std::filesystem::path Manifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

const prompt::BackgroundInfo* Manifest::background_for(const ManifestEntry& e) const {
  if (!e.background_id) return nullptr;
  auto it = backgrounds.find(*e.background_id);
  return it == backgrounds.end() ? nullptr : &it->second;
}

Manifest parse_manifest(std::string_view jsonl, const std::filesystem::path& base_dir,
                        const std::filesystem::path& backgrounds_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::vector<std::string> problems;
  for_each_json_line(jsonl, "manifest", [&](const json& j, std::size_t line_no) {
    if (!j.is_object()) throw ValidationError("manifest line " + std::to_string(line_no) + ": not an object");
    ManifestEntry e;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": missing \"id\"");
    }
    e.id = j["id"].get<std::string>();
    e.audio_path = optional_string(j, "audio_path", line_no);
    e.fixture_path = optional_string(j, "fixture_path", line_no);
    e.reference = optional_string(j, "reference", line_no).value_or("");
    e.source_text = optional_string(j, "source_text", line_no);
    e.background_id = optional_string(j, "background_id", line_no);
    e.talk_id = optional_string(j, "talk_id", line_no);
    if (e.audio_path.has_value() == e.fixture_path.has_value()) {
      problems.push_back(e.id + ": exactly one of audio_path/fixture_path must be set");
    }
    m.entries.push_back(std::move(e));
  });

  std::set<std::string> ids;
  std::map<std::string, std::optional<std::string>> talk_background;
  for (const auto& e : m.entries) {
    if (!ids.insert(e.id).second) problems.push_back(e.id + ": duplicate id");
    if (e.talk_id) {
      auto [it, inserted] = talk_background.emplace(*e.talk_id, e.background_id);
      if (!inserted && it->second != e.background_id) {
        problems.push_back(e.id + ": talk " + *e.talk_id + " mixes background documents");
      }
    }
  }

  const std::filesystem::path bg_dir = backgrounds_dir.empty() ? base_dir / "backgrounds" : backgrounds_dir;
  for (const auto& e : m.entries) {
    if (!e.background_id || m.backgrounds.count(*e.background_id)) continue;
    const auto path = bg_dir / (*e.background_id + ".json");
    std::ifstream in(path);
    if (!in) {
      problems.push_back(e.id + ": dangling background_id " + *e.background_id);
      continue;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      m.backgrounds.emplace(*e.background_id, prompt::load_background(buf.str()));
    } catch (const Error& err) {
      problems.push_back(e.id + ": background " + *e.background_id + ": " + err.what());
    }
  }

  if (!problems.empty()) {
    std::string msg = "invalid manifest:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path, const std::filesystem::path& backgrounds_dir) {
  return parse_manifest(read_file(path), path.parent_path(), backgrounds_dir);
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const auto& e : m.entries) {
    ordered_json j;
    j["id"] = e.id;
    if (e.audio_path) j["audio_path"] = *e.audio_path;
    if (e.fixture_path) j["fixture_path"] = *e.fixture_path;
    j["reference"] = e.reference;
    if (e.source_text) j["source_text"] = *e.source_text;
    if (e.background_id) j["background_id"] = *e.background_id;
    if (e.talk_id) j["talk_id"] = *e.talk_id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<asr::TimedWord> parse_timed_transcript(std::string_view jsonl) {
  std::vector<asr::TimedWord> words;
  for_each_json_line(jsonl, "fixture", [&](const json& j, std::size_t line_no) {
    const std::string where = "fixture line " + std::to_string(line_no);
    if (!j.is_object() || !j.contains("word") || !j["word"].is_string()) {
      throw ValidationError(where + ": missing \"word\"");
    }
    if (!j.contains("end_ms") || !j["end_ms"].is_number()) throw ValidationError(where + ": missing \"end_ms\"");
    asr::TimedWord w;
    w.word = j["word"].get<std::string>();
    if (text::split_words(w.word).size() != 1) throw ValidationError(where + ": word must be one token");
    const double end = j["end_ms"].get<double>();
    if (end < 0) throw ValidationError(where + ": negative end_ms");
    w.end = Millis{static_cast<long long>(end)};
    w.surface_override = optional_string(j, "surface_override", line_no);
    if (!words.empty() && w.end < words.back().end) {
      throw ValidationError(where + ": end_ms " + std::to_string(w.end.count()) + " precedes " +
                            std::to_string(words.back().end.count()));
    }
    words.push_back(std::move(w));
  });
  return words;
}

asr::AudioTimeline load_timed_transcript(const std::filesystem::path& path, Millis chunk) {
  return asr::AudioTimeline::from_fixture(parse_timed_transcript(read_file(path)), chunk);
}

asr::PcmAudio parse_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  while (pos + 8 <= b.size()) {
    const std::string_view id = b.substr(pos, 4);
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) {
      // Streaming writers leave the data size at 0 or oversize; take what's there.
      if (id != "data") throw FormatError("truncated chunk");
    }
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk");
      const std::uint16_t format = le16(b, body);
      const std::uint16_t channels = le16(b, body + 2);
      const std::uint32_t rate = le32(b, body + 4);
      const std::uint16_t bits = le16(b, body + 14);
      if (format != 1) throw FormatError("only PCM WAV is supported");
      if (channels != 1) throw FormatError("expected mono audio, got " + std::to_string(channels) + " channels");
      if (rate != static_cast<std::uint32_t>(asr::kSampleRate)) {
        throw FormatError("expected 16000 Hz audio, got " + std::to_string(rate));
      }
      if (bits != 16) throw FormatError("expected 16-bit samples, got " + std::to_string(bits));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      const std::size_t avail = std::min<std::size_t>(size, b.size() - body);
      asr::PcmAudio audio;
      audio.samples.resize(avail / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<std::int16_t>(le16(b, body + 2 * i));
      }
      return audio;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("no data chunk");
}

std::string encode_wav(const asr::PcmAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::string out = "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, asr::kSampleRate);
  put32(out, asr::kSampleRate * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (std::int16_t s : audio.samples) put16(out, static_cast<std::uint16_t>(s));
  return out;
}

asr::AudioTimeline read_audio(const std::filesystem::path& path, Millis chunk) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return asr::AudioTimeline::from_pcm(parse_wav(buf.str()), chunk);
}

const DatasetShape* find_dataset_shape(std::string_view name) {
  for (const auto& s : kKnownDatasets) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::string> check_shape(const Manifest& m, const DatasetShape& shape) {
  if (m.entries.size() != shape.expected_entries) {
    return std::string(shape.name) + " has " + std::to_string(shape.expected_entries) + " sentences, manifest has " +
           std::to_string(m.entries.size());
  }
  if (shape.has_background) {
    for (const auto& e : m.entries) {
      if (!e.background_id) return std::string(shape.name) + " entry " + e.id + " lacks a background_id";
    }
  }
  return std::nullopt;
}

}  // namespace simtrans::data
