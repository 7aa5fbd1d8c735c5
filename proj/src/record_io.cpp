#include "simtrans/record_io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "simtrans/error.hpp"

namespace simtrans::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> read_optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

std::string format_number(const std::optional<double>& v) {
  if (!v) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

std::string record_to_json(const policy::TranslationRecord& r) {
  ordered_json j;
  j["sentence_id"] = r.sentence_id;
  j["hypothesis"] = r.hypothesis;
  j["reference"] = r.reference;
  auto delays = ordered_json::array();
  for (Millis d : r.delays) delays.push_back(d.count());
  j["delays"] = std::move(delays);
  auto trace = ordered_json::array();
  for (const auto& a : r.trace) {
    ordered_json aj;
    aj["kind"] = a.kind == policy::ActionKind::Write ? "WRITE" : "READ";
    if (a.kind == policy::ActionKind::Write) aj["word"] = a.word;
    aj["at_source_ms"] = a.at_source.count();
    trace.push_back(std::move(aj));
  }
  j["trace"] = std::move(trace);
  j["wall_time_ms"] = r.wall_time ? ordered_json(r.wall_time->count()) : ordered_json(nullptr);
  j["source_duration_ms"] = r.source_duration.count();
  j["config_fingerprint"] = r.config_fingerprint;
  j["source_transcript"] = r.source_transcript;
  j["source_text"] = r.source_text ? ordered_json(*r.source_text) : ordered_json(nullptr);
  if (r.compute_aware_delays) {
    auto ca = ordered_json::array();
    for (Millis d : *r.compute_aware_delays) ca.push_back(d.count());
    j["compute_aware_delays"] = std::move(ca);
  }
  j["warnings"] = r.warnings;
  return j.dump();
}

policy::TranslationRecord record_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  try {
    policy::TranslationRecord r;
    r.sentence_id = j.at("sentence_id").get<std::string>();
    r.hypothesis = j.at("hypothesis").get<std::string>();
    r.reference = j.at("reference").get<std::string>();
    for (const auto& d : j.at("delays")) r.delays.emplace_back(d.get<long long>());
    for (const auto& aj : j.at("trace")) {
      const auto kind = aj.at("kind").get<std::string>();
      const Millis at{aj.at("at_source_ms").get<long long>()};
      if (kind == "WRITE") {
        r.trace.push_back(policy::Action::write(aj.at("word").get<std::string>(), at));
      } else if (kind == "READ") {
        r.trace.push_back(policy::Action::read(at));
      } else {
        throw SchemaError("unknown action kind " + kind);
      }
    }
    if (j.contains("wall_time_ms") && !j["wall_time_ms"].is_null()) {
      r.wall_time = Millis{j["wall_time_ms"].get<long long>()};
    }
    r.source_duration = Millis{j.at("source_duration_ms").get<long long>()};
    r.config_fingerprint = j.value("config_fingerprint", std::string{});
    r.source_transcript = j.value("source_transcript", std::string{});
    if (j.contains("source_text") && !j["source_text"].is_null()) {
      r.source_text = j["source_text"].get<std::string>();
    }
    if (j.contains("compute_aware_delays")) {
      std::vector<Millis> ca;
      for (const auto& d : j["compute_aware_delays"]) ca.emplace_back(d.get<long long>());
      r.compute_aware_delays = std::move(ca);
    }
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad record: ") + e.what());
  }
}

std::vector<policy::TranslationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open record log " + path.string());
  std::vector<policy::TranslationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string report_to_json(const metrics::MetricReport& report) {
  ordered_json j;
  j["bleu"] = report.bleu;
  j["al_ms"] = optional_number(report.al_ms);
  j["laal_ms"] = optional_number(report.laal_ms);
  j["wer"] = optional_number(report.wer);
  j["rtf"] = optional_number(report.rtf);
  j["n_records"] = report.n_records;
  j["n_excluded"] = report.n_excluded;
  j["bleu_signature"] = report.bleu_signature;
  j["config_fingerprint"] = report.config_fingerprint;
  auto per = ordered_json::array();
  for (const auto& s : report.per_sentence) {
    ordered_json sj;
    sj["sentence_id"] = s.sentence_id;
    sj["al_ms"] = optional_number(s.al_ms);
    sj["laal_ms"] = optional_number(s.laal_ms);
    sj["wer"] = optional_number(s.wer);
    sj["rtf"] = optional_number(s.rtf);
    sj["excluded"] = s.excluded;
    if (!s.note.empty()) sj["note"] = s.note;
    per.push_back(std::move(sj));
  }
  j["per_sentence"] = std::move(per);
  return j.dump(2);
}

metrics::MetricReport report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  metrics::MetricReport r;
  r.bleu = j.at("bleu").get<double>();
  r.al_ms = read_optional_number(j, "al_ms");
  r.laal_ms = read_optional_number(j, "laal_ms");
  r.wer = read_optional_number(j, "wer");
  r.rtf = read_optional_number(j, "rtf");
  r.n_records = j.at("n_records").get<std::size_t>();
  r.n_excluded = j.at("n_excluded").get<std::size_t>();
  r.bleu_signature = j.value("bleu_signature", std::string{});
  r.config_fingerprint = j.value("config_fingerprint", std::string{});
  for (const auto& sj : j.at("per_sentence")) {
    metrics::SentenceMetrics s;
    s.sentence_id = sj.at("sentence_id").get<std::string>();
    s.al_ms = read_optional_number(sj, "al_ms");
    s.laal_ms = read_optional_number(sj, "laal_ms");
    s.wer = read_optional_number(sj, "wer");
    s.rtf = read_optional_number(sj, "rtf");
    s.excluded = sj.value("excluded", false);
    s.note = sj.value("note", std::string{});
    r.per_sentence.push_back(std::move(s));
  }
  return r;
}

std::string csv_header(std::string_view label_column) {
  return std::string(label_column) + ",bleu,al_ms,laal_ms,wer,rtf\n";
}

std::string csv_row(std::string_view label, const metrics::MetricReport& report) {
  std::string row(label);
  row += ',' + format_number(report.bleu);
  row += ',' + format_number(report.al_ms);
  row += ',' + format_number(report.laal_ms);
  row += ',' + format_number(report.wer);
  row += ',' + format_number(report.rtf);
  row += '\n';
  return row;
}

}  // namespace simtrans::io
