#include "simtrans/harness.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "simtrans/datasets.hpp"
#include "simtrans/http_backends.hpp"
#include "simtrans/record_io.hpp"
#include "simtrans/text.hpp"

namespace simtrans::harness {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string env_or(const std::string& value, const char* var) {
  if (!value.empty()) return value;
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

// Ids of complete records already on disk. An unterminated or unparseable
// final line is an interrupted write and is cut off; damage anywhere else is
// an error.
std::vector<policy::TranslationRecord> recover_log(const fs::path& path) {
  std::vector<policy::TranslationRecord> records;
  if (!fs::exists(path)) return records;
  const std::string content = read_text(path);
  std::size_t pos = 0;
  std::size_t good_end = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    ++line_no;
    const bool terminated = nl != std::string::npos;
    const std::string line = content.substr(pos, terminated ? nl - pos : std::string::npos);
    const std::size_t next = terminated ? nl + 1 : content.size();
    const bool last = next >= content.size();
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      pos = next;
      if (terminated) good_end = next;
      continue;
    }
    try {
      if (!terminated) throw ParseError("unterminated line", 0);
      records.push_back(io::record_from_json(line));
      good_end = next;
    } catch (const Error& e) {
      if (!last) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      break;
    }
    pos = next;
  }
  if (good_end < content.size()) fs::resize_file(path, good_end);
  return records;
}

struct Slot {
  enum class State { Pending, Skipped, Done, Failed };
  State state = State::Pending;
  policy::TranslationRecord record;
  std::string error;
  std::vector<std::string> prompt_lines;
};

std::string render_extraction_request(const std::string& text, const prompt::ChatTemplate& tmpl) {
  std::string out = tmpl.begin_marker;
  out += tmpl.header(tmpl.user_role);
  out += '\n';
  out += prompt::build_extraction_prompt(text);
  out += '\n';
  out += tmpl.turn_end;
  out += tmpl.header(tmpl.assistant_role);
  out += '\n';
  return out;
}

}  // namespace

void RunConfig::validate(bool needs_manifest) const {
  if (needs_manifest && manifest.empty()) throw ConfigError("a manifest is required");
  if (llm_endpoint.empty() == llm_script.empty()) {
    throw ConfigError("configure exactly one of an LLM endpoint or an LLM script");
  }
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  if (resume && overwrite) throw ConfigError("--resume and --overwrite are mutually exclusive");
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i] <= sweep[i - 1]) throw ConfigError("sweep values must be strictly increasing");
  }
  try {
    session.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
}

std::size_t RunConfig::effective_jobs() const {
  if (jobs > 0) return jobs;
  if (session.measure_wall_time || live_llm()) return 1;
  return std::max(1u, std::thread::hardware_concurrency());
}

Backends make_backends(const RunConfig& cfg) {
  Backends b;
  if (!cfg.llm_script.empty()) {
    b.llm = std::make_shared<llm::ScriptedLlmBackend>(llm::ScriptedLlmBackend::load(cfg.llm_script.string()));
  } else {
    http::CompletionClientConfig c;
    c.url = cfg.llm_endpoint;
    c.model = cfg.llm_model;
    c.api_key = env_or(cfg.llm_api_key, "SIMTRANS_LLM_API_KEY");
    c.streaming = cfg.llm_streaming;
    b.llm = std::make_shared<http::CompletionClient>(c);
  }
  if (!cfg.asr_endpoint.empty()) {
    http::TranscriptionClientConfig c;
    c.url = cfg.asr_endpoint;
    c.model = cfg.asr_model;
    c.api_key = env_or(cfg.asr_api_key, "SIMTRANS_ASR_API_KEY");
    b.live_asr = std::make_shared<http::TranscriptionClient>(c);
  }
  return b;
}

RunOutcome cmd_run(const RunConfig& cfg_in, const BackendFactory& factory) {
  RunConfig cfg = cfg_in;
  cfg.validate();
  cfg.session.measure_wall_time = cfg.live_llm();

  const data::Manifest manifest = data::load_manifest(cfg.manifest, cfg.backgrounds_dir);
  fs::create_directories(cfg.out_dir);
  const fs::path records_path = cfg.out_dir / "records.jsonl";
  const fs::path failures_path = cfg.out_dir / "failures.jsonl";
  const fs::path prompts_path = cfg.out_dir / "prompts.jsonl";

  std::map<std::string, policy::TranslationRecord> done;
  if (fs::exists(records_path) && fs::file_size(records_path) > 0) {
    if (cfg.resume) {
      for (auto& r : recover_log(records_path)) done.emplace(r.sentence_id, std::move(r));
    } else if (cfg.overwrite) {
      fs::remove(records_path);
      fs::remove(prompts_path);
    } else {
      throw ConfigError(records_path.string() + " already exists; pass --resume or --overwrite");
    }
  }

  Backends backends = factory(cfg);
  const bool needs_live_asr = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                          [](const data::ManifestEntry& e) { return e.audio_path.has_value(); });
  if (needs_live_asr && !backends.live_asr) {
    throw ConfigError("manifest has audio entries but no transcription endpoint is configured");
  }
  try {
    backends.llm->check_ready();
    if (needs_live_asr) backends.live_asr->check_ready();
  } catch (const TransientError& e) {
    throw BackendUnavailable(e.what());
  }

  asr::FixtureAsrBackend fixture_asr;
  const std::size_t n = manifest.entries.size();
  std::vector<Slot> slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (done.count(manifest.entries[i].id)) slots[i].state = Slot::State::Skipped;
  }

  // Sentences of one talk run in order on one worker when carryover is on.
  std::vector<std::vector<std::size_t>> units;
  if (cfg.context_carryover) {
    std::map<std::string, std::size_t> unit_of_talk;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& talk = manifest.entries[i].talk_id;
      if (!talk) {
        units.push_back({i});
        continue;
      }
      auto [it, inserted] = unit_of_talk.emplace(*talk, units.size());
      if (inserted) units.emplace_back();
      units[it->second].push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) units.push_back({i});
  }

  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next_unit{0};

  auto run_entry = [&](std::size_t i, const policy::SessionContext& context) {
    const auto& e = manifest.entries[i];
    Slot slot;
    try {
      const asr::AudioTimeline audio =
          e.fixture_path ? data::load_timed_transcript(manifest.resolve(*e.fixture_path), cfg.session.chunk_duration)
                         : data::read_audio(manifest.resolve(*e.audio_path), cfg.session.chunk_duration);
      asr::AsrBackend& asr_backend = e.fixture_path ? static_cast<asr::AsrBackend&>(fixture_asr) : *backends.live_asr;
      std::optional<prompt::BackgroundInfo> background;
      if (const auto* bg = manifest.background_for(e)) background = *bg;

      policy::PromptHook hook;
      std::size_t step = 0;
      if (cfg.dump_prompts) {
        hook = [&](const policy::PromptEvent& ev) {
          ordered_json j;
          j["id"] = e.id;
          j["step"] = step++;
          j["at_source_ms"] = ev.at_source.count();
          j["prompt"] = ev.prompt;
          slot.prompt_lines.push_back(j.dump());
        };
      }
      policy::Session session(e.id, audio, asr_backend, *backends.llm, cfg.session, background, context);
      if (hook) session.set_prompt_hook(hook);
      while (!session.finished()) session.step();
      slot.record = session.record(e.reference, e.source_text);
      slot.state = Slot::State::Done;
    } catch (const std::exception& ex) {
      slot.state = Slot::State::Failed;
      slot.error = ex.what();
    }
    std::lock_guard lock(mu);
    slots[i] = std::move(slot);
    cv.notify_all();
  };

  auto worker = [&] {
    for (std::size_t u = next_unit++; u < units.size(); u = next_unit++) {
      policy::SessionContext context;
      for (std::size_t i : units[u]) {
        const auto& e = manifest.entries[i];
        bool skipped;
        {
          std::lock_guard lock(mu);
          skipped = slots[i].state == Slot::State::Skipped;
        }
        if (!skipped) {
          run_entry(i, context);
        }
        if (!cfg.context_carryover) continue;
        context = {};
        std::lock_guard lock(mu);
        const policy::TranslationRecord* previous = nullptr;
        if (skipped) {
          previous = &done.at(e.id);
        } else if (slots[i].state == Slot::State::Done) {
          previous = &slots[i].record;
        }
        if (previous) {
          context.source_prefix = text::split_words(previous->source_transcript);
          context.target_prefix = text::split_words(previous->hypothesis);
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  const std::size_t jobs = std::min(cfg.effective_jobs(), std::max<std::size_t>(units.size(), 1));
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);

  RunOutcome outcome;
  {
    std::ofstream records(records_path, std::ios::app);
    std::ofstream failures(failures_path, std::ios::trunc);
    std::ofstream prompts;
    if (cfg.dump_prompts) prompts.open(prompts_path, std::ios::app);
    for (std::size_t i = 0; i < n; ++i) {
      Slot slot;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return slots[i].state != Slot::State::Pending; });
        if (slots[i].state == Slot::State::Skipped) {
          ++outcome.skipped;
          continue;
        }
        slot = std::move(slots[i]);
        // Keep the finished record reachable for carryover readers.
        slots[i].state = slot.state;
        slots[i].record = slot.record;
      }
      if (slot.state == Slot::State::Done) {
        records << io::record_to_json(slot.record) << '\n' << std::flush;
        for (const auto& line : slot.prompt_lines) prompts << line << '\n';
        ++outcome.completed;
      } else {
        ordered_json f;
        f["id"] = manifest.entries[i].id;
        f["error"] = slot.error;
        failures << f.dump() << '\n' << std::flush;
        ++outcome.failed;
      }
    }
  }
  pool.clear();

  const auto all = io::read_records(records_path);
  if (!all.empty()) {
    metrics::AggregateOptions opts;
    opts.computation_aware = cfg.computation_aware;
    outcome.report = metrics::aggregate_report(all, opts);
    write_text(cfg.out_dir / "report.json", io::report_to_json(outcome.report) + "\n");
    write_text(cfg.out_dir / "report.csv",
               io::csv_header("config") + io::csv_row(outcome.report.config_fingerprint, outcome.report));
  }
  outcome.exit_code = outcome.failed > 0 ? kExitPartial : kExitOk;
  return outcome;
}

std::vector<CurvePoint> cmd_curve(const RunConfig& cfg, const BackendFactory& factory) {
  if (cfg.sweep.empty()) throw ConfigError("curve needs at least one sweep value");
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  std::vector<CurvePoint> points;
  std::string csv = io::csv_header("min_read_time_ms");
  for (Millis v : cfg.sweep) {
    CurvePoint point;
    point.min_read_time = v;
    RunConfig point_cfg = cfg;
    point_cfg.session.min_read_time = v;
    point_cfg.out_dir = cfg.out_dir / ("min_read_" + std::to_string(v.count()) + "ms");
    try {
      RunOutcome out = cmd_run(point_cfg, factory);
      if (out.completed + out.skipped > 0) point.report = std::move(out.report);
      if (out.failed > 0) point.error = std::to_string(out.failed) + " sessions failed";
    } catch (const std::exception& e) {
      point.error = e.what();
    }
    if (point.report) {
      csv += io::csv_row(std::to_string(v.count()), *point.report);
    } else {
      csv += std::to_string(v.count()) + ",,,,,\n";
    }
    points.push_back(std::move(point));
  }
  write_text(cfg.out_dir / "curve.csv", csv);
  return points;
}

std::vector<ExtractionInput> load_extraction_inputs(const std::vector<fs::path>& paths) {
  std::vector<ExtractionInput> inputs;
  for (const auto& p : paths) {
    const std::string content = read_text(p);
    if (p.extension() == ".jsonl") {
      std::istringstream in(content);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (text::normalize_whitespace(line).empty()) continue;
        try {
          const json j = json::parse(line);
          inputs.push_back({j.at("talk_id").get<std::string>(), j.at("text").get<std::string>()});
        } catch (const json::exception& e) {
          throw ConfigError(p.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
      }
    } else {
      inputs.push_back({p.stem().string(), content});
    }
  }
  std::set<std::string> ids;
  for (const auto& in : inputs) {
    if (!ids.insert(in.talk_id).second) throw ConfigError("duplicate talk id " + in.talk_id);
  }
  return inputs;
}

std::vector<ExtractionResult> cmd_extract_background(const std::vector<ExtractionInput>& inputs,
                                                     llm::LlmBackend& backend, const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("an output directory is required");
  fs::create_directories(cfg.out_dir);
  std::ofstream failures(cfg.out_dir / "failures.jsonl", std::ios::trunc);
  std::vector<ExtractionResult> results;
  for (const auto& input : inputs) {
    ExtractionResult result;
    result.talk_id = input.talk_id;
    const std::string request = render_extraction_request(input.text, cfg.session.chat_template);
    llm::GenerationLimits limits = cfg.session.limits;
    limits.final_tokens = std::max<std::size_t>(limits.final_tokens, 1024);
    llm::WordGenerator generator(backend, limits, input.talk_id);
    for (std::size_t attempt = 0; attempt <= cfg.extract_retries; ++attempt) {
      ++result.attempts;
      try {
        const llm::Suffix response = generator.generate_text(request);
        const prompt::BackgroundInfo info = prompt::parse_extraction_response(response.text);
        const fs::path out = cfg.out_dir / (input.talk_id + ".json");
        write_text(out, json::parse(prompt::serialize_background(info)).dump(2) + "\n");
        result.written = out;
        result.error.clear();
        break;
      } catch (const ExtractionError& e) {
        result.error = e.what();
      } catch (const TransientError& e) {
        result.error = e.what();
      }
    }
    if (!result.written) {
      ordered_json f;
      f["talk_id"] = result.talk_id;
      f["attempts"] = result.attempts;
      f["error"] = result.error;
      failures << f.dump() << '\n';
    }
    results.push_back(std::move(result));
  }
  return results;
}

metrics::MetricReport cmd_score(const fs::path& records_path, const std::optional<fs::path>& manifest_path,
                                bool computation_aware) {
  auto records = io::read_records(records_path);
  if (manifest_path) {
    const data::Manifest m = data::load_manifest(*manifest_path);
    std::map<std::string, const data::ManifestEntry*> by_id;
    for (const auto& e : m.entries) by_id[e.id] = &e;
    for (auto& r : records) {
      auto it = by_id.find(r.sentence_id);
      if (it == by_id.end()) throw ValidationError("record " + r.sentence_id + " is not in the manifest");
      r.reference = it->second->reference;
      if (it->second->source_text) r.source_text = it->second->source_text;
    }
  }
  metrics::AggregateOptions opts;
  opts.computation_aware = computation_aware;
  return metrics::aggregate_report(records, opts);
}

}  // namespace simtrans::harness
