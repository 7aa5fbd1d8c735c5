// Command-line front end: run, curve, extract-background, score.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "simtrans/datasets.hpp"
#include "simtrans/harness.hpp"
#include "simtrans/record_io.hpp"

namespace {

using namespace simtrans;
using harness::RunConfig;

struct Knobs {
  long long min_read_ms = 1200;
  long long chunk_ms = 200;
  std::vector<long long> sweep_ms;
  bool no_priming = false;
  bool no_background = false;
};

void add_backend_flags(CLI::App* cmd, RunConfig& cfg) {
  auto* script = cmd->add_option("--llm-script", cfg.llm_script, "Scripted completion backend (JSONL)");
  auto* endpoint = cmd->add_option("--llm-endpoint", cfg.llm_endpoint, "Completion server base URL");
  script->excludes(endpoint);
  cmd->add_option("--llm-model", cfg.llm_model, "Model name sent to the completion server");
  cmd->add_flag("!--no-stream", cfg.llm_streaming, "Request whole completions instead of SSE streams");
  cmd->add_option("--max-word-tokens", cfg.session.limits.word_tokens, "Token budget per generated word")
      ->capture_default_str();
  cmd->add_option("--max-final-tokens", cfg.session.limits.final_tokens, "Token budget for the final suffix")
      ->capture_default_str();
}

void add_session_flags(CLI::App* cmd, RunConfig& cfg, Knobs& knobs) {
  cmd->add_option("-m,--manifest", cfg.manifest, "Dataset manifest (JSONL)")->required();
  cmd->add_option("--backgrounds", cfg.backgrounds_dir, "Directory of background documents");
  cmd->add_option("-o,--out", cfg.out_dir, "Output directory")->required();
  cmd->add_option("--asr-endpoint", cfg.asr_endpoint, "Transcription server base URL (audio entries)");
  cmd->add_option("--asr-model", cfg.asr_model, "Transcription model name")->capture_default_str();
  add_backend_flags(cmd, cfg);
  cmd->add_option("--min-read-time", knobs.min_read_ms, "Source audio (ms) required before the first WRITE")
      ->capture_default_str();
  cmd->add_option("--chunk-ms", knobs.chunk_ms, "Audio added per recognizer call (ms)")->capture_default_str();
  cmd->add_option("--src-lang", cfg.session.src_lang, "Source language name")->capture_default_str();
  cmd->add_option("--tgt-lang", cfg.session.tgt_lang, "Target language name")->capture_default_str();
  cmd->add_flag("--no-priming", knobs.no_priming, "Put the partial target in the user turn");
  cmd->add_flag("--no-background", knobs.no_background, "Leave background documents out of the prompt");
  cmd->add_flag("--context-carryover", cfg.context_carryover, "Show the previous sentence of the same talk");
  cmd->add_flag("--computation-aware", cfg.computation_aware, "Score latency with processing time included");
  cmd->add_option("-j,--jobs", cfg.jobs, "Concurrent sessions (0 = auto)");
  cmd->add_flag("--resume", cfg.resume, "Skip sentences already in the record log");
  cmd->add_flag("--overwrite", cfg.overwrite, "Replace an existing record log");
  cmd->add_flag("--dump-prompts", cfg.dump_prompts, "Write every rendered prompt to prompts.jsonl");
}

void apply_knobs(RunConfig& cfg, const Knobs& knobs) {
  cfg.session.min_read_time = Millis{knobs.min_read_ms};
  cfg.session.chunk_duration = Millis{knobs.chunk_ms};
  cfg.session.priming_enabled = !knobs.no_priming;
  cfg.session.background_enabled = !knobs.no_background;
  cfg.sweep.clear();
  for (long long v : knobs.sweep_ms) cfg.sweep.emplace_back(v);
}

void print_report(const metrics::MetricReport& r) {
  std::cout << io::csv_header("config") << io::csv_row(r.config_fingerprint, r);
  if (r.n_excluded > 0) std::cout << r.n_excluded << " of " << r.n_records << " records excluded from latency\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous speech translation harness"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  Knobs run_knobs;
  auto* run = app.add_subcommand("run", "Translate every manifest entry and score the result");
  add_session_flags(run, run_cfg, run_knobs);

  RunConfig curve_cfg;
  Knobs curve_knobs;
  auto* curve = app.add_subcommand("curve", "Sweep the min-read time and tabulate quality against latency");
  add_session_flags(curve, curve_cfg, curve_knobs);
  curve->add_option("--sweep", curve_knobs.sweep_ms, "Min-read times in ms, strictly increasing")
      ->required()
      ->delimiter(',');

  RunConfig extract_cfg;
  std::vector<std::string> extract_inputs;
  auto* extract = app.add_subcommand("extract-background", "Build background documents with a completion model");
  extract->add_option("inputs", extract_inputs, "Talk text files, or JSONL of {talk_id, text}")->required();
  extract->add_option("-o,--out", extract_cfg.out_dir, "Output directory")->required();
  extract->add_option("--retries", extract_cfg.extract_retries, "Retries per talk")->capture_default_str();
  add_backend_flags(extract, extract_cfg);

  std::string score_records;
  std::string score_manifest;
  std::string score_out;
  bool score_ca = false;
  auto* score = app.add_subcommand("score", "Recompute metrics from a record log");
  score->add_option("records", score_records, "records.jsonl")->required();
  score->add_option("-m,--manifest", score_manifest, "Take references from this manifest");
  score->add_option("-o,--out", score_out, "Write the report JSON here");
  score->add_flag("--computation-aware", score_ca, "Use processing-inclusive delays where recorded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : harness::kExitConfig;
  }

  try {
    if (*run) {
      apply_knobs(run_cfg, run_knobs);
      const auto out = harness::cmd_run(run_cfg);
      if (out.completed + out.skipped > 0) print_report(out.report);
      std::cerr << out.completed << " completed, " << out.skipped << " resumed, " << out.failed << " failed\n";
      return out.exit_code;
    }
    if (*curve) {
      apply_knobs(curve_cfg, curve_knobs);
      const auto points = harness::cmd_curve(curve_cfg);
      std::ifstream csv(curve_cfg.out_dir / "curve.csv");
      std::cout << csv.rdbuf();
      bool partial = false;
      for (const auto& p : points) {
        if (!p.error.empty()) {
          partial = true;
          std::cerr << "min_read_time " << p.min_read_time.count() << " ms: " << p.error << "\n";
        }
      }
      return partial ? harness::kExitPartial : harness::kExitOk;
    }
    if (*extract) {
      extract_cfg.validate(false);
      std::vector<std::filesystem::path> paths(extract_inputs.begin(), extract_inputs.end());
      const auto inputs = harness::load_extraction_inputs(paths);
      auto backends = harness::make_backends(extract_cfg);
      try {
        backends.llm->check_ready();
      } catch (const TransientError& e) {
        throw harness::BackendUnavailable(e.what());
      }
      const auto results = harness::cmd_extract_background(inputs, *backends.llm, extract_cfg);
      std::size_t failed = 0;
      for (const auto& r : results) {
        if (r.written) {
          std::cout << r.talk_id << "\t" << r.written->string() << "\n";
        } else {
          ++failed;
          std::cerr << r.talk_id << ": failed after " << r.attempts << " attempts: " << r.error << "\n";
        }
      }
      return failed > 0 ? harness::kExitPartial : harness::kExitOk;
    }
    if (*score) {
      std::optional<std::filesystem::path> manifest;
      if (!score_manifest.empty()) manifest = score_manifest;
      const auto report = harness::cmd_score(score_records, manifest, score_ca);
      if (!score_out.empty()) {
        std::ofstream(score_out) << io::report_to_json(report) << "\n";
      }
      print_report(report);
      return harness::kExitOk;
    }
  } catch (const harness::BackendUnavailable& e) {
    std::cerr << "backend unavailable: " << e.what() << "\n";
    return harness::kExitBackend;
  } catch (const TransientError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return harness::kExitBackend;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::kExitConfig;
  }
  return harness::kExitOk;
}
