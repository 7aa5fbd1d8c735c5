#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "simtrans/policy_engine.hpp"

namespace simtrans::metrics {

/// Emission delays of one hypothesis, in milliseconds of source audio.
struct DelaySequence {
  std::vector<double> delays;
  double source_duration = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

/// Average lagging. tau is the first index whose delay reaches the source
/// duration (or the hypothesis length when none does); each delay is offset
/// by the ideal uniformly paced emission time (i-1)*T/|Y|.
double average_lagging(const DelaySequence& d);

/// AL with the pacing denominator max(|Y|, |Y*|).
double length_aware_average_lagging(const DelaySequence& d);

/// Sufficient statistics for corpus BLEU.
struct BleuStats {
  std::array<long long, 4> correct{};
  std::array<long long, 4> total{};
  long long sys_len = 0;
  long long ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

/// Name recorded alongside every BLEU score.
inline constexpr const char* kBleuSignature = "bleu:nrefs=1|case=mixed|tok=intl|smooth=exp";

BleuStats sentence_bleu_stats(const std::string& hypothesis, const std::string& reference);
double bleu_from_stats(const BleuStats& stats);

/// 4-gram corpus BLEU with exponential smoothing, case-sensitive, intl
/// tokenization. Counts are pooled over the corpus before scoring.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references);

std::size_t word_edit_distance(const std::vector<std::string>& hyp,
                               const std::vector<std::string>& ref);

/// Word-level Levenshtein distance over reference length.
double word_error_rate(const std::string& hypothesis, const std::string& reference);

double real_time_factor(double wall_time_ms, double audio_duration_ms);

/// Total wall time over total audio, not the mean of per-clip ratios.
double corpus_real_time_factor(const std::vector<double>& wall_times_ms,
                               const std::vector<double>& audio_durations_ms);

struct SentenceMetrics {
  std::string sentence_id;
  std::optional<double> al_ms;
  std::optional<double> laal_ms;
  std::optional<double> wer;
  std::optional<double> rtf;
  bool excluded = false;
  std::string note;
};

struct MetricReport {
  double bleu = 0.0;
  std::optional<double> al_ms;
  std::optional<double> laal_ms;
  std::optional<double> wer;
  std::optional<double> rtf;
  std::size_t n_records = 0;
  std::size_t n_excluded = 0;
  std::string bleu_signature = kBleuSignature;
  std::string config_fingerprint;
  std::vector<SentenceMetrics> per_sentence;
};

struct AggregateOptions {
  /// Use wall-clock inclusive delays when a record carries them.
  bool computation_aware = false;
};

/// Corpus BLEU over all pairs, mean AL/LAAL over records with defined
/// latency, corpus WER of the recognized source against source_text where
/// available, corpus RTF when every record carries a wall time.
MetricReport aggregate_report(const std::vector<policy::TranslationRecord>& records,
                              const AggregateOptions& options = {});

}  // namespace simtrans::metrics
