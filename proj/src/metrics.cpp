#include "simtrans/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "simtrans/error.hpp"
#include "simtrans/text.hpp"

namespace simtrans::metrics {

namespace {

constexpr int kMaxOrder = 4;

double lagging(const DelaySequence& d, double pacing_len) {
  if (d.delays.empty() || d.hyp_len == 0) throw UndefinedMetricError("lagging of an empty hypothesis");
  if (d.delays.size() != d.hyp_len) throw InputError("delay count differs from hypothesis length");
  if (d.source_duration <= 0.0) throw UndefinedMetricError("lagging needs a positive source duration");
  const double rate = d.source_duration / pacing_len;
  double sum = 0.0;
  std::size_t tau = 0;
  for (std::size_t i = 0; i < d.delays.size(); ++i) {
    sum += d.delays[i] - static_cast<double>(i) * rate;
    tau = i + 1;
    if (d.delays[i] >= d.source_duration) break;
  }
  return sum / static_cast<double>(tau);
}

// Python's str.rstrip() with no arguments.
std::string rstrip(const std::string& s) {
  std::u32string cps = text::decode_utf8(s);
  while (!cps.empty() && text::is_space(cps.back())) cps.pop_back();
  return text::encode_utf8(cps);
}

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens) {
  NgramCounts counts;
  for (int n = 1; n <= kMaxOrder; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
    }
  }
  return counts;
}

}  // namespace

double average_lagging(const DelaySequence& d) {
  return lagging(d, static_cast<double>(d.hyp_len));
}

double length_aware_average_lagging(const DelaySequence& d) {
  if (d.ref_len == 0) throw UndefinedMetricError("LAAL needs a non-empty reference");
  return lagging(d, static_cast<double>(std::max(d.hyp_len, d.ref_len)));
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kMaxOrder; ++n) {
    correct[n] += other.correct[n];
    total[n] += other.total[n];
  }
  sys_len += other.sys_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats sentence_bleu_stats(const std::string& hypothesis, const std::string& reference) {
  const auto hyp = text::split_words(text::tokenize_intl(rstrip(hypothesis)));
  const auto ref = text::split_words(text::tokenize_intl(rstrip(reference)));
  BleuStats st;
  st.sys_len = static_cast<long long>(hyp.size());
  st.ref_len = static_cast<long long>(ref.size());
  const NgramCounts ref_counts = count_ngrams(ref);
  for (const auto& [gram, count] : count_ngrams(hyp)) {
    const int n = static_cast<int>(gram.size()) - 1;
    st.total[n] += count;
    auto it = ref_counts.find(gram);
    if (it != ref_counts.end()) st.correct[n] += std::min(count, it->second);
  }
  return st;
}

double bleu_from_stats(const BleuStats& st) {
  double bp = 1.0;
  if (st.sys_len < st.ref_len) {
    bp = st.sys_len > 0 ? std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.sys_len))
                        : 0.0;
  }
  if (std::all_of(st.correct.begin(), st.correct.end(), [](long long c) { return c == 0; })) return 0.0;

  bool perfect = true;
  std::array<double, kMaxOrder> precisions{};
  double smooth = 1.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (st.total[n] == 0) {
      // Remaining orders keep precision 0, which floors the score to 0.
      perfect = false;
      break;
    }
    if (st.correct[n] == 0) {
      smooth *= 2.0;
      precisions[n] = 100.0 / (smooth * static_cast<double>(st.total[n]));
    } else {
      precisions[n] = 100.0 * static_cast<double>(st.correct[n]) / static_cast<double>(st.total[n]);
    }
    if (st.correct[n] != st.total[n]) perfect = false;
  }
  if (perfect) return 100.0 * bp;
  double log_sum = 0.0;
  for (double p : precisions) log_sum += p == 0.0 ? -9999999999.0 : std::log(p);
  return bp * std::exp(log_sum / kMaxOrder);
}

double corpus_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) throw InputError("hypothesis and reference counts differ");
  if (hypotheses.empty()) throw InputError("corpus BLEU of an empty corpus");
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += sentence_bleu_stats(hypotheses[i], references[i]);
  return bleu_from_stats(total);
}

std::size_t word_edit_distance(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  std::vector<std::size_t> prev(ref.size() + 1);
  std::vector<std::size_t> cur(ref.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

double word_error_rate(const std::string& hypothesis, const std::string& reference) {
  const auto ref = text::split_words(reference);
  if (ref.empty()) throw UndefinedMetricError("WER needs a non-empty reference");
  const auto hyp = text::split_words(hypothesis);
  return static_cast<double>(word_edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

double real_time_factor(double wall_time_ms, double audio_duration_ms) {
  if (audio_duration_ms <= 0.0) throw InputError("RTF needs positive audio duration");
  return wall_time_ms / audio_duration_ms;
}

double corpus_real_time_factor(const std::vector<double>& wall_times_ms,
                               const std::vector<double>& audio_durations_ms) {
  if (wall_times_ms.size() != audio_durations_ms.size()) throw InputError("wall time and audio counts differ");
  const double wall = std::accumulate(wall_times_ms.begin(), wall_times_ms.end(), 0.0);
  const double audio = std::accumulate(audio_durations_ms.begin(), audio_durations_ms.end(), 0.0);
  return real_time_factor(wall, audio);
}

MetricReport aggregate_report(const std::vector<policy::TranslationRecord>& records,
                              const AggregateOptions& options) {
  if (records.empty()) throw InputError("cannot aggregate zero records");
  MetricReport report;
  report.n_records = records.size();
  report.config_fingerprint = records.front().config_fingerprint;
  for (const auto& r : records) {
    if (r.config_fingerprint != report.config_fingerprint) {
      report.config_fingerprint = "mixed";
      break;
    }
  }

  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  double al_sum = 0.0;
  double laal_sum = 0.0;
  std::size_t n_latency = 0;
  std::size_t wer_edits = 0;
  std::size_t wer_ref_words = 0;
  std::vector<double> walls;
  std::vector<double> audios;
  bool all_timed = true;

  for (const auto& r : records) {
    hyps.push_back(r.hypothesis);
    refs.push_back(r.reference);

    SentenceMetrics sm;
    sm.sentence_id = r.sentence_id;

    DelaySequence d;
    const auto& delays = options.computation_aware && r.compute_aware_delays ? *r.compute_aware_delays : r.delays;
    for (Millis m : delays) d.delays.push_back(static_cast<double>(m.count()));
    d.source_duration = static_cast<double>(r.source_duration.count());
    d.hyp_len = text::split_words(r.hypothesis).size();
    d.ref_len = text::split_words(r.reference).size();
    try {
      sm.al_ms = average_lagging(d);
      sm.laal_ms = length_aware_average_lagging(d);
      al_sum += *sm.al_ms;
      laal_sum += *sm.laal_ms;
      ++n_latency;
    } catch (const Error& e) {
      sm.al_ms.reset();
      sm.laal_ms.reset();
      sm.excluded = true;
      sm.note = e.what();
      ++report.n_excluded;
    }

    if (r.source_text) {
      const auto gold = text::split_words(*r.source_text);
      if (!gold.empty()) {
        const std::size_t edits = word_edit_distance(text::split_words(r.source_transcript), gold);
        sm.wer = static_cast<double>(edits) / static_cast<double>(gold.size());
        wer_edits += edits;
        wer_ref_words += gold.size();
      }
    }

    if (r.wall_time && r.source_duration.count() > 0) {
      sm.rtf = real_time_factor(static_cast<double>(r.wall_time->count()),
                                static_cast<double>(r.source_duration.count()));
      walls.push_back(static_cast<double>(r.wall_time->count()));
      audios.push_back(static_cast<double>(r.source_duration.count()));
    } else {
      all_timed = false;
    }
    report.per_sentence.push_back(std::move(sm));
  }

  report.bleu = corpus_bleu(hyps, refs);
  if (n_latency > 0) {
    report.al_ms = al_sum / static_cast<double>(n_latency);
    report.laal_ms = laal_sum / static_cast<double>(n_latency);
  }
  if (wer_ref_words > 0) report.wer = static_cast<double>(wer_edits) / static_cast<double>(wer_ref_words);
  if (all_timed && !walls.empty()) report.rtf = corpus_real_time_factor(walls, audios);
  return report;
}

}  // namespace simtrans::metrics
