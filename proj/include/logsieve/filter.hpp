#ifndef LOGSIEVE_FILTER_HPP
#define LOGSIEVE_FILTER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logsieve/ngram.hpp"
#include "logsieve/tokenizer.hpp"

namespace logsieve {

// Stage-1 configuration: records scoring at or above the threshold pass
// through to classification, everything below is dropped as routine.
struct FilterConfig {
  double threshold = 11.0;       // base-2 log-perplexity cutoff
  int worker_count = 1;          // parallel scoring lanes
  double histogram_bin_width = 0.25;

  // Throws Error when a field is out of range.
  void validate() const;
};

// Binned score counts; bin k covers [k*w, (k+1)*w).
struct Histogram {
  double bin_width = 0.25;
  std::map<long long, std::uint64_t> bins;
  std::uint64_t total = 0;

  void add(double score);
  void merge(const Histogram& other);
};

// Everything the filtering pass observed. Histograms are grouped by the
// record's preset label (untrusted, diagnostic only); records without one
// land in the unlabeled bucket.
struct FilterReport {
  std::uint64_t total_in = 0;
  std::uint64_t kept = 0;
  std::uint64_t failed_tokenize = 0;  // counted as filtered
  std::uint64_t bytes_processed = 0;
  double wall_time_sec = 0.0;
  int workers_used = 1;
  Histogram per_label[kNumClasses];
  Histogram unlabeled;

  std::uint64_t filtered() const { return total_in - kept; }
  // Bytes per second per scoring lane.
  double per_core_throughput() const;
};

// A record that passed the filter, with its score attached.
struct KeptRecord {
  RawRecord record;
  double log2_ppx = 0.0;
};

// Pull-based record source; returns nullopt at end of input.
using RecordSource = std::function<std::optional<RawRecord>()>;

// Scores every record and keeps those with log2_ppx >= cfg.threshold.
// Output order equals input order for any worker count: records are read
// in batches and each batch is scored over contiguous per-worker slices,
// then emitted in sequence. Records that normalize to nothing are counted
// as filtered under failed_tokenize.
std::vector<KeptRecord> filter_stream(const RecordSource& source,
                                      const lm::NGramModel& model,
                                      const FilterConfig& cfg,
                                      const tok::NormalizationRules& rules,
                                      FilterReport& report);

std::vector<KeptRecord> filter_records(const std::vector<RawRecord>& records,
                                       const lm::NGramModel& model,
                                       const FilterConfig& cfg,
                                       const tok::NormalizationRules& rules,
                                       FilterReport& report);

// Smallest threshold that keeps at least target_keep_fraction of the
// scores, ties kept together: the ceil(f*N)-th largest score. Throws
// CalibrationDataEmptyError on no scores, Error on a fraction outside
// (0, 1].
double calibrate_threshold(const std::vector<double>& scores,
                           double target_keep_fraction);

}  // namespace logsieve

#endif  // LOGSIEVE_FILTER_HPP
