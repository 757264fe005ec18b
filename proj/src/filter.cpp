#include "logsieve/filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "logsieve/errors.hpp"

namespace logsieve {

void FilterConfig::validate() const {
  if (!std::isfinite(threshold)) throw Error("threshold must be finite");
  if (worker_count < 1) throw Error("worker count must be >= 1");
  if (!(histogram_bin_width > 0.0)) throw Error("histogram bin width must be > 0");
}

void Histogram::add(double score) {
  const long long k = static_cast<long long>(std::floor(score / bin_width));
  ++bins[k];
  ++total;
}

void Histogram::merge(const Histogram& other) {
  for (const auto& [k, c] : other.bins) bins[k] += c;
  total += other.total;
}

double FilterReport::per_core_throughput() const {
  if (wall_time_sec <= 0.0 || workers_used < 1) return 0.0;
  return static_cast<double>(bytes_processed) /
         (wall_time_sec * static_cast<double>(workers_used));
}

namespace {

constexpr std::size_t kBatchSize = 1024;

// Per-record scoring outcome inside a batch; index-aligned with the
// batch so emission order never depends on worker scheduling.
struct SlotResult {
  bool tokenized = false;
  double log2_ppx = 0.0;
};

void score_slice(const std::vector<RawRecord>& batch, std::size_t begin,
                 std::size_t end, const lm::NGramModel& model,
                 const tok::NormalizationRules& rules,
                 std::vector<SlotResult>& out) {
  for (std::size_t i = begin; i < end; ++i) {
    auto seq = tok::try_tokenize(batch[i], rules);
    if (!seq) continue;
    out[i].tokenized = true;
    out[i].log2_ppx = model.score(*seq).log2_ppx;
  }
}

}  // namespace

std::vector<KeptRecord> filter_stream(const RecordSource& source,
                                      const lm::NGramModel& model,
                                      const FilterConfig& cfg,
                                      const tok::NormalizationRules& rules,
                                      FilterReport& report) {
  cfg.validate();
  report = FilterReport{};
  report.workers_used = cfg.worker_count;
  for (auto& h : report.per_label) h.bin_width = cfg.histogram_bin_width;
  report.unlabeled.bin_width = cfg.histogram_bin_width;

  const auto started = std::chrono::steady_clock::now();
  std::vector<KeptRecord> kept;
  std::vector<RawRecord> batch;
  std::vector<SlotResult> results;
  batch.reserve(kBatchSize);

  bool exhausted = false;
  while (!exhausted) {
    batch.clear();
    while (batch.size() < kBatchSize) {
      auto rec = source();
      if (!rec) {
        exhausted = true;
        break;
      }
      batch.push_back(std::move(*rec));
    }
    if (batch.empty()) break;

    results.assign(batch.size(), SlotResult{});
    const std::size_t lanes = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.worker_count), batch.size());
    if (lanes <= 1) {
      score_slice(batch, 0, batch.size(), model, rules, results);
    } else {
      // Contiguous slices: slice boundaries depend only on sizes, so the
      // per-index results (and thus the kept set) match the serial run.
      std::vector<std::thread> pool;
      pool.reserve(lanes);
      const std::size_t chunk = (batch.size() + lanes - 1) / lanes;
      for (std::size_t lane = 0; lane < lanes; ++lane) {
        const std::size_t begin = lane * chunk;
        const std::size_t end = std::min(begin + chunk, batch.size());
        if (begin >= end) break;
        pool.emplace_back(score_slice, std::cref(batch), begin, end,
                          std::cref(model), std::cref(rules),
                          std::ref(results));
      }
      for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++report.total_in;
      report.bytes_processed += batch[i].text.size();
      if (!results[i].tokenized) {
        ++report.failed_tokenize;
        continue;
      }
      const double score = results[i].log2_ppx;
      if (batch[i].preset_label)
        report.per_label[static_cast<int>(*batch[i].preset_label)].add(score);
      else
        report.unlabeled.add(score);
      if (score >= cfg.threshold) {
        ++report.kept;
        kept.push_back(KeptRecord{std::move(batch[i]), score});
      }
    }
  }

  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return kept;
}

std::vector<KeptRecord> filter_records(const std::vector<RawRecord>& records,
                                       const lm::NGramModel& model,
                                       const FilterConfig& cfg,
                                       const tok::NormalizationRules& rules,
                                       FilterReport& report) {
  std::size_t next = 0;
  return filter_stream(
      [&]() -> std::optional<RawRecord> {
        if (next >= records.size()) return std::nullopt;
        return records[next++];
      },
      model, cfg, rules, report);
}

double calibrate_threshold(const std::vector<double>& scores,
                           double target_keep_fraction) {
  if (scores.empty()) throw CalibrationDataEmptyError();
  if (!(target_keep_fraction > 0.0) || target_keep_fraction > 1.0)
    throw Error("keep fraction must be in (0, 1]");
  const std::size_t n = scores.size();
  std::size_t m = static_cast<std::size_t>(
      std::ceil(target_keep_fraction * static_cast<double>(n)));
  if (m < 1) m = 1;
  if (m > n) m = n;
  std::vector<double> sorted(scores);
  // m-th largest value; keeping score >= it keeps at least m records.
  std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end(),
                   std::greater<double>());
  return sorted[m - 1];
}

}  // namespace logsieve
