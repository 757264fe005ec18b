#ifndef LOGSIEVE_PIPELINE_HPP
#define LOGSIEVE_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "logsieve/corpus.hpp"
#include "logsieve/filter.hpp"
#include "logsieve/lda.hpp"
#include "logsieve/metrics.hpp"
#include "logsieve/mlp.hpp"
#include "logsieve/ngram.hpp"
#include "logsieve/tokenizer.hpp"

namespace logsieve {
namespace pipeline {

// Everything train_bundle needs beyond the records themselves. The
// perplexity threshold is not set directly: it is calibrated so that
// keep_fraction of the training records pass, using cross-fitted scores
// (each half scored by a model trained on the other half) because a model
// memorizes once-seen n-grams and would score its own training data flat.
struct TrainOptions {
  int lm_order = 3;
  std::vector<double> lm_lambdas;  // ascending per order; empty -> defaults
  double keep_fraction = 0.35;     // fraction of train records kept by stage 1

  int topics = 100;  // K; also the classifier's input width
  int lda_sweeps = 200;
  int infer_sweeps = 30;  // fold-in sweeps, for training features and classify

  std::vector<int> hidden = {64, 64, 64};
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 32;

  std::uint64_t seed = 0;

  void validate() const;  // throws Error on out-of-range settings
};

// Training metadata carried with the bundle (the threshold itself lives in
// the filter config).
struct Manifest {
  int format_version = 1;
  std::uint64_t seed = 0;
  int infer_sweeps = 30;
  double keep_fraction = 0.35;
  std::uint64_t dropped_records = 0;  // train records that failed tokenize
  std::string created;                // ISO-8601 UTC, set by save_bundle
};

// The deployable unit: stage-1 scorer plus stage-2 embedder/classifier.
// Immutable after construction; classify is pure per record.
struct Bundle {
  lm::NGramModel lm;
  FilterConfig filter;
  lda::LdaModel lda;
  mlp::MlpModel mlp;
  Manifest manifest;

  Bundle(lm::NGramModel lm_in, FilterConfig filter_in, lda::LdaModel lda_in,
         mlp::MlpModel mlp_in, Manifest manifest_in);

  // Throws BundleConsistencyError unless the LDA topic count matches the
  // classifier input width and the classifier emits one score per class.
  void validate() const;
};

Bundle train_bundle(
    const std::vector<corpus::LabeledRecord>& train, const TrainOptions& opts,
    const tok::NormalizationRules& rules = tok::NormalizationRules::defaults());

// Stage-1 verdict plus, for kept records, the stage-2 class call.
struct ClassifyResult {
  bool filtered = false;
  std::string diagnostic;  // set when filtered
  double log2_ppx = 0.0;   // 0 when the record did not tokenize
  LogClass predicted = LogClass::kInformation;  // meaningful when !filtered
  std::vector<double> probs;                    // empty when filtered
};

// tokenize -> score -> threshold -> topic fold-in -> classifier -> argmax
// (ties toward the lower class index). Records that normalize to zero
// tokens come back filtered with a diagnostic instead of throwing. The
// fold-in seed is derived from the bundle seed and the record bytes, so
// results depend only on (bundle, text).
ClassifyResult classify(
    const Bundle& bundle, const RawRecord& record,
    const tok::NormalizationRules& rules = tok::NormalizationRules::defaults());

// Confusion matrix and metrics over a true-labeled test set. Filtered
// records are scored as predicted-Information in the full matrix — the
// filter's mistakes must show up in the metrics, not vanish; kept_only
// covers just the records stage 2 actually saw. Stage timings are taken
// on the same pass, both normalized by the original input bytes.
struct EvalReport {
  metrics::ConfusionMatrix full;
  metrics::ConfusionMatrix kept_only;
  metrics::Summary summary;       // over full
  metrics::Summary kept_summary;  // over kept_only
  std::uint64_t kept = 0;
  std::uint64_t filtered = 0;
  std::uint64_t input_bytes = 0;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
  double stage1_bytes_per_sec = 0.0;
  double stage2_bytes_per_sec = 0.0;  // per original input byte, see above
  double throughput_ratio = 0.0;      // stage1 / stage2
};

EvalReport evaluate(
    const Bundle& bundle, const std::vector<corpus::LabeledRecord>& test,
    const tok::NormalizationRules& rules = tok::NormalizationRules::defaults());

// Stage-in-isolation throughput: stage 1 is tokenize+score over every
// record (parallel across workers); stage 2 is fold-in + classifier over
// every record (as if it had no filter in front), single-threaded and
// reported per core. Both are normalized by the original corpus bytes so
// the ratio matches a per-corpus framing.
struct BenchReport {
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  std::uint64_t kept = 0;  // records stage 1 would pass through
  int workers = 1;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
  double stage1_bytes_per_sec_core = 0.0;
  double stage2_bytes_per_sec_core = 0.0;
  double ratio = 0.0;   // stage1 / stage2, per-core
  std::string warning;  // set when the corpus is under the 10 MB floor
};

// Throws BenchDataTooSmallError only for an empty corpus; a non-empty
// corpus under 10 MB runs anyway and carries a warning in the report.
BenchReport bench(
    const Bundle& bundle, const std::vector<RawRecord>& records, int workers,
    const tok::NormalizationRules& rules = tok::NormalizationRules::defaults());

// Directory layout: lm.bin, lda.bin, mlp.bin, manifest.json. The manifest
// records an FNV-1a-64 digest per model file; load_bundle re-hashes and
// throws BundleIntegrityError on any mismatch or missing piece, then
// validates cross-model consistency.
void save_bundle(const Bundle& bundle, const std::string& dir);
Bundle load_bundle(const std::string& dir);

}  // namespace pipeline
}  // namespace logsieve

#endif  // LOGSIEVE_PIPELINE_HPP
