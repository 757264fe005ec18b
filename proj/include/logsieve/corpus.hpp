#ifndef LOGSIEVE_CORPUS_HPP
#define LOGSIEVE_CORPUS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "logsieve/errors.hpp"
#include "logsieve/tokenizer.hpp"

namespace logsieve {
namespace corpus {

// One template per line; placeholders in angle brackets are filled by the
// generator. Recognized placeholders:
//   <num> <ip> <date> <time> <hex>  value-like fillers
//   <ident>                         a service name from a small fixed pool
//   <rare>                          one pseudo-random identifier
//   <rarerun>                       a short run of 3-5 rare identifiers
//   <rpath>                         a dotted rare path (one token)
// Rare fillers are drawn from a space large enough that held-out records
// almost never repeat them, which is what pushes error-class records into
// the high-perplexity band.
using TemplatePool = std::vector<std::string>;

// Recipe for a labeled synthetic corpus. Class mix defaults follow the
// observed traffic split this models: overwhelmingly routine records, a
// sizable slice of operation errors, and a thin band of system errors.
struct SyntheticSpec {
  std::array<TemplatePool, kNumClasses> templates;
  std::array<double, kNumClasses> class_mix = {0.708, 0.278, 0.014};
  double label_noise = 0.1;         // P(preset label is wrong)
  double rare_template_rate = 0.02; // P(a routine record carries a rare ref)
  int min_trace_frames = 3;         // pseudo-stack-trace length range for
  int max_trace_frames = 9;         // system-error records (uniform)
  std::uint64_t seed = 0;

  // Throws SpecError unless the mix sums to 1, every rate is a
  // probability, and the frame range is sane.
  void validate() const;
};

// A generated (or re-read) record: the true class plus the possibly-wrong
// preset label the emitting system would have attached.
struct LabeledRecord {
  std::string text;
  LogClass label = LogClass::kInformation;
  LogClass preset_label = LogClass::kInformation;
};

// Template pools ship as editable text files, one pool per class, named
// after the wire class names: normal.txt, operation.txt, system.txt.
// Blank lines are skipped. A missing file raises SpecError.
TemplatePool load_template_pool(const std::string& path);
std::array<TemplatePool, kNumClasses> load_template_dir(const std::string& dir);

// Directory the pools are loaded from when no override is given: the
// LOGSIEVE_TEMPLATES environment variable if set, else the build-time
// default pointing at the source tree's assets.
std::string default_template_dir();

// Seeded-sequential generation: identical spec -> identical records.
// Every record draws its class from the mix, draws a template uniformly
// from that class's pool, and fills the placeholders; system-error records
// get a multi-frame pseudo stack trace appended first. Throws SpecError if
// n_records is zero or any class with positive mix has an empty pool.
std::vector<LabeledRecord> generate(const SyntheticSpec& spec,
                                    std::size_t n_records);

// jsonl with fields text, label (true), preset_label (noisy). read_jsonl
// throws RecordParseError (with the 1-based line number) on malformed
// lines or unknown class names; blank lines are skipped.
void write_jsonl(const std::vector<LabeledRecord>& records, std::ostream& out);
std::vector<LabeledRecord> read_jsonl(std::istream& in);

// Seeded shuffle, then partition with train = floor(N * fraction), nudged
// so neither side is empty. Throws SplitError on fewer than 2 records or a
// fraction outside (0, 1).
std::pair<std::vector<LabeledRecord>, std::vector<LabeledRecord>> split(
    std::vector<LabeledRecord> corpus, double train_fraction,
    std::uint64_t seed);

// Bridges to the unlabeled streaming stages. Line numbers are assigned
// 1..N so diagnostics can point back into the generated set.
RawRecord to_raw(const LabeledRecord& r, std::size_t line_no);
std::vector<RawRecord> to_raw_records(const std::vector<LabeledRecord>& rs);

}  // namespace corpus
}  // namespace logsieve

#endif  // LOGSIEVE_CORPUS_HPP
