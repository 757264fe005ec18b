#ifndef LOGSIEVE_TOKENIZER_HPP
#define LOGSIEVE_TOKENIZER_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "logsieve/errors.hpp"

namespace logsieve {

// The three operational classes. The order is fixed; it is also the
// row/column order of the confusion matrix.
enum class LogClass : int {
  kInformation = 0,
  kOperationError = 1,
  kSystemError = 2,
};

inline constexpr int kNumClasses = 3;

// Wire names used in jsonl files and CLI output.
const char* to_string(LogClass c);
std::optional<LogClass> log_class_from_string(const std::string& s);

// One log record as read from the input. preset_label is whatever the
// target system attached; it is carried through but never trusted.
struct RawRecord {
  std::size_t line_no = 0;  // 1-based
  std::string text;
  std::optional<LogClass> preset_label;
};

struct TokenSequence {
  std::vector<std::string> tokens;
  std::size_t record_line_no = 0;  // provenance back-link
};

namespace tok {

// Ordered pattern -> placeholder table. The built-in default is a fast
// hand-rolled scanner equivalent to this rule list, applied in order to
// standalone value-like spans:
//   1. yyyy-mm-dd / yyyy/mm/dd dates        -> <date>
//   2. hh:mm:ss clock times (.,fraction ok) -> <time>
//   3. dotted-quad IPv4 addresses           -> <ip>
//   4. 0x-prefixed hex, or bare hex runs of length >= 4 that mix digits
//      and letters                          -> <hex>
//   5. decimal numbers (optional fraction)  -> <num>
// Everything else splits on whitespace and punctuation, except '.'
// between identifier characters (keeps names like java.net.SocketException
// whole). Lowercasing happens after placeholder detection. A custom table
// loaded from a file replaces the pattern set with user regexes, applied
// as ordered substring substitutions before the splitting pass.
class NormalizationRules {
 public:
  static NormalizationRules defaults();

  // File format: one rule per line, "<placeholder> regex...", '#' comments.
  static NormalizationRules from_file(const std::string& path);

  std::size_t max_tokens() const { return max_tokens_; }
  void set_max_tokens(std::size_t n) { max_tokens_ = n; }

  bool is_custom() const { return custom_; }
  const std::vector<std::pair<std::string, std::string>>& custom_rules()
      const {
    return rules_;
  }
  const std::vector<std::pair<std::string, std::regex>>& compiled() const {
    return compiled_;
  }

 private:
  bool custom_ = false;
  std::vector<std::pair<std::string, std::string>> rules_;  // placeholder, regex
  std::vector<std::pair<std::string, std::regex>> compiled_;
  std::size_t max_tokens_ = 512;
};

// Normalizes one record into a token sequence. Deterministic: identical
// bytes give identical tokens. Throws EmptyRecordError when nothing
// survives normalization; try_tokenize is the non-throwing form used on
// the streaming path.
TokenSequence tokenize(const RawRecord& record, const NormalizationRules& rules);
std::optional<TokenSequence> try_tokenize(const RawRecord& record,
                                          const NormalizationRules& rules);

enum class RecordFormat { kLines, kJsonl };

std::optional<RecordFormat> record_format_from_string(const std::string& s);

// Pulls RawRecords off a stream, one per line. next() throws
// RecordParseError on a malformed jsonl line; the reader stays usable and
// resumes at the following line, so callers may count and continue.
class RecordReader {
 public:
  RecordReader(std::istream& in, RecordFormat format);

  std::optional<RawRecord> next();
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  RecordFormat format_;
  std::size_t line_no_ = 0;
};

}  // namespace tok
}  // namespace logsieve

#endif  // LOGSIEVE_TOKENIZER_HPP
