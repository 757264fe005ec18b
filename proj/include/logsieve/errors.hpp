#ifndef LOGSIEVE_ERRORS_HPP
#define LOGSIEVE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logsieve {

// Base for every error raised by the library. Data problems derive from
// this; programming errors (bad dimensions etc.) use ShapeError below.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A record that normalizes to zero tokens.
class EmptyRecordError : public Error {
 public:
  EmptyRecordError() : Error("record normalized to zero tokens") {}
};

// Malformed input line; carries the 1-based line number.
class RecordParseError : public Error {
 public:
  RecordParseError(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class TrainingDataEmptyError : public Error {
 public:
  TrainingDataEmptyError() : Error("training corpus is empty") {}
};

// Bad magic, wrong version, or truncated/corrupt model file.
class ModelFormatError : public Error {
 public:
  explicit ModelFormatError(const std::string& msg)
      : Error("model format: " + msg) {}
};

class CalibrationDataEmptyError : public Error {
 public:
  CalibrationDataEmptyError() : Error("no scores to calibrate on") {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& msg) : Error(msg) {}
};

class SplitError : public Error {
 public:
  explicit SplitError(const std::string& msg) : Error(msg) {}
};

class EvalDataEmptyError : public Error {
 public:
  EvalDataEmptyError() : Error("evaluation set is empty") {}
};

class BenchDataTooSmallError : public Error {
 public:
  explicit BenchDataTooSmallError(const std::string& msg) : Error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape: " + msg) {}
};

class EmptyBatchError : public Error {
 public:
  EmptyBatchError() : Error("empty batch") {}
};

// Bundle manifest hash does not match the model file on disk.
class BundleIntegrityError : public Error {
 public:
  explicit BundleIntegrityError(const std::string& msg)
      : Error("bundle integrity: " + msg) {}
};

// Bundle components disagree with each other (e.g. LDA K vs MLP input dim).
class BundleConsistencyError : public Error {
 public:
  explicit BundleConsistencyError(const std::string& msg)
      : Error("bundle consistency: " + msg) {}
};

}  // namespace logsieve

#endif  // LOGSIEVE_ERRORS_HPP
