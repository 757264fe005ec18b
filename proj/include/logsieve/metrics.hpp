#ifndef LOGSIEVE_METRICS_HPP
#define LOGSIEVE_METRICS_HPP

#include <array>
#include <cstdint>

#include "logsieve/tokenizer.hpp"

namespace logsieve {
namespace metrics {

// 3x3 confusion counts, rows = true class, columns = predicted class,
// both in LogClass order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> cells{};

  void add(LogClass truth, LogClass predicted) {
    ++cells[static_cast<std::size_t>(truth)]
           [static_cast<std::size_t>(predicted)];
  }

  std::uint64_t at(int truth, int predicted) const {
    return cells[static_cast<std::size_t>(truth)]
                [static_cast<std::size_t>(predicted)];
  }

  std::uint64_t row_sum(int truth) const;  // how many records ARE this class
  std::uint64_t col_sum(int pred) const;   // how many were CALLED this class
  std::uint64_t total() const;
  std::uint64_t diagonal() const;

  void merge(const ConfusionMatrix& other);
};

// Precision, recall and their harmonic mean for one class. Every 0/0 is
// defined as 0 (a class never predicted has precision 0, never present has
// recall 0).
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm, int k);

// Per-class metrics plus their arithmetic means across classes.
struct Summary {
  std::array<ClassMetrics, kNumClasses> per_class{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // diagonal / total, 0 on an empty matrix
};

Summary summarize(const ConfusionMatrix& cm);

}  // namespace metrics
}  // namespace logsieve

#endif  // LOGSIEVE_METRICS_HPP
