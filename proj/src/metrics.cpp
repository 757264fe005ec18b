#include "logsieve/metrics.hpp"

namespace logsieve {
namespace metrics {

std::uint64_t ConfusionMatrix::row_sum(int truth) const {
  std::uint64_t s = 0;
  for (int p = 0; p < kNumClasses; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int pred) const {
  std::uint64_t s = 0;
  for (int t = 0; t < kNumClasses; ++t) s += at(t, pred);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (int t = 0; t < kNumClasses; ++t) s += row_sum(t);
  return s;
}

std::uint64_t ConfusionMatrix::diagonal() const {
  std::uint64_t s = 0;
  for (int k = 0; k < kNumClasses; ++k) s += at(k, k);
  return s;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  for (int t = 0; t < kNumClasses; ++t)
    for (int p = 0; p < kNumClasses; ++p)
      cells[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] +=
          other.at(t, p);
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassMetrics class_metrics(const ConfusionMatrix& cm, int k) {
  ClassMetrics m;
  std::uint64_t hit = cm.at(k, k);
  m.precision = ratio(hit, cm.col_sum(k));
  m.recall = ratio(hit, cm.row_sum(k));
  double pr = m.precision + m.recall;
  m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
  return m;
}

Summary summarize(const ConfusionMatrix& cm) {
  Summary s;
  for (int k = 0; k < kNumClasses; ++k) {
    s.per_class[static_cast<std::size_t>(k)] = class_metrics(cm, k);
    s.macro_precision += s.per_class[static_cast<std::size_t>(k)].precision;
    s.macro_recall += s.per_class[static_cast<std::size_t>(k)].recall;
    s.macro_f1 += s.per_class[static_cast<std::size_t>(k)].f1;
  }
  s.macro_precision /= kNumClasses;
  s.macro_recall /= kNumClasses;
  s.macro_f1 /= kNumClasses;
  s.accuracy = ratio(cm.diagonal(), cm.total());
  return s;
}

}  // namespace metrics
}  // namespace logsieve
