#include "logsieve/filter.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "logsieve/errors.hpp"
#include "logsieve/rng.hpp"

using namespace logsieve;

namespace {

TokenSequence seq_of(std::vector<std::string> tokens) {
  TokenSequence s;
  s.tokens = std::move(tokens);
  return s;
}

// Corpus with a dominant common template and a rare one, so scores split
// into a low band and a high band.
lm::NGramModel two_band_model() {
  std::vector<TokenSequence> corpus;
  for (int i = 0; i < 400; ++i)
    corpus.push_back(seq_of({"job", "finished", "cleanly"}));
  for (int i = 0; i < 2; ++i)
    corpus.push_back(seq_of({"disk", "array", "degraded"}));
  return lm::NGramModel::train(corpus, 3);
}

std::vector<RawRecord> mixed_records(std::size_t n, double rare_fraction,
                                     std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RawRecord r;
    r.line_no = i + 1;
    if (rng.next_double() < rare_fraction) {
      r.text = "disk array degraded";
      r.preset_label = LogClass::kSystemError;
    } else {
      r.text = "job finished cleanly";
      r.preset_label = LogClass::kInformation;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<std::size_t> line_nos(const std::vector<KeptRecord>& kept) {
  std::vector<std::size_t> out;
  out.reserve(kept.size());
  for (const auto& k : kept) out.push_back(k.record.line_no);
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  FilterConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("nan threshold") {
    cfg.threshold = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  SUBCASE("infinite threshold") {
    cfg.threshold = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  SUBCASE("zero workers") {
    cfg.worker_count = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  SUBCASE("bad bin width") {
    cfg.histogram_bin_width = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}

TEST_CASE("keep decision is score >= threshold") {
  auto model = two_band_model();
  const double rare =
      model.score(seq_of({"disk", "array", "degraded"})).log2_ppx;
  const double common =
      model.score(seq_of({"job", "finished", "cleanly"})).log2_ppx;
  REQUIRE(common < rare);

  std::vector<RawRecord> records = {
      {1, "disk array degraded", std::nullopt},
      {2, "job finished cleanly", std::nullopt},
  };
  auto rules = tok::NormalizationRules::defaults();
  FilterConfig cfg;
  FilterReport report;

  // Threshold between the bands: high band kept, low band dropped.
  cfg.threshold = (common + rare) / 2.0;
  auto kept = filter_records(records, model, cfg, rules, report);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].record.line_no == 1);
  CHECK(kept[0].log2_ppx == rare);
  CHECK(report.total_in == 2);
  CHECK(report.kept == 1);
  CHECK(report.filtered() == 1);

  // Exactly at the boundary: the boundary score is kept.
  cfg.threshold = rare;
  kept = filter_records(records, model, cfg, rules, report);
  CHECK(kept.size() == 1);

  cfg.threshold = std::nextafter(rare, rare + 1.0);
  kept = filter_records(records, model, cfg, rules, report);
  CHECK(kept.empty());

  // Vacuous cutoff at the lowest finite threshold keeps everything.
  cfg.threshold = std::numeric_limits<double>::lowest();
  kept = filter_records(records, model, cfg, rules, report);
  CHECK(kept.size() == 2);
  CHECK(report.kept == report.total_in);
}

TEST_CASE("order preserved and reports identical across worker counts") {
  auto model = two_band_model();
  auto rules = tok::NormalizationRules::defaults();
  auto records = mixed_records(10000, 0.3, 77);

  FilterConfig cfg;
  cfg.threshold = 1.0;

  cfg.worker_count = 1;
  FilterReport serial_report;
  auto serial = filter_records(records, model, cfg, rules, serial_report);

  cfg.worker_count = 8;
  FilterReport parallel_report;
  auto parallel = filter_records(records, model, cfg, rules, parallel_report);

  REQUIRE(serial.size() == parallel.size());
  CHECK(line_nos(serial) == line_nos(parallel));
  auto sorted = line_nos(serial);
  CHECK(std::is_sorted(sorted.begin(), sorted.end()));
  for (std::size_t i = 0; i < serial.size(); ++i)
    CHECK(serial[i].log2_ppx == parallel[i].log2_ppx);

  CHECK(serial_report.total_in == parallel_report.total_in);
  CHECK(serial_report.kept == parallel_report.kept);
  CHECK(serial_report.failed_tokenize == parallel_report.failed_tokenize);
  CHECK(serial_report.bytes_processed == parallel_report.bytes_processed);
  for (int c = 0; c < kNumClasses; ++c) {
    CHECK(serial_report.per_label[c].bins == parallel_report.per_label[c].bins);
    CHECK(serial_report.per_label[c].total ==
          parallel_report.per_label[c].total);
  }
}

TEST_CASE("raising the threshold never keeps more") {
  auto model = two_band_model();
  auto rules = tok::NormalizationRules::defaults();
  auto records = mixed_records(2000, 0.25, 1234);

  FilterConfig cfg;
  std::size_t prev = records.size() + 1;
  for (double t : {-5.0, 0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
    cfg.threshold = t;
    FilterReport report;
    auto kept = filter_records(records, model, cfg, rules, report);
    CHECK(kept.size() <= prev);
    CHECK(report.kept + report.filtered() == report.total_in);
    prev = kept.size();
  }
}

TEST_CASE("per-label histogram mass matches label counts") {
  auto model = two_band_model();
  auto rules = tok::NormalizationRules::defaults();
  auto records = mixed_records(5000, 0.2, 321);
  std::size_t n_sys = 0;
  for (const auto& r : records)
    if (r.preset_label == LogClass::kSystemError) ++n_sys;

  FilterConfig cfg;
  FilterReport report;
  filter_records(records, model, cfg, rules, report);

  const auto& sys = report.per_label[static_cast<int>(LogClass::kSystemError)];
  const auto& info = report.per_label[static_cast<int>(LogClass::kInformation)];
  CHECK(sys.total == n_sys);
  CHECK(info.total == records.size() - n_sys);
  std::uint64_t sys_mass = 0;
  for (const auto& [bin, count] : sys.bins) sys_mass += count;
  CHECK(sys_mass == sys.total);
  CHECK(report.unlabeled.total == 0);
}

TEST_CASE("records that normalize to nothing count as filtered") {
  auto model = two_band_model();
  auto rules = tok::NormalizationRules::defaults();
  std::vector<RawRecord> records = {
      {1, "job finished cleanly", std::nullopt},
      {2, "!!! ---", std::nullopt},
      {3, "disk array degraded", std::nullopt},
  };
  FilterConfig cfg;
  cfg.threshold = std::numeric_limits<double>::lowest();
  FilterReport report;
  auto kept = filter_records(records, model, cfg, rules, report);
  CHECK(report.total_in == 3);
  CHECK(report.failed_tokenize == 1);
  CHECK(kept.size() == 2);
  CHECK(report.kept == 2);
  // The unscorable record appears in no histogram.
  std::uint64_t mass = report.unlabeled.total;
  for (const auto& h : report.per_label) mass += h.total;
  CHECK(mass == 2);
}

TEST_CASE("histogram bins cover half-open ranges") {
  Histogram h;
  h.bin_width = 1.0;
  h.add(8.1);
  h.add(8.2);
  h.add(11.5);
  CHECK(h.total == 3);
  REQUIRE(h.bins.size() == 2);
  CHECK(h.bins.at(8) == 2);
  CHECK(h.bins.at(11) == 1);

  SUBCASE("boundary values land in the upper bin") {
    Histogram g;
    g.bin_width = 0.25;
    g.add(1.0);   // [1.0, 1.25) -> bin 4
    g.add(0.999); // [0.75, 1.0) -> bin 3
    CHECK(g.bins.at(4) == 1);
    CHECK(g.bins.at(3) == 1);
  }
  SUBCASE("mass conservation over random scores") {
    Rng rng(5);
    Histogram g;
    g.bin_width = 0.25;
    for (int i = 0; i < 10000; ++i) g.add(rng.next_double() * 20.0);
    std::uint64_t mass = 0;
    for (const auto& [bin, count] : g.bins) mass += count;
    CHECK(mass == 10000);
    CHECK(g.total == 10000);
  }
  SUBCASE("empty histogram") {
    Histogram g;
    CHECK(g.total == 0);
    CHECK(g.bins.empty());
  }
}

TEST_CASE("threshold calibration picks the keep-fraction quantile") {
  std::vector<double> scores;
  for (int i = 1; i <= 100; ++i) scores.push_back(static_cast<double>(i));
  Rng rng(9);
  rng.shuffle(scores);

  const double t = calibrate_threshold(scores, 0.10);
  CHECK(t == 91.0);
  std::size_t kept = 0;
  for (double s : scores)
    if (s >= t) ++kept;
  CHECK(kept == 10);

  SUBCASE("keep everything") {
    CHECK(calibrate_threshold(scores, 1.0) == 1.0);
  }
  SUBCASE("ties are kept together") {
    std::vector<double> tied = {5.0, 5.0, 5.0, 1.0};
    const double tt = calibrate_threshold(tied, 0.5);
    CHECK(tt == 5.0);
    std::size_t k = 0;
    for (double s : tied)
      if (s >= tt) ++k;
    CHECK(k == 3);  // smallest set of size >= 2 given the tie
  }
  SUBCASE("fractional target rounds up") {
    std::vector<double> ten = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(calibrate_threshold(ten, 0.35) == 7.0);  // ceil(3.5) = 4 kept
  }
  SUBCASE("empty scores") {
    CHECK_THROWS_AS(calibrate_threshold({}, 0.5), CalibrationDataEmptyError);
  }
  SUBCASE("fraction out of range") {
    CHECK_THROWS_AS(calibrate_threshold(scores, 0.0), Error);
    CHECK_THROWS_AS(calibrate_threshold(scores, 1.5), Error);
  }
}

TEST_CASE("rare templates sit above common ones in score space") {
  auto model = two_band_model();
  auto rules = tok::NormalizationRules::defaults();
  auto records = mixed_records(4000, 0.15, 2024);

  FilterConfig cfg;
  cfg.threshold = std::numeric_limits<double>::lowest();
  FilterReport report;
  auto kept = filter_records(records, model, cfg, rules, report);

  std::vector<double> common, rare;
  for (const auto& k : kept) {
    if (k.record.preset_label == LogClass::kSystemError)
      rare.push_back(k.log2_ppx);
    else
      common.push_back(k.log2_ppx);
  }
  REQUIRE(!common.empty());
  REQUIRE(!rare.empty());
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  CHECK(median(rare) > median(common));
}
