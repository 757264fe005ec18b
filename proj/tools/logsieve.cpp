// logsieve — two-stage log triage from the command line.
//
// Stage 1 scores records against an n-gram language model and drops
// everything below a log2-perplexity threshold; stage 2 folds the
// survivors into a topic space and classifies them. Subcommands cover
// corpus generation, model training, calibration, filtering,
// classification, evaluation, and benchmarking.
//
// Exit codes: 0 success, 1 data or model errors, 2 usage errors.

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "logsieve/corpus.hpp"
#include "logsieve/errors.hpp"
#include "logsieve/filter.hpp"
#include "logsieve/lda.hpp"
#include "logsieve/metrics.hpp"
#include "logsieve/mlp.hpp"
#include "logsieve/ngram.hpp"
#include "logsieve/pipeline.hpp"
#include "logsieve/rng.hpp"
#include "logsieve/tokenizer.hpp"

namespace {

using nlohmann::json;
using namespace logsieve;

struct GlobalOpts {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string rules_file;
};

tok::NormalizationRules rules_for(const GlobalOpts& g) {
  if (g.rules_file.empty()) return tok::NormalizationRules::defaults();
  return tok::NormalizationRules::from_file(g.rules_file);
}

// "-" or an empty path means the standard stream.
std::istream& open_input(const std::string& path, std::ifstream& file) {
  if (path.empty() || path == "-") return std::cin;
  file.open(path, std::ios::binary);
  if (!file) throw Error("cannot open input file: " + path);
  return file;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw Error("cannot open output file: " + path);
  return file;
}

tok::RecordFormat parse_format(const std::string& name) {
  auto fmt = tok::record_format_from_string(name);
  if (!fmt) throw CLI::ValidationError("--format", "unknown format: " + name);
  return *fmt;
}

void add_format_option(CLI::App* cmd, std::string& format) {
  cmd->add_option("--format", format,
                  "Input record format: lines (one raw record per line) or "
                  "jsonl ({\"text\": ..., \"label\": optional})")
      ->check(CLI::IsMember({"lines", "jsonl"}))
      ->capture_default_str();
}

std::vector<RawRecord> read_records(std::istream& in, tok::RecordFormat fmt,
                                    bool lenient, std::size_t& malformed) {
  tok::RecordReader reader(in, fmt);
  std::vector<RawRecord> records;
  for (;;) {
    try {
      auto r = reader.next();
      if (!r) break;
      records.push_back(std::move(*r));
    } catch (const RecordParseError&) {
      if (!lenient) throw;
      ++malformed;
    }
  }
  return records;
}

std::vector<TokenSequence> tokenize_all(const std::vector<RawRecord>& records,
                                        const tok::NormalizationRules& rules,
                                        std::size_t& skipped) {
  std::vector<TokenSequence> seqs;
  seqs.reserve(records.size());
  for (const auto& r : records) {
    auto seq = tok::try_tokenize(r, rules);
    if (seq)
      seqs.push_back(std::move(*seq));
    else
      ++skipped;
  }
  return seqs;
}

void note_skipped(std::size_t malformed, std::size_t skipped) {
  if (malformed > 0)
    std::cerr << "note: skipped " << malformed << " malformed input line(s)\n";
  if (skipped > 0)
    std::cerr << "note: skipped " << skipped
              << " record(s) that normalized to zero tokens\n";
}

template <class Model>
Model load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model file: " + path);
  return Model::load(is);
}

template <class Model>
void save_model(const Model& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open output file: " + path);
  model.save(os);
  if (!os) throw Error("short write to " + path);
}

// ---------------------------------------------------------------------------
// Bundle handling shared by classify / eval / bench: either a saved bundle
// directory or the individual model files plus a threshold.

struct BundleOpts {
  std::string bundle_dir;
  std::string lm_file;
  std::string lda_file;
  std::string clf_file;
  double threshold = 11.0;
  int infer_sweeps = 30;
  std::string save_dir;
};

void add_bundle_options(CLI::App* cmd, BundleOpts& b) {
  cmd->add_option("--bundle", b.bundle_dir,
                  "Directory holding a saved bundle (lm.bin, lda.bin, "
                  "mlp.bin, manifest.json)");
  cmd->add_option("--lm", b.lm_file, "Language model file (without --bundle)");
  cmd->add_option("--lda", b.lda_file, "Topic model file (without --bundle)");
  cmd->add_option("--clf", b.clf_file, "Classifier file (without --bundle)");
  cmd->add_option("--threshold", b.threshold,
                  "log2-perplexity cutoff (without --bundle)")
      ->capture_default_str();
  cmd->add_option("--infer-sweeps", b.infer_sweeps,
                  "Topic fold-in sweeps per record (without --bundle)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--save-bundle", b.save_dir,
                  "Also write the assembled bundle to this directory");
}

pipeline::Bundle resolve_bundle(const BundleOpts& b, const GlobalOpts& g) {
  std::optional<pipeline::Bundle> bundle;
  if (!b.bundle_dir.empty()) {
    bundle = pipeline::load_bundle(b.bundle_dir);
  } else {
    if (b.lm_file.empty() || b.lda_file.empty() || b.clf_file.empty())
      throw CLI::ValidationError(
          "bundle", "pass --bundle DIR, or all of --lm, --lda and --clf");
    FilterConfig filter_cfg;
    filter_cfg.threshold = b.threshold;
    pipeline::Manifest manifest;
    manifest.seed = g.seed;
    manifest.infer_sweeps = b.infer_sweeps;
    bundle.emplace(load_model<lm::NGramModel>(b.lm_file), filter_cfg,
                   load_model<lda::LdaModel>(b.lda_file),
                   load_model<mlp::MlpModel>(b.clf_file), manifest);
  }
  if (!b.save_dir.empty()) pipeline::save_bundle(*bundle, b.save_dir);
  return std::move(*bundle);
}

// ---------------------------------------------------------------------------
// Report rendering.

json histogram_json(const Histogram& h) {
  json bins = json::array();
  for (const auto& [bin, count] : h.bins)
    bins.push_back({{"lo", static_cast<double>(bin) * h.bin_width},
                    {"count", count}});
  return {{"bin_width", h.bin_width}, {"total", h.total}, {"bins", bins}};
}

json matrix_json(const metrics::ConfusionMatrix& cm) {
  json rows = json::array();
  for (int t = 0; t < kNumClasses; ++t) {
    json row = json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
  }
  return rows;
}

json summary_json(const metrics::Summary& s) {
  json per_class = json::array();
  for (int k = 0; k < kNumClasses; ++k) {
    const auto& c = s.per_class[static_cast<std::size_t>(k)];
    per_class.push_back({{"class", to_string(static_cast<LogClass>(k))},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1}});
  }
  return {{"per_class", per_class},
          {"macro_precision", s.macro_precision},
          {"macro_recall", s.macro_recall},
          {"macro_f1", s.macro_f1},
          {"accuracy", s.accuracy}};
}

void print_matrix(std::ostream& out, const metrics::ConfusionMatrix& cm,
                  const std::string& title) {
  out << title << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-18s", "true \\ predicted");
  out << buf;
  for (int p = 0; p < kNumClasses; ++p) {
    std::snprintf(buf, sizeof(buf), "%12s",
                  to_string(static_cast<LogClass>(p)));
    out << buf;
  }
  out << "\n";
  for (int t = 0; t < kNumClasses; ++t) {
    std::snprintf(buf, sizeof(buf), "%-18s",
                  to_string(static_cast<LogClass>(t)));
    out << buf;
    for (int p = 0; p < kNumClasses; ++p) {
      std::snprintf(buf, sizeof(buf), "%12llu",
                    static_cast<unsigned long long>(cm.at(t, p)));
      out << buf;
    }
    out << "\n";
  }
}

void print_summary(std::ostream& out, const metrics::Summary& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-18s%12s%12s%12s\n", "class", "precision",
                "recall", "f1");
  out << buf;
  for (int k = 0; k < kNumClasses; ++k) {
    const auto& c = s.per_class[static_cast<std::size_t>(k)];
    std::snprintf(buf, sizeof(buf), "%-18s%12.4f%12.4f%12.4f\n",
                  to_string(static_cast<LogClass>(k)), c.precision, c.recall,
                  c.f1);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-18s%12.4f%12.4f%12.4f\n", "macro",
                s.macro_precision, s.macro_recall, s.macro_f1);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-18s%12.4f\n", "accuracy", s.accuracy);
  out << buf;
}

double mbps(double bytes_per_sec) { return bytes_per_sec / 1e6; }

// ---------------------------------------------------------------------------
// Subcommands.

struct GenOpts {
  std::size_t count = 0;
  std::string out;
  std::string templates;
  std::vector<double> mix;
  double label_noise = 0.1;
  double rare_rate = 0.02;
  std::vector<int> frames;
};

void run_gen(const GenOpts& o, const GlobalOpts& g) {
  corpus::SyntheticSpec spec;
  spec.templates = corpus::load_template_dir(
      o.templates.empty() ? corpus::default_template_dir() : o.templates);
  if (!o.mix.empty()) {
    if (o.mix.size() != kNumClasses)
      throw CLI::ValidationError("--mix", "expects exactly three weights");
    for (int k = 0; k < kNumClasses; ++k)
      spec.class_mix[static_cast<std::size_t>(k)] =
          o.mix[static_cast<std::size_t>(k)];
  }
  spec.label_noise = o.label_noise;
  spec.rare_template_rate = o.rare_rate;
  if (!o.frames.empty()) {
    if (o.frames.size() != 2)
      throw CLI::ValidationError("--frames", "expects min,max");
    spec.min_trace_frames = o.frames[0];
    spec.max_trace_frames = o.frames[1];
  }
  spec.seed = g.seed;

  auto records = corpus::generate(spec, o.count);
  std::ofstream file;
  auto& out = open_output(o.out, file);
  corpus::write_jsonl(records, out);
  std::cerr << "generated " << records.size() << " record(s)\n";
}

struct TrainLmOpts {
  std::string input;
  std::string format = "lines";
  std::string out;
  int order = 3;
  std::vector<double> lambdas;
};

void run_train_lm(const TrainLmOpts& o, const GlobalOpts& g) {
  std::ifstream file;
  auto& in = open_input(o.input, file);
  std::size_t malformed = 0, skipped = 0;
  auto records = read_records(in, parse_format(o.format), false, malformed);
  auto seqs = tokenize_all(records, rules_for(g), skipped);
  note_skipped(malformed, skipped);

  auto model = lm::NGramModel::train(seqs, o.order, o.lambdas);
  save_model(model, o.out);
  std::cerr << "trained order-" << o.order << " model on " << seqs.size()
            << " record(s)\n";
}

struct ScoreOpts {
  std::string model;
  std::string input;
  std::string format = "lines";
  std::string out;
};

void run_score(const ScoreOpts& o, const GlobalOpts& g) {
  auto model = load_model<lm::NGramModel>(o.model);
  auto rules = rules_for(g);
  std::ifstream in_file;
  auto& in = open_input(o.input, in_file);
  std::ofstream out_file;
  auto& out = open_output(o.out, out_file);

  tok::RecordReader reader(in, parse_format(o.format));
  std::size_t malformed = 0;
  for (;;) {
    std::optional<RawRecord> rec;
    try {
      rec = reader.next();
    } catch (const RecordParseError&) {
      ++malformed;
      continue;
    }
    if (!rec) break;
    json j;
    j["line_no"] = rec->line_no;
    auto seq = tok::try_tokenize(*rec, rules);
    if (seq)
      j["log2_ppx"] = model.score(*seq).log2_ppx;
    else
      j["error"] = "record normalized to zero tokens";
    out << j.dump() << "\n";
  }
  note_skipped(malformed, 0);
}

struct FilterOpts {
  std::string model;
  std::string input;
  std::string format = "lines";
  double threshold = 11.0;
  double bin_width = 0.25;
  std::string report;
  std::string rejects;
};

void run_filter(const FilterOpts& o, const GlobalOpts& g) {
  auto model = load_model<lm::NGramModel>(o.model);
  FilterConfig cfg;
  cfg.threshold = o.threshold;
  cfg.worker_count = g.workers;
  cfg.histogram_bin_width = o.bin_width;
  cfg.validate();

  std::ifstream in_file;
  auto& in = open_input(o.input, in_file);
  std::size_t malformed = 0;
  auto records = read_records(in, parse_format(o.format), true, malformed);

  FilterReport report;
  auto kept = filter_records(records, model, cfg, rules_for(g), report);
  for (const auto& k : kept) std::cout << k.record.text << "\n";

  if (!o.rejects.empty()) {
    std::ofstream rej(o.rejects, std::ios::binary);
    if (!rej) throw Error("cannot open output file: " + o.rejects);
    std::size_t next_kept = 0;
    for (const auto& r : records) {
      if (next_kept < kept.size() &&
          kept[next_kept].record.line_no == r.line_no) {
        ++next_kept;
        continue;
      }
      rej << r.text << "\n";
    }
  }

  if (!o.report.empty()) {
    json j;
    j["threshold"] = cfg.threshold;
    j["workers"] = report.workers_used;
    j["total_in"] = report.total_in;
    j["kept"] = report.kept;
    j["filtered"] = report.filtered();
    j["failed_tokenize"] = report.failed_tokenize;
    j["malformed_lines"] = malformed;
    j["bytes_processed"] = report.bytes_processed;
    j["wall_time_sec"] = report.wall_time_sec;
    j["bytes_per_sec_per_core"] = report.per_core_throughput();
    json hists;
    for (int k = 0; k < kNumClasses; ++k)
      hists[to_string(static_cast<LogClass>(k))] =
          histogram_json(report.per_label[static_cast<std::size_t>(k)]);
    hists["unlabeled"] = histogram_json(report.unlabeled);
    j["histograms"] = hists;
    std::ofstream rf(o.report, std::ios::binary);
    if (!rf) throw Error("cannot open output file: " + o.report);
    rf << j.dump(2) << "\n";
  }

  note_skipped(malformed, 0);
  std::cerr << "kept " << report.kept << " of " << report.total_in
            << " record(s) at threshold " << cfg.threshold << "\n";
}

struct CalibrateOpts {
  std::string model;
  std::string input;
  std::string format = "lines";
  double keep_fraction = 0.0;
};

void run_calibrate(const CalibrateOpts& o, const GlobalOpts& g) {
  auto model = load_model<lm::NGramModel>(o.model);
  std::ifstream file;
  auto& in = open_input(o.input, file);
  std::size_t malformed = 0, skipped = 0;
  auto records = read_records(in, parse_format(o.format), true, malformed);
  auto seqs = tokenize_all(records, rules_for(g), skipped);
  note_skipped(malformed, skipped);

  std::vector<double> scores;
  scores.reserve(seqs.size());
  for (const auto& seq : seqs) scores.push_back(model.score(seq).log2_ppx);
  double threshold = calibrate_threshold(scores, o.keep_fraction);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", threshold);
  std::cout << buf << "\n";
}

struct TrainLdaOpts {
  std::string input;
  std::string format = "lines";
  std::string out;
  int k = 100;
  int sweeps = 200;
};

void run_train_lda(const TrainLdaOpts& o, const GlobalOpts& g) {
  std::ifstream file;
  auto& in = open_input(o.input, file);
  std::size_t malformed = 0, skipped = 0;
  auto records = read_records(in, parse_format(o.format), false, malformed);
  auto seqs = tokenize_all(records, rules_for(g), skipped);
  note_skipped(malformed, skipped);

  std::vector<std::vector<std::string>> docs;
  docs.reserve(seqs.size());
  for (auto& seq : seqs) docs.push_back(std::move(seq.tokens));

  lda::LdaConfig cfg;
  cfg.topics = o.k;
  cfg.sweeps = o.sweeps;
  cfg.seed = g.seed;
  auto model = lda::LdaModel::train(docs, cfg);
  save_model(model, o.out);
  std::cerr << "trained " << o.k << "-topic model on " << docs.size()
            << " document(s)\n";
}

struct TrainClfOpts {
  std::string lda_file;
  std::string input;
  std::string out;
  std::vector<int> hidden = {64, 64, 64};
  double lr = 0.01;
  int epochs = 50;
  int batch = 32;
  int infer_sweeps = 30;
  bool class_weights = false;
};

void run_train_clf(const TrainClfOpts& o, const GlobalOpts& g) {
  auto lda_model = load_model<lda::LdaModel>(o.lda_file);
  std::ifstream file;
  auto& in = open_input(o.input, file);
  auto labeled = corpus::read_jsonl(in);
  auto rules = rules_for(g);

  std::vector<mlp::Example> examples;
  examples.reserve(labeled.size());
  std::array<std::uint64_t, kNumClasses> counts{};
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& rec = labeled[i];
    auto seq = tok::try_tokenize(corpus::to_raw(rec, i + 1), rules);
    if (!seq) {
      ++skipped;
      continue;
    }
    auto theta = lda_model.infer(
        seq->tokens, o.infer_sweeps,
        mix_seed(g.seed, fnv1a64(rec.text.data(), rec.text.size())));
    examples.push_back(
        {std::move(theta.theta), static_cast<int>(rec.label)});
    ++counts[static_cast<std::size_t>(rec.label)];
  }
  note_skipped(0, skipped);

  mlp::TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.seed = g.seed;
  if (o.class_weights) {
    cfg.class_weights.resize(kNumClasses);
    for (int k = 0; k < kNumClasses; ++k) {
      std::uint64_t c = counts[static_cast<std::size_t>(k)];
      cfg.class_weights[static_cast<std::size_t>(k)] =
          static_cast<double>(examples.size()) /
          (static_cast<double>(kNumClasses) *
           static_cast<double>(c == 0 ? 1 : c));
    }
  }

  std::vector<int> dims;
  dims.push_back(lda_model.topics());
  for (int h : o.hidden) dims.push_back(h);
  dims.push_back(kNumClasses);

  auto model = mlp::MlpModel::train(examples, dims, cfg);
  save_model(model, o.out);
  std::cerr << "trained classifier on " << examples.size()
            << " example(s), class counts " << counts[0] << "/" << counts[1]
            << "/" << counts[2] << "\n";
}

struct ClassifyOpts {
  BundleOpts bundle;
  std::string input;
  std::string format = "lines";
  std::string out;
};

void run_classify(const ClassifyOpts& o, const GlobalOpts& g) {
  auto bundle = resolve_bundle(o.bundle, g);
  auto rules = rules_for(g);
  std::ifstream in_file;
  auto& in = open_input(o.input, in_file);
  std::ofstream out_file;
  auto& out = open_output(o.out, out_file);

  tok::RecordReader reader(in, parse_format(o.format));
  std::size_t malformed = 0;
  for (;;) {
    std::optional<RawRecord> rec;
    try {
      rec = reader.next();
    } catch (const RecordParseError&) {
      ++malformed;
      continue;
    }
    if (!rec) break;
    auto res = pipeline::classify(bundle, *rec, rules);
    json j;
    j["line_no"] = rec->line_no;
    j["kept"] = !res.filtered;
    j["log2_ppx"] = res.log2_ppx;
    if (res.filtered) {
      j["reason"] = res.diagnostic;
    } else {
      j["class"] = to_string(res.predicted);
      j["probs"] = res.probs;
    }
    out << j.dump() << "\n";
  }
  note_skipped(malformed, 0);
}

struct EvalOpts {
  BundleOpts bundle;
  std::string input;
  std::string json_out;
};

void run_eval(const EvalOpts& o, const GlobalOpts& g) {
  auto bundle = resolve_bundle(o.bundle, g);
  std::ifstream file;
  auto& in = open_input(o.input, file);
  auto labeled = corpus::read_jsonl(in);

  auto report = pipeline::evaluate(bundle, labeled, rules_for(g));

  auto& out = std::cout;
  print_matrix(out, report.full,
               "confusion matrix, all records (filtered records count as "
               "predicted " +
                   std::string(to_string(LogClass::kInformation)) + ")");
  out << "\n";
  print_summary(out, report.summary);
  out << "\n";
  print_matrix(out, report.kept_only, "confusion matrix, kept records only");
  out << "\n";
  print_summary(out, report.kept_summary);
  out << "\n";

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "records %llu: kept %llu, filtered %llu\n",
                static_cast<unsigned long long>(report.full.total()),
                static_cast<unsigned long long>(report.kept),
                static_cast<unsigned long long>(report.filtered));
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "stage 1: %.2f MB/s; stage 2: %.2f MB/s; ratio %.1f\n",
                mbps(report.stage1_bytes_per_sec),
                mbps(report.stage2_bytes_per_sec), report.throughput_ratio);
  out << buf;

  json j;
  j["records"] = report.full.total();
  j["kept"] = report.kept;
  j["filtered"] = report.filtered;
  j["input_bytes"] = report.input_bytes;
  j["confusion"] = {{"full", matrix_json(report.full)},
                    {"kept_only", matrix_json(report.kept_only)}};
  j["metrics"] = {{"full", summary_json(report.summary)},
                  {"kept_only", summary_json(report.kept_summary)}};
  j["throughput"] = {{"stage1_bytes_per_sec", report.stage1_bytes_per_sec},
                     {"stage2_bytes_per_sec", report.stage2_bytes_per_sec},
                     {"ratio", report.throughput_ratio},
                     {"stage1_seconds", report.stage1_seconds},
                     {"stage2_seconds", report.stage2_seconds}};
  if (o.json_out.empty() || o.json_out == "-") {
    out << "\n" << j.dump(2) << "\n";
  } else {
    std::ofstream jf(o.json_out, std::ios::binary);
    if (!jf) throw Error("cannot open output file: " + o.json_out);
    jf << j.dump(2) << "\n";
  }
}

struct BenchOpts {
  BundleOpts bundle;
  std::string input;
  std::string format = "lines";
  std::string json_out;
};

void run_bench(const BenchOpts& o, const GlobalOpts& g) {
  auto bundle = resolve_bundle(o.bundle, g);
  std::ifstream file;
  auto& in = open_input(o.input, file);
  std::size_t malformed = 0;
  auto records = read_records(in, parse_format(o.format), true, malformed);
  note_skipped(malformed, 0);

  auto report = pipeline::bench(bundle, records, g.workers, rules_for(g));
  if (!report.warning.empty())
    std::cerr << "warning: " << report.warning << "\n";

  char buf[200];
  std::snprintf(buf, sizeof(buf), "records %llu, bytes %llu, kept %llu\n",
                static_cast<unsigned long long>(report.records),
                static_cast<unsigned long long>(report.bytes),
                static_cast<unsigned long long>(report.kept));
  std::cout << buf;
  std::snprintf(buf, sizeof(buf),
                "stage 1: %.2f MB/s/core across %d worker(s)\n",
                mbps(report.stage1_bytes_per_sec_core), report.workers);
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "stage 2: %.3f MB/s/core\n",
                mbps(report.stage2_bytes_per_sec_core));
  std::cout << buf;
  std::snprintf(buf, sizeof(buf), "stage-1/stage-2 ratio: %.1f\n",
                report.ratio);
  std::cout << buf;

  if (!o.json_out.empty()) {
    json j;
    j["records"] = report.records;
    j["bytes"] = report.bytes;
    j["kept"] = report.kept;
    j["workers"] = report.workers;
    j["stage1_seconds"] = report.stage1_seconds;
    j["stage2_seconds"] = report.stage2_seconds;
    j["stage1_bytes_per_sec_core"] = report.stage1_bytes_per_sec_core;
    j["stage2_bytes_per_sec_core"] = report.stage2_bytes_per_sec_core;
    j["ratio"] = report.ratio;
    if (!report.warning.empty()) j["warning"] = report.warning;
    std::ofstream jf(o.json_out, std::ios::binary);
    if (!jf) throw Error("cannot open output file: " + o.json_out);
    jf << j.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "logsieve — two-stage log triage: an n-gram perplexity filter in "
      "front of a topic-space classifier"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML-style key/value configuration file; sections name "
                 "subcommands");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Seed for every random choice")
      ->capture_default_str();
  app.add_option("--workers", g.workers, "Parallel scoring lanes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--rules", g.rules_file,
                 "Normalization rule file overriding the built-in "
                 "placeholder patterns");

  auto gen_opts = std::make_shared<GenOpts>();
  auto* gen = app.add_subcommand("gen", "Generate a labeled synthetic corpus");
  gen->fallthrough();
  gen->add_option("--count", gen_opts->count, "Records to generate")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_opts->out, "Output jsonl file (default stdout)");
  gen->add_option("--templates", gen_opts->templates,
                  "Template directory (normal.txt, operation.txt, "
                  "system.txt)");
  gen->add_option("--mix", gen_opts->mix,
                  "Class mix weights: normal,operation,system")
      ->delimiter(',');
  gen->add_option("--label-noise", gen_opts->label_noise,
                  "Probability a record carries a wrong preset label")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--rare-rate", gen_opts->rare_rate,
                  "Rate of rare reference salting on normal records")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--frames", gen_opts->frames,
                  "Stack-trace frame range for system errors: min,max")
      ->delimiter(',');
  gen->callback([gen_opts, &g] { run_gen(*gen_opts, g); });

  auto train_lm_opts = std::make_shared<TrainLmOpts>();
  auto* train_lm =
      app.add_subcommand("train-lm", "Train the n-gram language model");
  train_lm->fallthrough();
  train_lm->add_option("--input", train_lm_opts->input,
                       "Training records (default stdin)");
  add_format_option(train_lm, train_lm_opts->format);
  train_lm->add_option("--order", train_lm_opts->order, "Maximum n-gram order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_lm
      ->add_option("--lambdas", train_lm_opts->lambdas,
                   "Interpolation weights, unigram first, one per order; "
                   "must sum to 1")
      ->delimiter(',');
  train_lm->add_option("--out", train_lm_opts->out, "Model output file")
      ->required();
  train_lm->callback([train_lm_opts, &g] { run_train_lm(*train_lm_opts, g); });

  auto score_opts = std::make_shared<ScoreOpts>();
  auto* score = app.add_subcommand(
      "score", "Score records against a language model (jsonl out)");
  score->fallthrough();
  score->add_option("--model", score_opts->model, "Language model file")
      ->required();
  score->add_option("--input", score_opts->input, "Records (default stdin)");
  add_format_option(score, score_opts->format);
  score->add_option("--out", score_opts->out, "Output file (default stdout)");
  score->callback([score_opts, &g] { run_score(*score_opts, g); });

  auto filter_opts = std::make_shared<FilterOpts>();
  auto* filter = app.add_subcommand(
      "filter", "Keep records at or above the perplexity threshold");
  filter->fallthrough();
  filter->add_option("--model", filter_opts->model, "Language model file")
      ->required();
  filter->add_option("--input", filter_opts->input, "Records (default stdin)");
  add_format_option(filter, filter_opts->format);
  filter
      ->add_option("--threshold", filter_opts->threshold,
                   "log2-perplexity cutoff")
      ->capture_default_str();
  filter
      ->add_option("--bin-width", filter_opts->bin_width,
                   "Score histogram bin width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  filter->add_option("--report", filter_opts->report,
                     "Write a machine-readable run report here");
  filter->add_option("--rejects", filter_opts->rejects,
                     "Write filtered-out record texts here");
  filter->callback([filter_opts, &g] { run_filter(*filter_opts, g); });

  auto calibrate_opts = std::make_shared<CalibrateOpts>();
  auto* calibrate = app.add_subcommand(
      "calibrate",
      "Choose the threshold that keeps a target fraction of records");
  calibrate->fallthrough();
  calibrate
      ->add_option("--model", calibrate_opts->model, "Language model file")
      ->required();
  calibrate->add_option("--input", calibrate_opts->input,
                        "Records (default stdin)");
  add_format_option(calibrate, calibrate_opts->format);
  calibrate
      ->add_option("--keep-fraction", calibrate_opts->keep_fraction,
                   "Fraction of records the threshold should keep")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  calibrate->callback(
      [calibrate_opts, &g] { run_calibrate(*calibrate_opts, g); });

  auto train_lda_opts = std::make_shared<TrainLdaOpts>();
  auto* train_lda = app.add_subcommand("train-lda", "Train the topic model");
  train_lda->fallthrough();
  train_lda->add_option("--input", train_lda_opts->input,
                        "Training records (default stdin)");
  add_format_option(train_lda, train_lda_opts->format);
  train_lda->add_option("--k", train_lda_opts->k, "Topic count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_lda->add_option("--sweeps", train_lda_opts->sweeps, "Gibbs sweeps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_lda->add_option("--out", train_lda_opts->out, "Model output file")
      ->required();
  train_lda->callback(
      [train_lda_opts, &g] { run_train_lda(*train_lda_opts, g); });

  auto train_clf_opts = std::make_shared<TrainClfOpts>();
  auto* train_clf = app.add_subcommand(
      "train-clf", "Train the classifier on topic-space features");
  train_clf->fallthrough();
  train_clf->add_option("--lda", train_clf_opts->lda_file, "Topic model file")
      ->required();
  train_clf->add_option("--input", train_clf_opts->input,
                        "Labeled jsonl records (default stdin)");
  train_clf->add_option("--out", train_clf_opts->out, "Model output file")
      ->required();
  train_clf
      ->add_option("--hidden", train_clf_opts->hidden,
                   "Hidden layer widths, comma separated")
      ->delimiter(',');
  train_clf->add_option("--lr", train_clf_opts->lr, "Learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_clf->add_option("--epochs", train_clf_opts->epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_clf->add_option("--batch", train_clf_opts->batch, "Minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_clf
      ->add_option("--infer-sweeps", train_clf_opts->infer_sweeps,
                   "Topic fold-in sweeps per record")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_clf->add_flag("--class-weights", train_clf_opts->class_weights,
                      "Weight the loss by inverse class frequency");
  train_clf->callback(
      [train_clf_opts, &g] { run_train_clf(*train_clf_opts, g); });

  auto classify_opts = std::make_shared<ClassifyOpts>();
  auto* classify = app.add_subcommand(
      "classify", "Run the two-stage pipeline over records (jsonl out)");
  classify->fallthrough();
  add_bundle_options(classify, classify_opts->bundle);
  classify->add_option("--input", classify_opts->input,
                       "Records (default stdin)");
  add_format_option(classify, classify_opts->format);
  classify->add_option("--out", classify_opts->out,
                       "Output file (default stdout)");
  classify->callback([classify_opts, &g] { run_classify(*classify_opts, g); });

  auto eval_opts = std::make_shared<EvalOpts>();
  auto* eval = app.add_subcommand(
      "eval", "Evaluate the pipeline against a true-labeled test set");
  eval->fallthrough();
  add_bundle_options(eval, eval_opts->bundle);
  eval->add_option("--input", eval_opts->input,
                   "Labeled jsonl records (default stdin)");
  eval->add_option("--json", eval_opts->json_out,
                   "Write the machine-readable report here instead of "
                   "stdout");
  eval->callback([eval_opts, &g] { run_eval(*eval_opts, g); });

  auto bench_opts = std::make_shared<BenchOpts>();
  auto* bench = app.add_subcommand(
      "bench", "Measure per-stage throughput on a corpus");
  bench->fallthrough();
  add_bundle_options(bench, bench_opts->bundle);
  bench->add_option("--input", bench_opts->input, "Records (default stdin)");
  add_format_option(bench, bench_opts->format);
  bench->add_option("--json", bench_opts->json_out,
                    "Write the machine-readable report here");
  bench->callback([bench_opts, &g] { run_bench(*bench_opts, g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "logsieve: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "logsieve: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
