#include "logsieve/pipeline.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "logsieve/rng.hpp"

namespace logsieve {
namespace pipeline {
namespace {

using nlohmann::json;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t text_seed(std::uint64_t bundle_seed, const std::string& text) {
  return mix_seed(bundle_seed, fnv1a64(text.data(), text.size()));
}

// Seed streams carved out of the training seed; fold-in seeds use the
// record bytes instead so classify depends only on (bundle, text).
constexpr std::uint64_t kLdaStream = 1;
constexpr std::uint64_t kMlpStream = 2;

std::string iso8601_utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("short write to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw BundleIntegrityError("missing or unreadable file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return std::move(buf).str();
}

}  // namespace

void TrainOptions::validate() const {
  if (lm_order < 1) throw Error("lm_order must be at least 1");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw Error("keep_fraction must lie in (0, 1]");
  if (topics < 1) throw Error("topics must be at least 1");
  if (lda_sweeps < 1) throw Error("lda_sweeps must be at least 1");
  if (infer_sweeps < 1) throw Error("infer_sweeps must be at least 1");
  for (int h : hidden)
    if (h < 1) throw Error("hidden layer widths must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (batch_size < 1) throw Error("batch_size must be at least 1");
}

Bundle::Bundle(lm::NGramModel lm_in, FilterConfig filter_in,
               lda::LdaModel lda_in, mlp::MlpModel mlp_in,
               Manifest manifest_in)
    : lm(std::move(lm_in)),
      filter(std::move(filter_in)),
      lda(std::move(lda_in)),
      mlp(std::move(mlp_in)),
      manifest(std::move(manifest_in)) {
  filter.validate();
  validate();
}

void Bundle::validate() const {
  if (lda.topics() != mlp.input_dim())
    throw BundleConsistencyError(
        "LDA topic count " + std::to_string(lda.topics()) +
        " does not match classifier input width " +
        std::to_string(mlp.input_dim()));
  if (mlp.output_dim() != kNumClasses)
    throw BundleConsistencyError(
        "classifier emits " + std::to_string(mlp.output_dim()) +
        " scores, expected one per class (" + std::to_string(kNumClasses) +
        ")");
}

Bundle train_bundle(const std::vector<corpus::LabeledRecord>& train,
                    const TrainOptions& opts,
                    const tok::NormalizationRules& rules) {
  opts.validate();
  if (train.empty()) throw TrainingDataEmptyError();

  // Normalize once; records that tokenize to nothing are dropped here and
  // only counted.
  std::vector<TokenSequence> seqs;
  std::vector<std::size_t> origin;  // index back into train
  seqs.reserve(train.size());
  origin.reserve(train.size());
  std::uint64_t dropped = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto seq = tok::try_tokenize(corpus::to_raw(train[i], i + 1), rules);
    if (!seq) {
      ++dropped;
      continue;
    }
    seqs.push_back(std::move(*seq));
    origin.push_back(i);
  }
  if (seqs.size() < 2) throw TrainingDataEmptyError();

  // Cross-fitted stage-1 scores: each half is scored by the model trained
  // on the other half, so memorized n-grams cannot flatten the calibration
  // distribution.
  std::vector<TokenSequence> even_half, odd_half;
  for (std::size_t i = 0; i < seqs.size(); ++i)
    (i % 2 == 0 ? even_half : odd_half).push_back(seqs[i]);
  auto lm_even = lm::NGramModel::train(even_half, opts.lm_order,
                                       opts.lm_lambdas);
  auto lm_odd = lm::NGramModel::train(odd_half, opts.lm_order,
                                      opts.lm_lambdas);
  std::vector<double> scores(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i)
    scores[i] = (i % 2 == 0 ? lm_odd : lm_even).score(seqs[i]).log2_ppx;

  double threshold = calibrate_threshold(scores, opts.keep_fraction);

  // The deployed scorer sees all the training data.
  auto final_lm = lm::NGramModel::train(seqs, opts.lm_order, opts.lm_lambdas);

  // Stage 2 trains only on what stage 1 would let through; that is the
  // population it will see in service.
  std::vector<std::vector<std::string>> docs;
  std::vector<std::size_t> doc_origin;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (scores[i] >= threshold) {
      docs.push_back(seqs[i].tokens);
      doc_origin.push_back(origin[i]);
    }
  }

  lda::LdaConfig lda_cfg;
  lda_cfg.topics = opts.topics;
  lda_cfg.sweeps = opts.lda_sweeps;
  lda_cfg.seed = mix_seed(opts.seed, kLdaStream);
  auto lda_model = lda::LdaModel::train(docs, lda_cfg);

  // Fold-in features use the same per-record seeding rule classify will
  // use, so training features and serving features match exactly.
  std::vector<mlp::Example> examples;
  examples.reserve(docs.size());
  std::array<std::uint64_t, kNumClasses> class_counts{};
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const corpus::LabeledRecord& rec = train[doc_origin[d]];
    auto theta = lda_model.infer(docs[d], opts.infer_sweeps,
                                 text_seed(opts.seed, rec.text));
    examples.push_back(
        {std::move(theta.theta), static_cast<int>(rec.label)});
    ++class_counts[static_cast<std::size_t>(rec.label)];
  }

  // Inverse-frequency class weights keep the thin system-error band from
  // being drowned out by the majority classes.
  std::vector<double> weights(kNumClasses);
  for (int k = 0; k < kNumClasses; ++k) {
    std::uint64_t c = class_counts[static_cast<std::size_t>(k)];
    weights[static_cast<std::size_t>(k)] =
        static_cast<double>(examples.size()) /
        (static_cast<double>(kNumClasses) *
         static_cast<double>(c == 0 ? 1 : c));
  }

  std::vector<int> dims;
  dims.push_back(opts.topics);
  for (int h : opts.hidden) dims.push_back(h);
  dims.push_back(kNumClasses);

  mlp::TrainConfig mlp_cfg;
  mlp_cfg.learning_rate = opts.learning_rate;
  mlp_cfg.epochs = opts.epochs;
  mlp_cfg.batch_size = opts.batch_size;
  mlp_cfg.seed = mix_seed(opts.seed, kMlpStream);
  mlp_cfg.class_weights = std::move(weights);
  auto clf = mlp::MlpModel::train(examples, dims, mlp_cfg);

  FilterConfig filter_cfg;
  filter_cfg.threshold = threshold;

  Manifest manifest;
  manifest.seed = opts.seed;
  manifest.infer_sweeps = opts.infer_sweeps;
  manifest.keep_fraction = opts.keep_fraction;
  manifest.dropped_records = dropped;

  return Bundle(std::move(final_lm), filter_cfg, std::move(lda_model),
                std::move(clf), std::move(manifest));
}

ClassifyResult classify(const Bundle& bundle, const RawRecord& record,
                        const tok::NormalizationRules& rules) {
  ClassifyResult result;
  auto seq = tok::try_tokenize(record, rules);
  if (!seq) {
    result.filtered = true;
    result.diagnostic = "record normalized to zero tokens";
    return result;
  }

  result.log2_ppx = bundle.lm.score(*seq).log2_ppx;
  if (result.log2_ppx < bundle.filter.threshold) {
    result.filtered = true;
    result.diagnostic = "below perplexity threshold";
    return result;
  }

  auto theta = bundle.lda.infer(seq->tokens, bundle.manifest.infer_sweeps,
                                text_seed(bundle.manifest.seed, record.text));
  result.probs = bundle.mlp.forward(theta.theta);
  result.predicted = static_cast<LogClass>(mlp::argmax(result.probs));
  return result;
}

EvalReport evaluate(const Bundle& bundle,
                    const std::vector<corpus::LabeledRecord>& test,
                    const tok::NormalizationRules& rules) {
  if (test.empty()) throw EvalDataEmptyError();

  EvalReport report;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const corpus::LabeledRecord& rec = test[i];
    report.input_bytes += rec.text.size();
    RawRecord raw = corpus::to_raw(rec, i + 1);

    auto t1 = Clock::now();
    auto seq = tok::try_tokenize(raw, rules);
    double score = 0.0;
    bool kept = false;
    if (seq) {
      score = bundle.lm.score(*seq).log2_ppx;
      kept = score >= bundle.filter.threshold;
    }
    report.stage1_seconds += seconds_since(t1);

    LogClass predicted = LogClass::kInformation;  // the filtered verdict
    if (kept) {
      auto t2 = Clock::now();
      auto theta = bundle.lda.infer(seq->tokens, bundle.manifest.infer_sweeps,
                                    text_seed(bundle.manifest.seed, rec.text));
      auto probs = bundle.mlp.forward(theta.theta);
      report.stage2_seconds += seconds_since(t2);
      predicted = static_cast<LogClass>(mlp::argmax(probs));
      ++report.kept;
      report.kept_only.add(rec.label, predicted);
    } else {
      ++report.filtered;
    }
    report.full.add(rec.label, predicted);
  }

  report.summary = metrics::summarize(report.full);
  report.kept_summary = metrics::summarize(report.kept_only);
  // Both stages are normalized by the original corpus bytes so the ratio
  // reflects what each stage costs per byte of incoming log data.
  if (report.stage1_seconds > 0.0)
    report.stage1_bytes_per_sec =
        static_cast<double>(report.input_bytes) / report.stage1_seconds;
  if (report.stage2_seconds > 0.0)
    report.stage2_bytes_per_sec =
        static_cast<double>(report.input_bytes) / report.stage2_seconds;
  if (report.stage2_bytes_per_sec > 0.0)
    report.throughput_ratio =
        report.stage1_bytes_per_sec / report.stage2_bytes_per_sec;
  return report;
}

BenchReport bench(const Bundle& bundle, const std::vector<RawRecord>& records,
                  int workers, const tok::NormalizationRules& rules) {
  BenchReport report;
  report.records = records.size();
  for (const RawRecord& r : records) report.bytes += r.text.size();
  if (report.bytes == 0)
    throw BenchDataTooSmallError("empty corpus: nothing to measure");
  if (report.bytes < 10ull * 1024 * 1024)
    report.warning =
        "corpus is under 10 MB; throughput numbers may be noisy";

  // Stage 1 as deployed: tokenize + score across the requested workers.
  FilterConfig stage1_cfg = bundle.filter;
  stage1_cfg.worker_count = workers;
  stage1_cfg.validate();
  FilterReport filter_report;
  filter_records(records, bundle.lm, stage1_cfg, rules, filter_report);
  report.kept = filter_report.kept;
  report.workers = filter_report.workers_used;
  report.stage1_seconds = filter_report.wall_time_sec;
  if (report.stage1_seconds > 0.0)
    report.stage1_bytes_per_sec_core =
        static_cast<double>(report.bytes) /
        (report.stage1_seconds * filter_report.workers_used);

  // Stage 2 in isolation: fold-in + classifier over every record, as if
  // the filter were not there, so the ratio answers "what does stage 1
  // save". Tokenization is attributed to stage 1; only the embedding and
  // the classifier are timed here.
  for (const RawRecord& r : records) {
    auto seq = tok::try_tokenize(r, rules);
    if (!seq) continue;
    auto t = Clock::now();
    auto theta = bundle.lda.infer(seq->tokens, bundle.manifest.infer_sweeps,
                                  text_seed(bundle.manifest.seed, r.text));
    auto probs = bundle.mlp.forward(theta.theta);
    report.stage2_seconds += seconds_since(t);
    (void)probs;
  }
  if (report.stage2_seconds > 0.0)
    report.stage2_bytes_per_sec_core =
        static_cast<double>(report.bytes) / report.stage2_seconds;
  if (report.stage2_bytes_per_sec_core > 0.0)
    report.ratio =
        report.stage1_bytes_per_sec_core / report.stage2_bytes_per_sec_core;
  return report;
}

void save_bundle(const Bundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);

  const std::array<std::string, 3> names = {"lm.bin", "lda.bin", "mlp.bin"};
  std::array<std::string, 3> blobs;
  {
    std::ostringstream os(std::ios::binary);
    bundle.lm.save(os);
    blobs[0] = std::move(os).str();
  }
  {
    std::ostringstream os(std::ios::binary);
    bundle.lda.save(os);
    blobs[1] = std::move(os).str();
  }
  {
    std::ostringstream os(std::ios::binary);
    bundle.mlp.save(os);
    blobs[2] = std::move(os).str();
  }

  json models;
  for (std::size_t i = 0; i < names.size(); ++i) {
    write_file(dir + "/" + names[i], blobs[i]);
    models[names[i]] = hex64(fnv1a64(blobs[i].data(), blobs[i].size()));
  }

  json j;
  j["format_version"] = bundle.manifest.format_version;
  j["seed"] = bundle.manifest.seed;
  j["infer_sweeps"] = bundle.manifest.infer_sweeps;
  j["keep_fraction"] = bundle.manifest.keep_fraction;
  j["threshold"] = bundle.filter.threshold;
  j["dropped_records"] = bundle.manifest.dropped_records;
  j["created"] = iso8601_utc_now();
  j["models"] = models;
  write_file(dir + "/manifest.json", j.dump(2) + "\n");
}

Bundle load_bundle(const std::string& dir) {
  json j = json::parse(read_file(dir + "/manifest.json"), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw BundleIntegrityError("manifest.json is not valid json");
  if (!j.contains("format_version") || !j["format_version"].is_number() ||
      j["format_version"].get<int>() != 1)
    throw BundleIntegrityError("unsupported bundle format version");
  if (!j.contains("models") || !j["models"].is_object() ||
      !j.contains("threshold") || !j["threshold"].is_number())
    throw BundleIntegrityError("manifest.json is missing required fields");

  const std::array<std::string, 3> names = {"lm.bin", "lda.bin", "mlp.bin"};
  std::array<std::string, 3> blobs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!j["models"].contains(names[i]) || !j["models"][names[i]].is_string())
      throw BundleIntegrityError("manifest lists no digest for " + names[i]);
    blobs[i] = read_file(dir + "/" + names[i]);
    std::string want = j["models"][names[i]].get<std::string>();
    std::string got = hex64(fnv1a64(blobs[i].data(), blobs[i].size()));
    if (want != got)
      throw BundleIntegrityError(names[i] +
                                 " does not match its manifest digest");
  }

  std::istringstream lm_is(blobs[0], std::ios::binary);
  auto lm_model = lm::NGramModel::load(lm_is);
  std::istringstream lda_is(blobs[1], std::ios::binary);
  auto lda_model = lda::LdaModel::load(lda_is);
  std::istringstream mlp_is(blobs[2], std::ios::binary);
  auto mlp_model = mlp::MlpModel::load(mlp_is);

  FilterConfig filter_cfg;
  filter_cfg.threshold = j["threshold"].get<double>();

  Manifest manifest;
  manifest.format_version = 1;
  if (j.contains("seed") && j["seed"].is_number())
    manifest.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("infer_sweeps") && j["infer_sweeps"].is_number())
    manifest.infer_sweeps = j["infer_sweeps"].get<int>();
  if (j.contains("keep_fraction") && j["keep_fraction"].is_number())
    manifest.keep_fraction = j["keep_fraction"].get<double>();
  if (j.contains("dropped_records") && j["dropped_records"].is_number())
    manifest.dropped_records = j["dropped_records"].get<std::uint64_t>();
  if (j.contains("created") && j["created"].is_string())
    manifest.created = j["created"].get<std::string>();

  return Bundle(std::move(lm_model), filter_cfg, std::move(lda_model),
                std::move(mlp_model), std::move(manifest));
}

}  // namespace pipeline
}  // namespace logsieve
