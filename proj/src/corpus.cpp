#include "logsieve/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "logsieve/rng.hpp"

// Default pool location baked in at build time; the environment variable
// LOGSIEVE_TEMPLATES or an explicit directory argument overrides it.
#ifndef LOGSIEVE_TEMPLATE_DIR
#define LOGSIEVE_TEMPLATE_DIR "assets/templates"
#endif

namespace logsieve {
namespace corpus {
namespace {

using nlohmann::json;

// Small closed pool so <ident> slots stay low-entropy after tokenization.
constexpr const char* kServiceNames[] = {
    "auth",    "gateway",    "billing",  "mailer",    "indexer", "archiver",
    "replica", "frontend",   "backend",  "telemetry", "ingest",  "router",
};
constexpr std::size_t kServiceNameCount =
    sizeof(kServiceNames) / sizeof(kServiceNames[0]);

constexpr char kHexDigits[] = "0123456789abcdef";

std::string rare_ident(Rng& rng) {
  std::size_t len = 5 + rng.next_below(5);
  std::string s;
  s.reserve(len);
  for (std::size_t i = 0; i < len; ++i)
    s.push_back(static_cast<char>('a' + rng.next_below(26)));
  return s;
}

std::string fill_num(Rng& rng) {
  return std::to_string(rng.next_below(1000000));
}

std::string fill_ip(Rng& rng) {
  std::string s = std::to_string(rng.next_below(256));
  for (int i = 0; i < 3; ++i) {
    s.push_back('.');
    s += std::to_string(rng.next_below(256));
  }
  return s;
}

std::string fill_date(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d",
                static_cast<int>(2016 + rng.next_below(10)),
                static_cast<int>(1 + rng.next_below(12)),
                static_cast<int>(1 + rng.next_below(28)));
  return buf;
}

std::string fill_time(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d",
                static_cast<int>(rng.next_below(24)),
                static_cast<int>(rng.next_below(60)),
                static_cast<int>(rng.next_below(60)));
  return buf;
}

std::string fill_hex(Rng& rng) {
  std::string s = "0x";
  for (int i = 0; i < 8; ++i)
    s.push_back(kHexDigits[rng.next_below(16)]);
  return s;
}

std::string fill_rarerun(Rng& rng) {
  std::size_t k = 3 + rng.next_below(3);
  std::string s = rare_ident(rng);
  for (std::size_t i = 1; i < k; ++i) {
    s.push_back(' ');
    s += rare_ident(rng);
  }
  return s;
}

std::string fill_rpath(Rng& rng) {
  std::size_t segs = 2 + rng.next_below(2);
  std::string s = rare_ident(rng);
  for (std::size_t i = 1; i < segs; ++i) {
    s.push_back('.');
    s += rare_ident(rng);
  }
  return s;
}

std::string fill_one(const std::string& name, Rng& rng) {
  if (name == "num") return fill_num(rng);
  if (name == "ip") return fill_ip(rng);
  if (name == "date") return fill_date(rng);
  if (name == "time") return fill_time(rng);
  if (name == "hex") return fill_hex(rng);
  if (name == "ident") return kServiceNames[rng.next_below(kServiceNameCount)];
  if (name == "rare") return rare_ident(rng);
  if (name == "rarerun") return fill_rarerun(rng);
  if (name == "rpath") return fill_rpath(rng);
  throw SpecError("unknown placeholder <" + name + "> in template");
}

bool valid_placeholder_name(const std::string& name) {
  if (name.empty() || name[0] < 'a' || name[0] > 'z') return false;
  for (char c : name)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'))
      return false;
  return true;
}

// Replaces every <name> span left to right; draws happen in text order so
// generation stays byte-reproducible under a fixed seed.
std::string fill_template(const std::string& tpl, Rng& rng) {
  std::string out;
  out.reserve(tpl.size() + 32);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] != '<') {
      out.push_back(tpl[i++]);
      continue;
    }
    std::size_t close = tpl.find('>', i + 1);
    if (close == std::string::npos)
      throw SpecError("unterminated placeholder in template: " + tpl);
    std::string name = tpl.substr(i + 1, close - i - 1);
    if (!valid_placeholder_name(name))
      throw SpecError("bad placeholder <" + name + "> in template: " + tpl);
    out += fill_one(name, rng);
    i = close + 1;
  }
  return out;
}

int draw_class(const std::array<double, kNumClasses>& mix, Rng& rng) {
  double r = rng.next_double();
  double cum = 0.0;
  int last_positive = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    if (mix[static_cast<std::size_t>(k)] <= 0.0) continue;
    cum += mix[static_cast<std::size_t>(k)];
    last_positive = k;
    if (r < cum) return k;
  }
  return last_positive;  // guards the rounding sliver at cum ~ 1.0
}

LogClass flip_label(LogClass truth, Rng& rng) {
  int shift = 1 + static_cast<int>(rng.next_below(2));
  return static_cast<LogClass>((static_cast<int>(truth) + shift) %
                               kNumClasses);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

LogClass parse_class_field(const json& j, const char* field,
                           std::size_t line_no) {
  if (!j.contains(field) || !j[field].is_string())
    throw RecordParseError(line_no,
                           std::string("missing string field \"") + field +
                               "\"");
  auto c = log_class_from_string(j[field].get<std::string>());
  if (!c)
    throw RecordParseError(line_no, std::string("unknown class in \"") +
                                        field + "\": " +
                                        j[field].get<std::string>());
  return *c;
}

}  // namespace

void SyntheticSpec::validate() const {
  double sum = 0.0;
  for (double m : class_mix) {
    if (!(m >= 0.0 && m <= 1.0))
      throw SpecError("class mix entries must lie in [0, 1]");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw SpecError("class mix must sum to 1");
  if (!(label_noise >= 0.0 && label_noise <= 1.0))
    throw SpecError("label noise must lie in [0, 1]");
  if (!(rare_template_rate >= 0.0 && rare_template_rate <= 1.0))
    throw SpecError("rare template rate must lie in [0, 1]");
  if (min_trace_frames < 0 || max_trace_frames < min_trace_frames)
    throw SpecError("trace frame range must satisfy 0 <= min <= max");
}

TemplatePool load_template_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open template pool: " + path);
  TemplatePool pool;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(std::move(line));
    if (!line.empty()) pool.push_back(line);
  }
  return pool;
}

std::array<TemplatePool, kNumClasses> load_template_dir(
    const std::string& dir) {
  std::array<TemplatePool, kNumClasses> pools;
  for (int k = 0; k < kNumClasses; ++k) {
    std::string path =
        dir + "/" + to_string(static_cast<LogClass>(k)) + ".txt";
    pools[static_cast<std::size_t>(k)] = load_template_pool(path);
  }
  return pools;
}

std::string default_template_dir() {
  if (const char* env = std::getenv("LOGSIEVE_TEMPLATES")) return env;
  return LOGSIEVE_TEMPLATE_DIR;
}

std::vector<LabeledRecord> generate(const SyntheticSpec& spec,
                                    std::size_t n_records) {
  spec.validate();
  if (n_records == 0) throw SpecError("n_records must be at least 1");
  for (int k = 0; k < kNumClasses; ++k) {
    if (spec.class_mix[static_cast<std::size_t>(k)] > 0.0 &&
        spec.templates[static_cast<std::size_t>(k)].empty())
      throw SpecError(std::string("empty template pool for class ") +
                      to_string(static_cast<LogClass>(k)));
  }

  Rng rng(spec.seed);
  std::vector<LabeledRecord> records;
  records.reserve(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    int cls = draw_class(spec.class_mix, rng);
    const TemplatePool& pool = spec.templates[static_cast<std::size_t>(cls)];
    std::string tpl = pool[rng.next_below(pool.size())];

    if (cls == static_cast<int>(LogClass::kSystemError)) {
      // Long, once-seen frame wording is what makes these records score
      // deep in the high-perplexity band.
      int span = spec.max_trace_frames - spec.min_trace_frames + 1;
      int frames = spec.min_trace_frames +
                   static_cast<int>(rng.next_below(
                       static_cast<std::uint64_t>(span)));
      for (int f = 0; f < frames; ++f) tpl += " at <rpath> line <num>";
    } else if (cls == static_cast<int>(LogClass::kInformation) &&
               rng.next_double() < spec.rare_template_rate) {
      // A thin slice of routine records carries a rare reference, so the
      // kept side of the filter still sees this class.
      tpl += " ref <rare> <rare>";
    }

    LabeledRecord rec;
    rec.text = fill_template(tpl, rng);
    rec.label = static_cast<LogClass>(cls);
    rec.preset_label = rng.next_double() < spec.label_noise
                           ? flip_label(rec.label, rng)
                           : rec.label;
    records.push_back(std::move(rec));
  }
  return records;
}

void write_jsonl(const std::vector<LabeledRecord>& records,
                 std::ostream& out) {
  for (const LabeledRecord& r : records) {
    json j;
    j["text"] = r.text;
    j["label"] = to_string(r.label);
    j["preset_label"] = to_string(r.preset_label);
    out << j.dump() << '\n';
  }
}

std::vector<LabeledRecord> read_jsonl(std::istream& in) {
  std::vector<LabeledRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw RecordParseError(line_no, "not a json object");
    if (!j.contains("text") || !j["text"].is_string())
      throw RecordParseError(line_no, "missing string field \"text\"");
    LabeledRecord rec;
    rec.text = j["text"].get<std::string>();
    rec.label = parse_class_field(j, "label", line_no);
    rec.preset_label = j.contains("preset_label")
                           ? parse_class_field(j, "preset_label", line_no)
                           : rec.label;
    records.push_back(std::move(rec));
  }
  return records;
}

std::pair<std::vector<LabeledRecord>, std::vector<LabeledRecord>> split(
    std::vector<LabeledRecord> corpus, double train_fraction,
    std::uint64_t seed) {
  if (corpus.size() < 2)
    throw SplitError("need at least 2 records to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw SplitError("train fraction must lie in (0, 1)");

  Rng rng(seed);
  rng.shuffle(corpus);

  std::size_t train_n = static_cast<std::size_t>(
      std::floor(static_cast<double>(corpus.size()) * train_fraction));
  if (train_n == 0) train_n = 1;
  if (train_n >= corpus.size()) train_n = corpus.size() - 1;

  std::vector<LabeledRecord> train(
      std::make_move_iterator(corpus.begin()),
      std::make_move_iterator(corpus.begin() +
                              static_cast<std::ptrdiff_t>(train_n)));
  std::vector<LabeledRecord> test(
      std::make_move_iterator(corpus.begin() +
                              static_cast<std::ptrdiff_t>(train_n)),
      std::make_move_iterator(corpus.end()));
  return {std::move(train), std::move(test)};
}

RawRecord to_raw(const LabeledRecord& r, std::size_t line_no) {
  RawRecord raw;
  raw.line_no = line_no;
  raw.text = r.text;
  raw.preset_label = r.preset_label;
  return raw;
}

std::vector<RawRecord> to_raw_records(const std::vector<LabeledRecord>& rs) {
  std::vector<RawRecord> out;
  out.reserve(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i)
    out.push_back(to_raw(rs[i], i + 1));
  return out;
}

}  // namespace corpus
}  // namespace logsieve
