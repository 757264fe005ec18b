#include "logsieve/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "logsieve/binio.hpp"
#include "logsieve/errors.hpp"
#include "logsieve/rng.hpp"

namespace logsieve {
namespace lm {

namespace {

inline std::uint64_t hash_ids(const TokenId* ids, std::uint32_t width) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::uint32_t i = 0; i < width; ++i) {
    h ^= ids[i];
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
  }
  return h;
}

constexpr std::size_t kInitialCapacity = 64;
constexpr double kMaxLoad = 0.7;

// Floor applied inside score() so degenerate lambda settings (all weight
// on unsmoothed orders) still yield a finite perplexity.
constexpr double kProbFloor = 1e-300;

}  // namespace

GramTable::GramTable(std::uint32_t width)
    : width_(width),
      keys_(kInitialCapacity * width),
      counts_(kInitialCapacity, 0) {}

std::size_t GramTable::find_slot(const TokenId* ids) const {
  const std::size_t mask = counts_.size() - 1;
  std::size_t slot = hash_ids(ids, width_) & mask;
  while (counts_[slot] != 0 &&
         std::memcmp(&keys_[slot * width_], ids, width_ * sizeof(TokenId)) != 0)
    slot = (slot + 1) & mask;
  return slot;
}

void GramTable::grow() {
  std::vector<TokenId> old_keys = std::move(keys_);
  std::vector<std::uint64_t> old_counts = std::move(counts_);
  keys_.assign(old_counts.size() * 2 * width_, 0);
  counts_.assign(old_counts.size() * 2, 0);
  const std::size_t mask = counts_.size() - 1;
  for (std::size_t slot = 0; slot < old_counts.size(); ++slot) {
    if (old_counts[slot] == 0) continue;
    const TokenId* ids = &old_keys[slot * width_];
    std::size_t pos = hash_ids(ids, width_) & mask;
    while (counts_[pos] != 0) pos = (pos + 1) & mask;
    std::memcpy(&keys_[pos * width_], ids, width_ * sizeof(TokenId));
    counts_[pos] = old_counts[slot];
  }
}

void GramTable::add(const TokenId* ids, std::uint64_t delta) {
  if (static_cast<double>(entries_ + 1) >
      kMaxLoad * static_cast<double>(counts_.size()))
    grow();
  std::size_t slot = find_slot(ids);
  if (counts_[slot] == 0) {
    std::memcpy(&keys_[slot * width_], ids, width_ * sizeof(TokenId));
    ++entries_;
  }
  counts_[slot] += delta;
  total_ += delta;
}

std::uint64_t GramTable::get(const TokenId* ids) const {
  return counts_[find_slot(ids)];
}

std::vector<double> default_lambdas(int order) {
  if (order <= 1) return {1.0};
  if (order == 2) return {0.2, 0.8};
  if (order == 3) return {0.05, 0.15, 0.8};
  // Higher orders: 0.8 and 0.15 top-first, then a 0.3-decaying tail; the
  // lowest order takes the remainder so the weights sum to 1.
  std::vector<double> top_first;
  double acc = 0.0, w = 0.8;
  for (int i = 0; i + 1 < order; ++i) {
    top_first.push_back(w);
    acc += w;
    w = (i == 0) ? 0.15 : w * 0.3;
  }
  top_first.push_back(1.0 - acc);
  return {top_first.rbegin(), top_first.rend()};  // ascending by order
}

NGramModel::NGramModel(int order, Vocabulary vocab,
                       std::vector<double> lambdas_asc)
    : order_(order), vocab_(std::move(vocab)), lambdas_(std::move(lambdas_asc)) {
  if (order_ < 1 || order_ > 15)
    throw Error("n-gram order must be in [1, 15]");
  if (lambdas_.empty()) lambdas_ = default_lambdas(order_);
  if (static_cast<int>(lambdas_.size()) != order_)
    throw Error("need one interpolation weight per order");
  double sum = std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("interpolation weights must sum to 1");
  for (double l : lambdas_)
    if (l < 0.0) throw Error("interpolation weights must be >= 0");
  unigrams_.assign(vocab_.size(), 0);
  for (int k = 2; k <= order_; ++k) {
    counts_.emplace_back(static_cast<std::uint32_t>(k));
    totals_.emplace_back(static_cast<std::uint32_t>(k - 1));
  }
}

void NGramModel::add_sequence(std::span<const TokenId> content_ids) {
  const int n = order_;
  // Sliding window: win[0..n-2] is the context, win[n-1] the target, so
  // the order-k gram is the contiguous suffix starting at n-k.
  std::vector<TokenId> win(static_cast<std::size_t>(n), Vocabulary::kBos);
  const std::size_t len = content_ids.size();
  for (std::size_t t = 0; t <= len; ++t) {
    const TokenId w = (t < len) ? content_ids[t] : Vocabulary::kEos;
    if (w >= unigrams_.size()) throw Error("token id outside vocabulary");
    win[static_cast<std::size_t>(n - 1)] = w;
    ++unigrams_[w];
    ++total_positions_;
    for (int k = 2; k <= n; ++k) {
      const TokenId* gram = &win[static_cast<std::size_t>(n - k)];
      counts_[static_cast<std::size_t>(k - 2)].add(gram, 1);
      totals_[static_cast<std::size_t>(k - 2)].add(gram, 1);  // width k-1
    }
    if (n > 1)
      std::memmove(win.data(), win.data() + 1,
                   static_cast<std::size_t>(n - 1) * sizeof(TokenId));
  }
}

NGramModel NGramModel::train(const std::vector<TokenSequence>& corpus,
                             int order, std::vector<double> lambdas_asc) {
  if (corpus.empty()) throw TrainingDataEmptyError();
  Vocabulary vocab;
  std::vector<std::vector<TokenId>> id_seqs;
  id_seqs.reserve(corpus.size());
  for (const auto& seq : corpus) {
    std::vector<TokenId> ids;
    ids.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens) ids.push_back(vocab.intern(t));
    id_seqs.push_back(std::move(ids));
  }
  NGramModel model(order, std::move(vocab), std::move(lambdas_asc));
  for (const auto& ids : id_seqs) model.add_sequence(ids);
  return model;
}

std::uint64_t NGramModel::gram_count(std::span<const TokenId> ids) const {
  const int k = static_cast<int>(ids.size());
  if (k < 1 || k > order_) throw Error("gram width out of range");
  if (k == 1) return unigram_count(ids[0]);
  return counts_[static_cast<std::size_t>(k - 2)].get(ids.data());
}

std::uint64_t NGramModel::context_total(int k,
                                        std::span<const TokenId> ctx) const {
  if (k < 1 || k > order_) throw Error("order out of range");
  if (k == 1) return total_positions_;
  if (ctx.size() != static_cast<std::size_t>(k - 1))
    throw Error("context width mismatch");
  return totals_[static_cast<std::size_t>(k - 2)].get(ctx.data());
}

std::uint64_t NGramModel::unigram_count(TokenId w) const {
  return w < unigrams_.size() ? unigrams_[w] : 0;
}

double NGramModel::conditional_prob(std::span<const TokenId> context,
                                    TokenId w) const {
  if (context.size() != static_cast<std::size_t>(order_ - 1))
    throw Error("context must hold order-1 ids");
  // Highest order first; each order k reads the contiguous suffix of the
  // context plus w. Unseen contexts drop out of the mix entirely so the
  // result stays normalized for arbitrary contexts.
  TokenId gram[16];
  for (std::size_t i = 0; i < context.size(); ++i) gram[i] = context[i];
  gram[context.size()] = w;

  double mixed = 0.0, active_weight = 0.0;
  for (int k = order_; k >= 2; --k) {
    const double lk = lambdas_[static_cast<std::size_t>(k - 1)];
    const TokenId* suffix = gram + (order_ - k);
    const std::uint64_t ctx_total =
        totals_[static_cast<std::size_t>(k - 2)].get(suffix);
    if (ctx_total == 0) continue;
    const std::uint64_t c = counts_[static_cast<std::size_t>(k - 2)].get(suffix);
    mixed += lk * (static_cast<double>(c) / static_cast<double>(ctx_total));
    active_weight += lk;
  }
  // Add-one unigram floor: defined for every context, so its weight is
  // always active.
  const double l1 = lambdas_[0];
  const double p1 =
      (static_cast<double>(unigram_count(w)) + 1.0) /
      (static_cast<double>(total_positions_) + static_cast<double>(vocab_.size()));
  mixed += l1 * p1;
  active_weight += l1;
  if (active_weight <= 0.0) return p1;
  return mixed / active_weight;
}

double NGramModel::score_ids(std::span<const TokenId> ids) const {
  if (ids.empty()) throw EmptyRecordError();
  const int n = order_;
  std::vector<TokenId> ctx(static_cast<std::size_t>(n - 1), Vocabulary::kBos);
  double acc = 0.0;
  const std::size_t len = ids.size();
  for (std::size_t t = 0; t <= len; ++t) {
    const TokenId w = (t < len) ? ids[t] : Vocabulary::kEos;
    const double p = conditional_prob(ctx, w);
    acc += std::log2(p < kProbFloor ? kProbFloor : p);
    if (n > 1) {
      std::memmove(ctx.data(), ctx.data() + 1,
                   static_cast<std::size_t>(n - 2) * sizeof(TokenId));
      ctx[static_cast<std::size_t>(n - 2)] = w;
    }
  }
  return -acc / static_cast<double>(len + 1);
}

ScoredRecord NGramModel::score(const TokenSequence& seq) const {
  if (seq.tokens.empty()) throw EmptyRecordError();
  std::vector<TokenId> ids;
  ids.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) ids.push_back(vocab_.id_or_unk(t));
  return ScoredRecord{seq.record_line_no, score_ids(ids)};
}

namespace {

constexpr char kMagic[4] = {'N', 'G', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

void save_table_sorted(BinWriter& w, const GramTable& table) {
  const std::uint32_t width = table.width();
  std::vector<std::pair<std::vector<TokenId>, std::uint64_t>> entries;
  entries.reserve(table.size());
  table.for_each([&](const TokenId* ids, std::uint64_t count) {
    entries.emplace_back(std::vector<TokenId>(ids, ids + width), count);
  });
  std::sort(entries.begin(), entries.end());
  w.u64(entries.size());
  for (const auto& [ids, count] : entries) {
    for (TokenId id : ids) w.u32(id);
    w.u64(count);
  }
}

void load_table(BinReader& r, GramTable& table, std::size_t vocab_size) {
  const std::uint64_t n = r.u64();
  std::vector<TokenId> ids(table.width());
  for (std::uint64_t e = 0; e < n; ++e) {
    for (auto& id : ids) {
      id = r.u32();
      if (id >= vocab_size) throw ModelFormatError("token id out of range");
    }
    std::uint64_t count = r.u64();
    if (count == 0) throw ModelFormatError("zero count entry");
    table.add(ids.data(), count);
  }
}

}  // namespace

void NGramModel::save(std::ostream& os) const {
  BinWriter w(os);
  w.magic(kMagic, kVersion);
  w.u32(static_cast<std::uint32_t>(order_));
  w.f64s(lambdas_);
  vocab_.save(w);
  w.u64(total_positions_);
  w.u64(unigrams_.size());
  for (std::uint64_t c : unigrams_) w.u64(c);
  for (int k = 2; k <= order_; ++k) {
    save_table_sorted(w, counts_[static_cast<std::size_t>(k - 2)]);
    save_table_sorted(w, totals_[static_cast<std::size_t>(k - 2)]);
  }
  if (!os) throw Error("write failed while saving model");
}

NGramModel NGramModel::load(std::istream& is) {
  BinReader r(is);
  const std::uint32_t version = r.magic(kMagic);
  if (version != kVersion)
    throw ModelFormatError("unsupported NGLM version " + std::to_string(version));
  const std::uint32_t order = r.u32();
  if (order < 1 || order > 15) throw ModelFormatError("implausible order");
  std::vector<double> lambdas = r.f64s();
  if (lambdas.size() != order)
    throw ModelFormatError("weight count does not match order");
  Vocabulary vocab = Vocabulary::load(r);
  const std::size_t vocab_size = vocab.size();
  NGramModel m(static_cast<int>(order), std::move(vocab), std::move(lambdas));
  m.total_positions_ = r.u64();
  const std::uint64_t n_uni = r.u64();
  if (n_uni != vocab_size)
    throw ModelFormatError("unigram block does not match vocabulary");
  m.unigrams_.assign(n_uni, 0);
  std::uint64_t uni_sum = 0;
  for (auto& c : m.unigrams_) {
    c = r.u64();
    uni_sum += c;
  }
  if (uni_sum != m.total_positions_)
    throw ModelFormatError("unigram counts disagree with total positions");
  for (std::uint32_t k = 2; k <= order; ++k) {
    load_table(r, m.counts_[k - 2], vocab_size);
    load_table(r, m.totals_[k - 2], vocab_size);
    if (m.counts_[k - 2].total() != m.totals_[k - 2].total())
      throw ModelFormatError("count/total tables disagree at order " +
                             std::to_string(k));
  }
  r.expect_eof();
  return m;
}

}  // namespace lm
}  // namespace logsieve
