#ifndef LOGSIEVE_NGRAM_HPP
#define LOGSIEVE_NGRAM_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "logsieve/tokenizer.hpp"
#include "logsieve/vocab.hpp"

namespace logsieve {

// A record together with its base-2 log perplexity. Always >= 0 and
// finite; smoothing keeps every conditional probability positive.
struct ScoredRecord {
  std::size_t record_line_no = 0;
  double log2_ppx = 0.0;
};

namespace lm {

// Open-addressed hash table from fixed-width id tuples to counts.
// Linear probing over a power-of-two capacity; a zero count marks an
// empty slot (stored counts are always >= 1).
class GramTable {
 public:
  explicit GramTable(std::uint32_t width);

  void add(const TokenId* ids, std::uint64_t delta);
  std::uint64_t get(const TokenId* ids) const;

  std::uint32_t width() const { return width_; }
  std::size_t size() const { return entries_; }
  std::uint64_t total() const { return total_; }

  // Visits every entry; order is probe order, callers needing a stable
  // order sort on the key tuple.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t slot = 0; slot < counts_.size(); ++slot)
      if (counts_[slot] != 0) fn(&keys_[slot * width_], counts_[slot]);
  }

 private:
  std::size_t find_slot(const TokenId* ids) const;
  void grow();

  std::uint32_t width_;
  std::size_t entries_ = 0;
  std::uint64_t total_ = 0;
  std::vector<TokenId> keys_;
  std::vector<std::uint64_t> counts_;
};

// Interpolation weights, one per order 1..n (ascending). The built-in
// default mirrors (top-first) 0.8 / 0.15 / 0.05 at order 3.
std::vector<double> default_lambdas(int order);

// Count-based order-n language model with fixed-weight interpolation
// smoothing and an add-one unigram floor. Immutable once trained; safe to
// share across threads.
class NGramModel {
 public:
  // Empty model over a given vocabulary; used by load() and by tests that
  // need exact synthetic count tables.
  NGramModel(int order, Vocabulary vocab, std::vector<double> lambdas_asc);

  static NGramModel train(const std::vector<TokenSequence>& corpus, int order,
                          std::vector<double> lambdas_asc = {});

  int order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }
  // lambda for order k, 1-based.
  double lambda(int k) const { return lambdas_[static_cast<std::size_t>(k - 1)]; }
  const std::vector<double>& lambdas() const { return lambdas_; }
  std::uint64_t total_positions() const { return total_positions_; }

  // Raw count of a k-gram (ids.size() == k) and of a (k-1)-context of
  // order k. Exposed for tests and diagnostics.
  std::uint64_t gram_count(std::span<const TokenId> ids) const;
  std::uint64_t context_total(int k, std::span<const TokenId> ctx) const;
  std::uint64_t unigram_count(TokenId w) const;

  // Interpolated P(w | context); context holds the last order-1 ids.
  // Orders whose context was never seen contribute nothing and their
  // weight is dropped from the mix, so the result is a proper
  // distribution over the vocabulary for any context.
  double conditional_prob(std::span<const TokenId> context, TokenId w) const;

  // Base-2 log perplexity over the content tokens plus </s>. OOV tokens
  // are scored as <unk>. Throws EmptyRecordError on an empty sequence.
  ScoredRecord score(const TokenSequence& seq) const;
  double score_ids(std::span<const TokenId> ids) const;

  void save(std::ostream& os) const;
  static NGramModel load(std::istream& is);

  // Training-time accumulation; exposed so tests can build exact tables.
  void add_sequence(std::span<const TokenId> content_ids);

 private:
  int order_;
  Vocabulary vocab_;
  std::vector<double> lambdas_;          // index k-1
  std::vector<std::uint64_t> unigrams_;  // dense, indexed by id
  std::uint64_t total_positions_ = 0;    // N: scored positions seen in training
  std::vector<GramTable> counts_;        // [k-2] -> width-k table, k = 2..n
  std::vector<GramTable> totals_;        // [k-2] -> width-(k-1) context totals
};

}  // namespace lm
}  // namespace logsieve

#endif  // LOGSIEVE_NGRAM_HPP
