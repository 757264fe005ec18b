#ifndef LOGSIEVE_LDA_HPP
#define LOGSIEVE_LDA_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "logsieve/vocab.hpp"

namespace logsieve {
namespace lda {

// A document as a bag of vocabulary ids; duplicates carry multiplicity.
using Doc = std::vector<TokenId>;

// Per-document topic proportions; entries >= 0 and sum to 1.
struct TopicVector {
  std::vector<double> theta;
};

struct LdaConfig {
  int topics = 100;           // K
  std::vector<double> alpha;  // K entries; empty -> all 1/K
  std::vector<double> beta;   // V entries; empty -> all 1/K
  int sweeps = 200;
  std::uint64_t seed = 0;
};

// Full sampler state, exposed so tests can assert the count invariants
// after every sweep: sum_k doc_topic[m][k] == len(doc m), and
// sum_v topic_word[k][v] == topic_total[k].
struct GibbsState {
  std::vector<std::vector<int>> z;                     // [m][position]
  std::vector<std::vector<std::uint32_t>> doc_topic;   // [m][k]
  std::vector<std::vector<std::uint32_t>> topic_word;  // [k][v]
  std::vector<std::uint64_t> topic_total;              // [k]
};

// Called after each completed sweep (0-based index).
using SweepObserver = std::function<void(int sweep, const GibbsState&)>;

// K-topic model: topic-word rows phi[k] on the simplex, Dirichlet priors
// alpha (doc-topic) and beta (topic-word). Immutable once trained.
class LdaModel {
 public:
  LdaModel(std::vector<double> alpha, std::vector<double> beta,
           Vocabulary vocab, std::vector<std::vector<double>> phi);

  // Collapsed Gibbs sampling: each sweep resamples every token's topic
  // from p(z=k | rest) proportional to
  //   (doc_topic[m][k] + alpha_k) * (topic_word[k][w] + beta_w)
  //                               / (topic_total[k] + sum(beta)).
  // phi is the average of (topic_word + beta) / (topic_total + sum(beta))
  // over every 5th sweep after burn-in (= sweeps/2). Deterministic given
  // cfg.seed.
  static LdaModel train(const std::vector<std::vector<std::string>>& docs,
                        const LdaConfig& cfg);
  static LdaModel train_ids(const std::vector<Doc>& docs, Vocabulary vocab,
                            LdaConfig cfg,
                            const SweepObserver& observer = nullptr);

  // Fold-in: Gibbs over the one document with phi held fixed, weights
  // (doc_topic[k] + alpha_k) * phi[k][w]. theta is the average of
  // (doc_topic[k] + alpha_k) / (len + sum(alpha)) over every 5th
  // post-burn-in sweep. Tokens outside the vocabulary are skipped; a doc
  // that ends up empty returns the normalized prior alpha / sum(alpha).
  TopicVector infer(const std::vector<std::string>& tokens, int sweeps,
                    std::uint64_t seed) const;
  TopicVector infer_ids(const Doc& doc, int sweeps, std::uint64_t seed) const;

  int topics() const { return static_cast<int>(alpha_.size()); }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<double>& beta() const { return beta_; }
  const std::vector<std::vector<double>>& phi() const { return phi_; }

  void save(std::ostream& os) const;
  static LdaModel load(std::istream& is);

 private:
  std::vector<double> alpha_;  // K
  std::vector<double> beta_;   // V
  double alpha_sum_ = 0.0;
  double beta_sum_ = 0.0;
  Vocabulary vocab_;
  std::vector<std::vector<double>> phi_;  // K rows of V
};

}  // namespace lda
}  // namespace logsieve

#endif  // LOGSIEVE_LDA_HPP
