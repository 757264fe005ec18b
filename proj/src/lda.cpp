#include "logsieve/lda.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "logsieve/binio.hpp"
#include "logsieve/errors.hpp"
#include "logsieve/rng.hpp"

namespace logsieve {
namespace lda {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr int kSampleStride = 5;  // keep every 5th post-burn-in sweep

void check_prior(const std::vector<double>& p, const char* name) {
  if (p.empty()) throw Error(std::string(name) + " prior must be non-empty");
  for (double v : p)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(std::string(name) + " prior entries must be > 0");
}

// Draws one topic index from unnormalized weights; total > 0 because the
// priors are strictly positive.
int sample_index(const std::vector<double>& weights, double total, Rng& rng) {
  double r = rng.next_double() * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    r -= weights[k];
    if (r < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size() - 1);
}

}  // namespace

LdaModel::LdaModel(std::vector<double> alpha, std::vector<double> beta,
                   Vocabulary vocab, std::vector<std::vector<double>> phi)
    : alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      vocab_(std::move(vocab)),
      phi_(std::move(phi)) {
  check_prior(alpha_, "alpha");
  check_prior(beta_, "beta");
  if (beta_.size() != vocab_.size())
    throw Error("beta prior must have one entry per vocabulary word");
  if (phi_.size() != alpha_.size())
    throw Error("phi must have one row per topic");
  for (const auto& row : phi_) {
    if (row.size() != vocab_.size())
      throw Error("phi rows must have one entry per vocabulary word");
    double sum = 0.0;
    for (double v : row) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error("phi entries must be > 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw Error("phi rows must sum to 1");
  }
  alpha_sum_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
  beta_sum_ = std::accumulate(beta_.begin(), beta_.end(), 0.0);
}

LdaModel LdaModel::train(const std::vector<std::vector<std::string>>& docs,
                         const LdaConfig& cfg) {
  Vocabulary vocab;
  std::vector<Doc> id_docs;
  id_docs.reserve(docs.size());
  for (const auto& d : docs) {
    Doc ids;
    ids.reserve(d.size());
    for (const auto& t : d) ids.push_back(vocab.intern(t));
    id_docs.push_back(std::move(ids));
  }
  return train_ids(id_docs, std::move(vocab), cfg);
}

LdaModel LdaModel::train_ids(const std::vector<Doc>& docs, Vocabulary vocab,
                             LdaConfig cfg, const SweepObserver& observer) {
  if (docs.empty()) throw TrainingDataEmptyError();
  std::size_t total_tokens = 0;
  for (const auto& d : docs) total_tokens += d.size();
  if (total_tokens == 0) throw TrainingDataEmptyError();
  const int K = cfg.topics;
  if (K < 1) throw Error("topic count must be >= 1");
  if (cfg.sweeps < 1) throw Error("sweep count must be >= 1");

  const std::size_t V = vocab.size();
  std::vector<double> alpha = cfg.alpha.empty()
                                  ? std::vector<double>(K, 1.0 / K)
                                  : cfg.alpha;
  std::vector<double> beta =
      cfg.beta.empty() ? std::vector<double>(V, 1.0 / K) : cfg.beta;
  check_prior(alpha, "alpha");
  check_prior(beta, "beta");
  if (alpha.size() != static_cast<std::size_t>(K))
    throw Error("alpha prior must have K entries");
  if (beta.size() != V)
    throw Error("beta prior must have one entry per vocabulary word");
  const double beta_sum = std::accumulate(beta.begin(), beta.end(), 0.0);
  for (const auto& d : docs)
    for (TokenId w : d)
      if (w >= V) throw Error("document token id outside vocabulary");

  const std::size_t M = docs.size();
  GibbsState st;
  st.z.resize(M);
  st.doc_topic.assign(M, std::vector<std::uint32_t>(K, 0));
  st.topic_word.assign(K, std::vector<std::uint32_t>(V, 0));
  st.topic_total.assign(K, 0);

  Rng rng(cfg.seed);
  for (std::size_t m = 0; m < M; ++m) {
    st.z[m].resize(docs[m].size());
    for (std::size_t i = 0; i < docs[m].size(); ++i) {
      const int k = static_cast<int>(rng.next_below(K));
      st.z[m][i] = k;
      ++st.doc_topic[m][k];
      ++st.topic_word[k][docs[m][i]];
      ++st.topic_total[k];
    }
  }

  std::vector<double> weights(K);
  std::vector<std::vector<double>> phi_sum(K, std::vector<double>(V, 0.0));
  int samples = 0;
  const int burn_in = cfg.sweeps / 2;

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    for (std::size_t m = 0; m < M; ++m) {
      const Doc& doc = docs[m];
      auto& dt = st.doc_topic[m];
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const TokenId w = doc[i];
        const int old_k = st.z[m][i];
        --dt[old_k];
        --st.topic_word[old_k][w];
        --st.topic_total[old_k];

        double total = 0.0;
        for (int k = 0; k < K; ++k) {
          const double wt = (dt[k] + alpha[k]) *
                            (st.topic_word[k][w] + beta[w]) /
                            (static_cast<double>(st.topic_total[k]) + beta_sum);
          weights[k] = wt;
          total += wt;
        }
        const int new_k = sample_index(weights, total, rng);
        st.z[m][i] = new_k;
        ++dt[new_k];
        ++st.topic_word[new_k][w];
        ++st.topic_total[new_k];
      }
    }
    if (observer) observer(sweep, st);
    if (sweep >= burn_in && (sweep - burn_in) % kSampleStride == 0) {
      for (int k = 0; k < K; ++k) {
        const double denom = static_cast<double>(st.topic_total[k]) + beta_sum;
        for (std::size_t v = 0; v < V; ++v)
          phi_sum[k][v] += (st.topic_word[k][v] + beta[v]) / denom;
      }
      ++samples;
    }
  }

  std::vector<std::vector<double>> phi(K, std::vector<double>(V));
  for (int k = 0; k < K; ++k)
    for (std::size_t v = 0; v < V; ++v)
      phi[k][v] = phi_sum[k][v] / samples;
  return LdaModel(std::move(alpha), std::move(beta), std::move(vocab),
                  std::move(phi));
}

TopicVector LdaModel::infer(const std::vector<std::string>& tokens, int sweeps,
                            std::uint64_t seed) const {
  Doc ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    // Absent words carry no topic signal under a fixed phi; skip them.
    if (auto id = vocab_.id_of(t)) ids.push_back(*id);
  }
  return infer_ids(ids, sweeps, seed);
}

TopicVector LdaModel::infer_ids(const Doc& doc, int sweeps,
                                std::uint64_t seed) const {
  const int K = topics();
  TopicVector tv;
  tv.theta.assign(K, 0.0);
  if (doc.empty()) {
    for (int k = 0; k < K; ++k) tv.theta[k] = alpha_[k] / alpha_sum_;
    return tv;
  }
  if (sweeps < 1) throw Error("sweep count must be >= 1");
  for (TokenId w : doc)
    if (w >= vocab_.size()) throw Error("document token id outside vocabulary");

  Rng rng(seed);
  std::vector<int> z(doc.size());
  std::vector<std::uint32_t> dt(K, 0);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const int k = static_cast<int>(rng.next_below(K));
    z[i] = k;
    ++dt[k];
  }

  std::vector<double> weights(K);
  std::vector<double> theta_sum(K, 0.0);
  int samples = 0;
  const int burn_in = sweeps / 2;
  const double denom = static_cast<double>(doc.size()) + alpha_sum_;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const TokenId w = doc[i];
      --dt[z[i]];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        const double wt = (dt[k] + alpha_[k]) * phi_[k][w];
        weights[k] = wt;
        total += wt;
      }
      const int new_k = sample_index(weights, total, rng);
      z[i] = new_k;
      ++dt[new_k];
    }
    if (sweep >= burn_in && (sweep - burn_in) % kSampleStride == 0) {
      for (int k = 0; k < K; ++k) theta_sum[k] += (dt[k] + alpha_[k]) / denom;
      ++samples;
    }
  }
  for (int k = 0; k < K; ++k) tv.theta[k] = theta_sum[k] / samples;
  return tv;
}

void LdaModel::save(std::ostream& os) const {
  BinWriter w(os);
  w.magic(kMagic, kVersion);
  w.u32(static_cast<std::uint32_t>(topics()));
  w.f64s(alpha_);
  w.f64s(beta_);
  vocab_.save(w);
  for (const auto& row : phi_) w.f64s(row);
  if (!os) throw Error("write failed while saving model");
}

LdaModel LdaModel::load(std::istream& is) {
  BinReader r(is);
  const std::uint32_t version = r.magic(kMagic);
  if (version != kVersion)
    throw ModelFormatError("unsupported LDAM version " +
                           std::to_string(version));
  const std::uint32_t K = r.u32();
  if (K < 1 || K > (1u << 20)) throw ModelFormatError("implausible topic count");
  std::vector<double> alpha = r.f64s();
  std::vector<double> beta = r.f64s();
  if (alpha.size() != K)
    throw ModelFormatError("alpha prior does not match topic count");
  Vocabulary vocab = Vocabulary::load(r);
  if (beta.size() != vocab.size())
    throw ModelFormatError("beta prior does not match vocabulary");
  std::vector<std::vector<double>> phi(K);
  for (auto& row : phi) {
    row = r.f64s();
    if (row.size() != vocab.size())
      throw ModelFormatError("phi row does not match vocabulary");
  }
  r.expect_eof();
  try {
    return LdaModel(std::move(alpha), std::move(beta), std::move(vocab),
                    std::move(phi));
  } catch (const Error& e) {
    throw ModelFormatError(e.what());
  }
}

}  // namespace lda
}  // namespace logsieve
