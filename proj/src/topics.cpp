#include "triage/topics.hpp"

#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage {

void LdaConfig::validate() const {
  if (topics < 1) throw InvalidArgument("LDA needs at least one topic");
  if (train_iters < 1 || infer_iters < 1) throw InvalidArgument("LDA iterations must be >= 1");
  if (beta <= 0.0) throw InvalidArgument("LDA beta must be > 0");
  if (min_df < 1) throw InvalidArgument("LDA min_df must be >= 1");
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Eigen::MatrixXd LdaModel::topic_word_distribution() const {
  const double v_beta = beta * vocab.size();
  Eigen::MatrixXd phi = topic_word.cast<double>().array() + beta;
  for (int k = 0; k < topics; ++k) phi.row(k) /= topic_totals[k] + v_beta;
  return phi;
}

bool LdaModel::operator==(const LdaModel& o) const {
  return topics == o.topics && alpha == o.alpha && beta == o.beta && seed == o.seed &&
         iterations == o.iterations && vocab == o.vocab && topic_word.rows() == o.topic_word.rows() &&
         topic_word.cols() == o.topic_word.cols() && topic_word == o.topic_word && topic_totals == o.topic_totals;
}

namespace {

std::vector<int> word_ids(const TokenList& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens)
    if (int w = vocab.index_of(t); w >= 0) ids.push_back(w);
  return ids;
}

}  // namespace

LdaModel lda_train(const std::vector<TokenList>& docs, const LdaConfig& cfg, LdaTrace* trace) {
  cfg.validate();
  if (docs.empty()) throw InvalidArgument("lda_train: no documents");
  LdaModel m;
  m.topics = cfg.topics;
  m.alpha = cfg.effective_alpha();
  m.beta = cfg.beta;
  m.seed = cfg.seed;
  m.iterations = cfg.train_iters;
  m.vocab = build_unigram_vocab(docs, cfg.min_df);
  const int V = m.vocab.size();
  const int K = m.topics;
  if (V == 0) throw InvalidArgument("lda_train: empty vocabulary at min_df=" + std::to_string(cfg.min_df));

  std::vector<std::vector<int>> words;
  words.reserve(docs.size());
  for (const auto& d : docs) words.push_back(word_ids(d, m.vocab));

  Rng rng(cfg.seed);
  m.topic_word = Eigen::MatrixXi::Zero(K, V);
  m.topic_totals = Eigen::VectorXi::Zero(K);
  Eigen::MatrixXi doc_topic = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(docs.size()), K);
  std::vector<std::vector<int>> z(docs.size());
  for (std::size_t d = 0; d < words.size(); ++d) {
    z[d].resize(words[d].size());
    for (std::size_t n = 0; n < words[d].size(); ++n) {
      const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      z[d][n] = k;
      ++m.topic_word(k, words[d][n]);
      ++m.topic_totals[k];
      ++doc_topic(static_cast<Eigen::Index>(d), k);
    }
  }

  const double v_beta = V * m.beta;
  std::vector<double> p(static_cast<std::size_t>(K));
  for (int it = 0; it < cfg.train_iters; ++it) {
    for (std::size_t d = 0; d < words.size(); ++d) {
      const auto row = static_cast<Eigen::Index>(d);
      for (std::size_t n = 0; n < words[d].size(); ++n) {
        const int w = words[d][n];
        int k = z[d][n];
        --m.topic_word(k, w);
        --m.topic_totals[k];
        --doc_topic(row, k);
        for (int t = 0; t < K; ++t)
          p[static_cast<std::size_t>(t)] =
              (doc_topic(row, t) + m.alpha) * (m.topic_word(t, w) + m.beta) / (m.topic_totals[t] + v_beta);
        k = static_cast<int>(rng.categorical(p));
        z[d][n] = k;
        ++m.topic_word(k, w);
        ++m.topic_totals[k];
        ++doc_topic(row, k);
      }
    }
    if (trace) trace->assigned_tokens.push_back(m.topic_totals.cast<long long>().sum());
  }
  return m;
}

TopicDistribution lda_infer(const LdaModel& model, const TokenList& tokens, int iters, std::uint64_t seed) {
  const int K = model.topics;
  const auto ids = word_ids(tokens, model.vocab);
  if (ids.empty()) return TopicDistribution::Constant(K, 1.0 / K);
  if (iters < 1) throw InvalidArgument("lda_infer: iters must be >= 1");

  Rng rng(seed);
  Eigen::VectorXi doc_topic = Eigen::VectorXi::Zero(K);
  std::vector<int> z(ids.size());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    z[n] = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    ++doc_topic[z[n]];
  }
  const double v_beta = model.vocab.size() * model.beta;
  std::vector<double> p(static_cast<std::size_t>(K));
  for (int it = 0; it < iters; ++it) {
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const int w = ids[n];
      --doc_topic[z[n]];
      for (int t = 0; t < K; ++t)
        p[static_cast<std::size_t>(t)] =
            (doc_topic[t] + model.alpha) * (model.topic_word(t, w) + model.beta) / (model.topic_totals[t] + v_beta);
      z[n] = static_cast<int>(rng.categorical(p));
      ++doc_topic[z[n]];
    }
  }
  const double denom = static_cast<double>(ids.size()) + K * model.alpha;
  return (doc_topic.cast<double>().array() + model.alpha) / denom;
}

}  // namespace triage
