#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "triage/textprep.hpp"

namespace triage {

struct LdaConfig {
  int topics = 100;
  /// Symmetric document-topic prior; <= 0 means 50 / topics.
  double alpha = 0.0;
  double beta = 0.01;
  int train_iters = 1000;
  int infer_iters = 100;
  /// Document frequency cutoff for the topic vocabulary.
  int min_df = 5;
  std::uint64_t seed = 1;

  double effective_alpha() const { return alpha > 0.0 ? alpha : 50.0 / topics; }
  void validate() const;
};

/// Per-post topic proportions; nonnegative, sums to 1.
using TopicDistribution = Eigen::VectorXd;

/// Collapsed-Gibbs LDA state after training. Immutable once trained.
struct LdaModel {
  int topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  Vocabulary vocab;
  /// topics x vocab.size() assignment counts.
  Eigen::MatrixXi topic_word;
  /// Row sums of topic_word.
  Eigen::VectorXi topic_totals;

  /// Smoothed topic-word distributions, one row per topic.
  Eigen::MatrixXd topic_word_distribution() const;
  bool operator==(const LdaModel& o) const;
};

/// Per-sweep bookkeeping recorded during training.
struct LdaTrace {
  std::vector<long long> assigned_tokens;
};

/// Throws InvalidArgument when the vocabulary at cfg.min_df is empty.
LdaModel lda_train(const std::vector<TokenList>& docs, const LdaConfig& cfg, LdaTrace* trace = nullptr);

/// Fold-in Gibbs sampling with frozen topic-word counts; theta_k = (n_k + alpha) / (N + K alpha).
TopicDistribution lda_infer(const LdaModel& model, const TokenList& tokens, int iters, std::uint64_t seed);

/// Stable 64-bit FNV-1a, used to derive per-document seeds from ids.
std::uint64_t stable_hash(std::string_view s);

}  // namespace triage
