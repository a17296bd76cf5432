#pragma once

#include <Eigen/Core>

#include "triage/corpus.hpp"
#include "triage/psychfeat.hpp"
#include "triage/textprep.hpp"

namespace triage {

struct ContextConfig {
  /// Preceding other-author posts used as discussion context.
  int window_size = 3;
  /// Append day/night and morning/afternoon/evening/night one-hots to metadata.
  bool include_temporal = false;
  /// Start hours (UTC) of morning, afternoon, evening; night runs from evening_start to morning_start.
  int morning_start = 6;
  int afternoon_start = 12;
  int evening_start = 18;
  /// Hours in [day_start, night_start) count as day.
  int day_start = 6;
  int night_start = 18;

  void validate() const;
};

/// Stopword-filtered tokens of the target author's earlier posts in the thread, oldest first.
/// Throws InvalidArgument when target is not in the thread.
TokenList author_prior_tokens(const ThreadView& thread, const Post& target,
                              const Stopwords& stop = Stopwords::english());

/// Tokens of the `window` most recent earlier posts by other authors, oldest first.
TokenList prior_window_tokens(const ThreadView& thread, const Post& target, int window,
                              const Stopwords& stop = Stopwords::english());

/// category_features over the raw tokens of the body's final sentence; zeros for an empty body.
Eigen::VectorXd last_sentence_categories(const Post& target, const CategoryLexicon& lex);

/// [views, kudos, thread length, position from 0], plus temporal one-hots when enabled:
/// [day, night, morning, afternoon, evening, night].
Eigen::VectorXd metadata_features(const Post& target, const ThreadView& thread, const ContextConfig& cfg);

/// Number of values metadata_features returns under cfg.
int metadata_size(const ContextConfig& cfg);

}  // namespace triage
