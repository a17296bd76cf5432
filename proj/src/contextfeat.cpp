#include "triage/contextfeat.hpp"

#include <chrono>

#include "triage/errors.hpp"

namespace triage {

namespace {

std::size_t require_position(const ThreadView& thread, const Post& target) {
  auto pos = thread.position_of(target.post_id);
  if (!pos) throw InvalidArgument("post " + target.post_id + " is not in thread " + thread.thread_id);
  return *pos;
}

void append(TokenList& out, const TokenList& more) { out.insert(out.end(), more.begin(), more.end()); }

}  // namespace

void ContextConfig::validate() const {
  if (window_size < 0) throw InvalidArgument("context window must be >= 0");
  auto hour = [](int h) { return h >= 0 && h < 24; };
  if (!hour(morning_start) || !hour(afternoon_start) || !hour(evening_start) || !hour(day_start) ||
      !hour(night_start) || !(morning_start < afternoon_start && afternoon_start < evening_start) ||
      !(day_start < night_start))
    throw InvalidArgument("temporal bucket boundaries must be increasing hours in [0, 24)");
}

TokenList author_prior_tokens(const ThreadView& thread, const Post& target, const Stopwords& stop) {
  const std::size_t pos = require_position(thread, target);
  TokenList out;
  for (std::size_t i = 0; i < pos; ++i)
    if (thread.posts[i]->author_id == target.author_id) append(out, tokenize(thread.posts[i]->body, stop));
  return out;
}

TokenList prior_window_tokens(const ThreadView& thread, const Post& target, int window, const Stopwords& stop) {
  if (window < 0) throw InvalidArgument("window must be >= 0");
  const std::size_t pos = require_position(thread, target);
  std::vector<const Post*> picked;
  for (std::size_t i = pos; i-- > 0 && static_cast<int>(picked.size()) < window;)
    if (thread.posts[i]->author_id != target.author_id) picked.push_back(thread.posts[i]);
  TokenList out;
  for (auto it = picked.rbegin(); it != picked.rend(); ++it) append(out, tokenize((*it)->body, stop));
  return out;
}

Eigen::VectorXd last_sentence_categories(const Post& target, const CategoryLexicon& lex) {
  const auto sentences = split_sentences(target.body);
  if (sentences.empty()) return Eigen::VectorXd::Zero(lex.num_categories());
  return category_features(raw_tokens(sentences.back()), lex);
}

int metadata_size(const ContextConfig& cfg) { return cfg.include_temporal ? 10 : 4; }

Eigen::VectorXd metadata_features(const Post& target, const ThreadView& thread, const ContextConfig& cfg) {
  const std::size_t pos = require_position(thread, target);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(metadata_size(cfg));
  v[0] = static_cast<double>(target.views);
  v[1] = static_cast<double>(target.kudos);
  v[2] = static_cast<double>(thread.posts.size());
  v[3] = static_cast<double>(pos);
  if (cfg.include_temporal) {
    using namespace std::chrono;
    const auto since_midnight = target.timestamp - floor<days>(target.timestamp);
    const int hour = static_cast<int>(duration_cast<hours>(since_midnight).count());
    const bool day = hour >= cfg.day_start && hour < cfg.night_start;
    v[day ? 4 : 5] = 1.0;
    int bucket = 3;
    if (hour >= cfg.morning_start && hour < cfg.afternoon_start)
      bucket = 0;
    else if (hour >= cfg.afternoon_start && hour < cfg.evening_start)
      bucket = 1;
    else if (hour >= cfg.evening_start)
      bucket = 2;
    v[6 + bucket] = 1.0;
  }
  return v;
}

}  // namespace triage
