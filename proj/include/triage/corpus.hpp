#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "triage/severity.hpp"

namespace triage {

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDThh:mm:ssZ". Local times and offsets are rejected.
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::string format_timestamp(Timestamp t);

enum class AuthorRole { Member, Moderator };

struct Post {
  std::string post_id;
  std::string thread_id;
  std::string author_id;
  AuthorRole author_role = AuthorRole::Member;
  Timestamp timestamp{};
  std::string subject;
  std::string body;
  std::int64_t kudos = 0;
  std::int64_t views = 0;
  std::optional<SeverityLabel> label;

  bool operator==(const Post&) const = default;
};

/// Chronological view of one thread. Points into the owning Corpus.
struct ThreadView {
  std::string thread_id;
  std::vector<const Post*> posts;

  /// Index of `post_id` in chronological order, if present.
  std::optional<std::size_t> position_of(std::string_view post_id) const;
};

/// Immutable collection of posts with thread and author indexes.
class Corpus {
 public:
  Corpus() = default;
  /// Throws InvalidArgument on duplicate post_id or negative kudos/views.
  explicit Corpus(std::vector<Post> posts);

  Corpus(const Corpus&) = delete;
  Corpus& operator=(const Corpus&) = delete;
  Corpus(Corpus&&) noexcept = default;
  Corpus& operator=(Corpus&&) noexcept = default;

  const std::vector<Post>& posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }
  const Post* find(std::string_view post_id) const;
  const Post& at(std::string_view post_id) const;

  /// Thread ids in lexicographic order.
  std::vector<std::string> thread_ids() const;
  /// Posts ordered by timestamp, ties by post_id. Throws NotFound.
  ThreadView thread(std::string_view thread_id) const;

  /// Every labeled post, keyed (and therefore ordered) by post_id.
  std::map<std::string, SeverityLabel> labels() const;

  /// Each author's posts in chronological order (post_id tie-break), keyed by author_id.
  std::map<std::string, std::vector<const Post*>> posts_by_author() const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> threads_;
};

ThreadView thread_of(const Corpus& corpus, std::string_view thread_id);

/// Chronological comparison with post_id tie-break.
bool chronological_less(const Post& a, const Post& b);

struct CorpusLoad {
  Corpus corpus;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Reads a JSON-lines corpus. Malformed lines are skipped and reported;
/// an unreadable file or a duplicate post_id throws.
CorpusLoad load_corpus(const std::string& path);
CorpusLoad read_corpus(std::istream& in);

void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::string& path, const Corpus& corpus);

std::string post_to_json_line(const Post& p);

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;

  std::vector<std::string> members(int fold) const;
};

/// Per-class round-robin over a seeded shuffle; per-class fold counts differ by at most one.
FoldAssignment stratified_folds(const std::map<std::string, SeverityLabel>& labels, int k,
                                std::uint64_t seed);

struct HoldoutSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Stratified train/test split; each class contributes round(n_c * test_fraction) test posts.
HoldoutSplit stratified_holdout(const std::map<std::string, SeverityLabel>& labels,
                                double test_fraction, std::uint64_t seed);

}  // namespace triage
