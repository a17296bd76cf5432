#pragma once

#include <atomic>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace triage {

/// Precomputed sentence vectors keyed by (post_id, sentence_index), all of one dimension.
class VectorStore {
 public:
  VectorStore() = default;
  VectorStore(const VectorStore& o) : vectors_(o.vectors_), dim_(o.dim_), missing_(o.missing_.load()) {}
  VectorStore& operator=(const VectorStore& o) {
    vectors_ = o.vectors_;
    dim_ = o.dim_;
    missing_ = o.missing_.load();
    return *this;
  }

  /// Throws InvalidArgument on negative index or dimension mismatch.
  void insert(const std::string& post_id, int sentence_index, Eigen::VectorXd v);

  /// Unset until the first insert.
  std::optional<int> dimension() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  const std::map<std::pair<std::string, int>, Eigen::VectorXd>& entries() const { return vectors_; }

  /// Number of post_vector calls that found no sentence vectors.
  std::size_t missing_count() const { return missing_.load(); }
  void note_missing() const { ++missing_; }

 private:
  std::map<std::pair<std::string, int>, Eigen::VectorXd> vectors_;
  std::optional<int> dim_;
  mutable std::atomic<std::size_t> missing_{0};
};

struct VectorLoad {
  VectorStore store;
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// "post_id<TAB>sentence_index<TAB>v1,v2,...,vd". Malformed rows are skipped;
/// a dimension mismatch throws IoError.
VectorLoad read_sentence_vectors(std::istream& in);
VectorLoad load_sentence_vectors(const std::string& path);
void write_sentence_vectors(std::ostream& out, const VectorStore& store);

/// Mean of the post's vectors with sentence_index < n_sentences. A post with none
/// yields a zero vector and bumps the store's missing counter.
Eigen::VectorXd post_vector(const VectorStore& store, const std::string& post_id, int n_sentences);

}  // namespace triage
