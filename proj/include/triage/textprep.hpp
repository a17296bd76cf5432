#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/SparseCore>

namespace triage {

/// Lowercase tokens, in text order.
using TokenList = std::vector<std::string>;

/// Sparse weights over a vocabulary; indices strictly increasing, weights > 0.
using SparseVector = Eigen::SparseVector<double>;

class Stopwords {
 public:
  Stopwords() = default;
  explicit Stopwords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  /// The shipped English list of function words.
  static const Stopwords& english();
  static Stopwords none() { return Stopwords{}; }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) != 0; }
  std::size_t size() const { return words_.size(); }
  /// Words sorted lexicographically.
  std::vector<std::string> sorted() const;

 private:
  std::unordered_set<std::string> words_;
};

/// One lowercase term per line; blank lines and lines starting with '#' ignored.
Stopwords read_stopwords(std::istream& in);
Stopwords load_stopwords(const std::string& path);

/// Splits on non-alphanumeric boundaries (UTF-8 aware), lowercases, drops stopwords.
TokenList tokenize(std::string_view text, const Stopwords& stop);
/// tokenize() with the shipped English stopword list.
TokenList tokenize(std::string_view text);
/// tokenize() without stopword removal; the input to lexicon features.
TokenList raw_tokens(std::string_view text);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Delimiters stay with their sentence; surrounding whitespace is trimmed.
std::vector<std::string> split_sentences(std::string_view text);

/// Unigram and adjacent-bigram terms of a token list ("a b" for bigrams).
std::vector<std::string> ngram_terms(const TokenList& tokens);

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Terms take the index of their position. Throws InvalidArgument on duplicates.
  explicit Vocabulary(std::vector<std::string> terms, int min_df = 1);
  /// Explicit term -> index map; indices must be dense in [0, size).
  static Vocabulary from_map(const std::map<std::string, int>& index);

  int size() const { return static_cast<int>(terms_.size()); }
  int min_df() const { return min_df_; }
  /// -1 when the term is absent.
  int index_of(std::string_view term) const;
  const std::vector<std::string>& terms() const { return terms_; }

  bool operator==(const Vocabulary& o) const { return terms_ == o.terms_ && min_df_ == o.min_df_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, int> index_;
  int min_df_ = 1;
};

/// Unigrams and bigrams with document frequency >= min_df, indexed in lexicographic order.
Vocabulary build_vocab(const std::vector<TokenList>& docs, int min_df);
/// Unigrams only; used by the topic model.
Vocabulary build_unigram_vocab(const std::vector<TokenList>& docs, int min_df);

/// Raw term counts of unigrams and bigrams; out-of-vocabulary terms dropped.
SparseVector bow_vector(const TokenList& tokens, const Vocabulary& vocab);

}  // namespace triage
