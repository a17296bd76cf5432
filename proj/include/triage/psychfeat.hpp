#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "triage/textprep.hpp"

namespace triage {

// Lexicon-driven psycholinguistic features. Every feature here consumes raw
// tokens (no stopword removal) and is normalized by token count.

/// Category lexicon in the LIWC dictionary style: exact terms and trailing-'*' prefixes.
class CategoryLexicon {
 public:
  CategoryLexicon() = default;
  explicit CategoryLexicon(std::vector<std::string> categories);

  /// `pattern` may end in '*' for prefix matching. Category names must already exist.
  void add(std::string_view pattern, const std::vector<std::string>& categories);

  const std::vector<std::string>& categories() const { return categories_; }
  int num_categories() const { return static_cast<int>(categories_.size()); }
  int category_index(std::string_view name) const;

  /// Sorted, unique category indices matched by a token (exact and prefix patterns combined).
  std::vector<int> match(std::string_view token) const;

  /// Patterns in insertion order with their category indices, for serialization.
  const std::vector<std::pair<std::string, std::vector<int>>>& entries() const { return entries_; }

 private:
  std::vector<std::string> categories_;
  std::unordered_map<std::string, int> category_index_;
  std::unordered_map<std::string, std::vector<int>> exact_;
  std::unordered_map<std::string, std::vector<int>> prefix_;
  std::size_t longest_prefix_ = 0;
  std::vector<std::pair<std::string, std::vector<int>>> entries_;
};

/// Header line of category names (tab or comma separated), then "pattern<TAB>cat1,cat2".
CategoryLexicon read_category_lexicon(std::istream& in);
CategoryLexicon load_category_lexicon(const std::string& path);

/// value[c] = tokens matching category c / max(1, token count).
Eigen::VectorXd category_features(const TokenList& tokens, const CategoryLexicon& lex);

inline constexpr int kNumEmotions = 8;
/// Canonical emotion order.
inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "fear", "amusement", "anger", "annoy", "apathy", "happiness", "inspiration", "sadness"};

using EmotionRow = Eigen::Matrix<double, kNumEmotions, 1>;

class EmotionLexicon {
 public:
  /// Row must be a probability vector (entries in [0,1], sum 1 +- 1e-6).
  void add(std::string term, const EmotionRow& row);
  const EmotionRow* find(std::string_view term) const;
  std::size_t size() const { return rows_.size(); }
  /// Terms sorted lexicographically.
  std::vector<std::string> terms() const;

 private:
  std::unordered_map<std::string, EmotionRow> rows_;
};

/// "term<TAB>p1<TAB>...<TAB>p8"; rows that are not probability vectors are rejected.
EmotionLexicon read_emotion_lexicon(std::istream& in);
EmotionLexicon load_emotion_lexicon(const std::string& path);

struct EmotionProfile {
  EmotionRow probabilities;
  /// Argmax of probabilities, lowest index on ties.
  int dominant = 0;
};

/// Mean of the rows of lexicon-covered tokens; uniform when nothing is covered.
EmotionProfile emotion_profile(const TokenList& tokens, const EmotionLexicon& lex);

enum class Strength { Strong, Weak };
enum class Polarity { Positive, Negative, Neutral };

struct SubjectivityEntry {
  Strength strength;
  Polarity polarity;
};

class SubjectivityLexicon {
 public:
  /// Throws InvalidArgument when the term is already present.
  void add(std::string term, SubjectivityEntry entry);
  const SubjectivityEntry* find(std::string_view term) const;
  std::size_t size() const { return entries_.size(); }
  std::vector<std::string> terms() const;

 private:
  std::unordered_map<std::string, SubjectivityEntry> entries_;
};

/// "term<TAB>strong|weak<TAB>positive|negative|neutral".
SubjectivityLexicon read_subjectivity_lexicon(std::istream& in);
SubjectivityLexicon load_subjectivity_lexicon(const std::string& path);

/// [strong, weak, positive, negative] match counts / max(1, token count).
Eigen::Vector4d subjectivity_features(const TokenList& tokens, const SubjectivityLexicon& lex);

/// User-supplied severity clue terms; each entry is one token or a space-joined bigram.
class ClueLexicon {
 public:
  ClueLexicon() = default;
  explicit ClueLexicon(std::unordered_set<std::string> terms) : terms_(std::move(terms)) {}
  bool contains(std::string_view term) const { return terms_.count(std::string(term)) != 0; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  std::vector<std::string> sorted() const;

 private:
  std::unordered_set<std::string> terms_;
};

ClueLexicon read_clue_lexicon(std::istream& in);
ClueLexicon load_clue_lexicon(const std::string& path);

/// [min(1, unigram+bigram clue matches / max(1, token count)), any match].
Eigen::Vector2d clue_features(const TokenList& tokens, const ClueLexicon& lex);

}  // namespace triage
