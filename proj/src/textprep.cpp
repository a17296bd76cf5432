#include "triage/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include "triage/errors.hpp"

namespace triage {

namespace {

// Common English function words. Negations are kept out on purpose: they carry
// severity signal in bag-of-words features.
constexpr std::string_view kEnglishStopwords[] = {
    "a",       "about",   "above",  "after",   "again",   "against", "all",     "am",
    "an",      "and",     "any",    "are",     "as",      "at",      "be",      "because",
    "been",    "before",  "being",  "below",   "between", "both",    "but",     "by",
    "can",     "could",   "d",      "did",     "do",      "does",    "doing",   "down",
    "during",  "each",    "few",    "for",     "from",    "further", "had",     "has",
    "have",    "having",  "he",     "her",     "here",    "hers",    "herself", "him",
    "himself", "his",     "how",    "i",       "if",      "in",      "into",    "is",
    "it",      "its",     "itself", "just",    "ll",      "m",       "ma",      "me",
    "more",    "most",    "my",     "myself",  "now",     "o",       "of",      "off",
    "on",      "once",    "only",   "or",      "other",   "our",     "ours",    "ourselves",
    "out",     "over",    "own",    "re",      "s",       "same",    "she",     "should",
    "so",      "some",    "such",   "t",       "than",    "that",    "the",     "their",
    "theirs",  "them",    "themselves", "then", "there",  "these",   "they",    "this",
    "those",   "through", "to",     "too",     "under",   "until",   "up",      "ve",
    "very",    "was",     "we",     "were",    "what",    "when",    "where",   "which",
    "while",   "who",     "whom",   "why",     "will",    "with",    "would",   "y",
    "you",     "your",    "yours",  "yourself", "yourselves", "im",  "ive",     "id",
    "also",    "get",     "got",    "us",      "let",     "may",     "might",   "must",
    "shall",   "upon",    "yet",    "via",     "etc",     "else",    "ever",    "every",
};

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes one code point starting at text[i]; advances i. Invalid bytes decode to U+FFFD.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  int extra = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<std::size_t>(extra) >= text.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

// Letters and digits of the scripts a forum export is likely to contain.
// Punctuation, symbols, emoji and spaces of every block are separators.
bool is_word_char(char32_t c) {
  if (c < 0x80) return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0xC0 && c <= 0x24F) return c != 0xD7 && c != 0xF7;
  if (c >= 0x370 && c <= 0x3FF) return c != 0x37E && c != 0x387;
  if (c >= 0x400 && c <= 0x52F) return c < 0x482 || c > 0x489;
  if (c >= 0x5D0 && c <= 0x5EA) return true;
  if (c >= 0x620 && c <= 0x64A) return true;
  if (c >= 0x660 && c <= 0x669) return true;
  if (c >= 0x900 && c <= 0x97F) return true;
  if (c >= 0x1E00 && c <= 0x1FFF) return true;
  if (c >= 0x3040 && c <= 0x30FF) return c != 0x30FB;
  if (c >= 0x4E00 && c <= 0x9FFF) return true;
  if (c >= 0xAC00 && c <= 0xD7AF) return true;
  return false;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x138 && c != 0x149 && c != 0x178 && c != 0x17F) {
    // Latin Extended-A alternates upper/lower, with a parity shift in 0x139..0x148 and 0x179..0x17E.
    const bool odd_upper = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (odd_upper ? (c % 2 == 1) : (c % 2 == 0)) return c + 1;
    return c;
  }
  if (c == 0x178) return 0xFF;
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace

const Stopwords& Stopwords::english() {
  static const Stopwords list = [] {
    std::unordered_set<std::string> words;
    for (auto w : kEnglishStopwords) words.emplace(w);
    return Stopwords(std::move(words));
  }();
  return list;
}

std::vector<std::string> Stopwords::sorted() const {
  std::vector<std::string> out(words_.begin(), words_.end());
  std::sort(out.begin(), out.end());
  return out;
}

Stopwords read_stopwords(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.emplace(w);
  }
  return Stopwords(std::move(words));
}

Stopwords load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read stopword file: " + path);
  return read_stopwords(in);
}

TokenList tokenize(std::string_view text, const Stopwords& stop) {
  TokenList out;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && !stop.contains(current)) out.push_back(current);
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    if (is_word_char(cp))
      append_utf8(current, to_lower(cp));
    else
      flush();
  }
  flush();
  return out;
}

TokenList tokenize(std::string_view text) { return tokenize(text, Stopwords::english()); }

TokenList raw_tokens(std::string_view text) {
  static const Stopwords empty;
  return tokenize(text, empty);
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    auto s = trim(text.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1]))) emit(i + 1);
  }
  emit(text.size());
  return out;
}

std::vector<std::string> ngram_terms(const TokenList& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back(tokens[i]);
    if (i + 1 < tokens.size()) out.push_back(tokens[i] + ' ' + tokens[i + 1]);
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> terms, int min_df) : terms_(std::move(terms)), min_df_(min_df) {
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (!index_.emplace(terms_[i], static_cast<int>(i)).second)
      throw InvalidArgument("duplicate vocabulary term: " + terms_[i]);
}

Vocabulary Vocabulary::from_map(const std::map<std::string, int>& index) {
  std::vector<std::string> terms(index.size());
  std::vector<bool> seen(index.size(), false);
  for (const auto& [term, i] : index) {
    if (i < 0 || static_cast<std::size_t>(i) >= index.size() || seen[static_cast<std::size_t>(i)])
      throw InvalidArgument("vocabulary indices must be dense and unique");
    seen[static_cast<std::size_t>(i)] = true;
    terms[static_cast<std::size_t>(i)] = term;
  }
  return Vocabulary(std::move(terms));
}

int Vocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : it->second;
}

namespace {

Vocabulary vocab_from_df(const std::vector<std::vector<std::string>>& doc_terms, int min_df) {
  if (min_df < 1) throw InvalidArgument("min_df must be >= 1");
  std::unordered_map<std::string, int> df;
  for (const auto& terms : doc_terms) {
    std::set<std::string_view> seen(terms.begin(), terms.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  std::vector<std::string> kept;
  for (auto& [term, n] : df)
    if (n >= min_df) kept.push_back(term);
  std::sort(kept.begin(), kept.end());
  return Vocabulary(std::move(kept), min_df);
}

}  // namespace

Vocabulary build_vocab(const std::vector<TokenList>& docs, int min_df) {
  std::vector<std::vector<std::string>> terms;
  terms.reserve(docs.size());
  for (const auto& d : docs) terms.push_back(ngram_terms(d));
  return vocab_from_df(terms, min_df);
}

Vocabulary build_unigram_vocab(const std::vector<TokenList>& docs, int min_df) {
  return vocab_from_df(docs, min_df);
}

SparseVector bow_vector(const TokenList& tokens, const Vocabulary& vocab) {
  std::map<int, double> counts;
  for (const auto& term : ngram_terms(tokens))
    if (int idx = vocab.index_of(term); idx >= 0) counts[idx] += 1.0;
  SparseVector v(vocab.size());
  v.reserve(static_cast<Eigen::Index>(counts.size()));
  for (const auto& [idx, c] : counts) v.insertBack(idx) = c;
  return v;
}

}  // namespace triage
