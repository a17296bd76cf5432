#include "triage/psychfeat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>

#include "triage/errors.hpp"

namespace triage {

namespace {

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool skip_line(const std::string& line) {
  const auto s = strip(line);
  return s.empty() || s.front() == '#';
}

std::ifstream open_or_throw(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot read ") + what + ": " + path);
  return in;
}

double normalizer(const TokenList& tokens) { return std::max<double>(1.0, static_cast<double>(tokens.size())); }

}  // namespace

CategoryLexicon::CategoryLexicon(std::vector<std::string> categories) : categories_(std::move(categories)) {
  for (std::size_t i = 0; i < categories_.size(); ++i)
    if (!category_index_.emplace(categories_[i], static_cast<int>(i)).second)
      throw InvalidArgument("duplicate category name: " + categories_[i]);
}

int CategoryLexicon::category_index(std::string_view name) const {
  auto it = category_index_.find(std::string(name));
  return it == category_index_.end() ? -1 : it->second;
}

void CategoryLexicon::add(std::string_view pattern, const std::vector<std::string>& categories) {
  if (pattern.empty() || pattern == "*") throw InvalidArgument("empty lexicon pattern");
  if (categories.empty()) throw InvalidArgument("pattern '" + std::string(pattern) + "' maps to no category");
  std::vector<int> idx;
  for (const auto& c : categories) {
    const int i = category_index(c);
    if (i < 0) throw InvalidArgument("unknown category '" + c + "' for pattern '" + std::string(pattern) + "'");
    idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  entries_.emplace_back(std::string(pattern), idx);
  auto merge_into = [&](std::vector<int>& target) {
    target.insert(target.end(), idx.begin(), idx.end());
    std::sort(target.begin(), target.end());
    target.erase(std::unique(target.begin(), target.end()), target.end());
  };
  if (pattern.back() == '*') {
    const std::string stem(pattern.substr(0, pattern.size() - 1));
    merge_into(prefix_[stem]);
    longest_prefix_ = std::max(longest_prefix_, stem.size());
  } else {
    merge_into(exact_[std::string(pattern)]);
  }
}

std::vector<int> CategoryLexicon::match(std::string_view token) const {
  std::vector<int> out;
  if (auto it = exact_.find(std::string(token)); it != exact_.end()) out = it->second;
  if (!prefix_.empty()) {
    const std::size_t max_len = std::min(longest_prefix_, token.size());
    std::string stem;
    for (std::size_t len = 1; len <= max_len; ++len) {
      stem.assign(token.substr(0, len));
      if (auto it = prefix_.find(stem); it != prefix_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

CategoryLexicon read_category_lexicon(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<CategoryLexicon> lex;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    if (!lex) {
      const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
      std::vector<std::string> names;
      for (auto& n : split(line, delim))
        if (auto s = strip(n); !s.empty()) names.push_back(s);
      if (names.empty()) throw IoError("category lexicon: empty header");
      lex.emplace(std::move(names));
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 2) throw IoError("category lexicon line " + std::to_string(lineno) + ": expected pattern<TAB>categories");
    std::vector<std::string> cats;
    for (auto& c : split(fields[1], ','))
      if (auto s = strip(c); !s.empty()) cats.push_back(s);
    try {
      lex->add(strip(fields[0]), cats);
    } catch (const InvalidArgument& e) {
      throw IoError("category lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!lex) throw IoError("category lexicon: missing header line");
  return std::move(*lex);
}

CategoryLexicon load_category_lexicon(const std::string& path) {
  auto in = open_or_throw(path, "category lexicon");
  return read_category_lexicon(in);
}

Eigen::VectorXd category_features(const TokenList& tokens, const CategoryLexicon& lex) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(lex.num_categories());
  for (const auto& t : tokens)
    for (int c : lex.match(t)) v[c] += 1.0;
  return v / normalizer(tokens);
}

void EmotionLexicon::add(std::string term, const EmotionRow& row) {
  if ((row.array() < 0.0).any() || (row.array() > 1.0).any() || std::abs(row.sum() - 1.0) > 1e-6)
    throw InvalidArgument("emotion row for '" + term + "' is not a probability vector");
  rows_[std::move(term)] = row;
}

const EmotionRow* EmotionLexicon::find(std::string_view term) const {
  auto it = rows_.find(std::string(term));
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<std::string> EmotionLexicon::terms() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& [t, _] : rows_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

EmotionLexicon read_emotion_lexicon(std::istream& in) {
  EmotionLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = split(strip(line), '\t');
    if (fields.size() != kNumEmotions + 1)
      throw IoError("emotion lexicon line " + std::to_string(lineno) + ": expected term and 8 probabilities");
    EmotionRow row;
    for (int k = 0; k < kNumEmotions; ++k) {
      const auto& f = fields[static_cast<std::size_t>(k) + 1];
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw IoError("emotion lexicon line " + std::to_string(lineno) + ": bad number '" + f + "'");
      row[k] = value;
    }
    try {
      lex.add(fields[0], row);
    } catch (const InvalidArgument& e) {
      throw IoError("emotion lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

EmotionLexicon load_emotion_lexicon(const std::string& path) {
  auto in = open_or_throw(path, "emotion lexicon");
  return read_emotion_lexicon(in);
}

EmotionProfile emotion_profile(const TokenList& tokens, const EmotionLexicon& lex) {
  EmotionRow sum = EmotionRow::Zero();
  int covered = 0;
  for (const auto& t : tokens)
    if (const EmotionRow* row = lex.find(t)) {
      sum += *row;
      ++covered;
    }
  EmotionProfile p;
  p.probabilities = covered == 0 ? EmotionRow::Constant(1.0 / kNumEmotions) : EmotionRow(sum / covered);
  // maxCoeff returns the first maximal index.
  Eigen::Index arg = 0;
  p.probabilities.maxCoeff(&arg);
  p.dominant = static_cast<int>(arg);
  return p;
}

void SubjectivityLexicon::add(std::string term, SubjectivityEntry entry) {
  if (!entries_.emplace(term, entry).second) throw InvalidArgument("duplicate subjectivity term: " + term);
}

const SubjectivityEntry* SubjectivityLexicon::find(std::string_view term) const {
  auto it = entries_.find(std::string(term));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> SubjectivityLexicon::terms() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [t, _] : entries_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

SubjectivityLexicon read_subjectivity_lexicon(std::istream& in) {
  SubjectivityLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto fields = split(strip(line), '\t');
    auto fail = [&](const std::string& why) {
      return IoError("subjectivity lexicon line " + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 3) throw fail("expected term<TAB>strength<TAB>polarity");
    SubjectivityEntry e{};
    if (fields[1] == "strong")
      e.strength = Strength::Strong;
    else if (fields[1] == "weak")
      e.strength = Strength::Weak;
    else
      throw fail("bad strength '" + fields[1] + "'");
    if (fields[2] == "positive")
      e.polarity = Polarity::Positive;
    else if (fields[2] == "negative")
      e.polarity = Polarity::Negative;
    else if (fields[2] == "neutral")
      e.polarity = Polarity::Neutral;
    else
      throw fail("bad polarity '" + fields[2] + "'");
    try {
      lex.add(fields[0], e);
    } catch (const InvalidArgument& ex) {
      throw fail(ex.what());
    }
  }
  return lex;
}

SubjectivityLexicon load_subjectivity_lexicon(const std::string& path) {
  auto in = open_or_throw(path, "subjectivity lexicon");
  return read_subjectivity_lexicon(in);
}

Eigen::Vector4d subjectivity_features(const TokenList& tokens, const SubjectivityLexicon& lex) {
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  for (const auto& t : tokens) {
    const SubjectivityEntry* e = lex.find(t);
    if (!e) continue;
    v[e->strength == Strength::Strong ? 0 : 1] += 1.0;
    if (e->polarity == Polarity::Positive) v[2] += 1.0;
    if (e->polarity == Polarity::Negative) v[3] += 1.0;
  }
  return v / normalizer(tokens);
}

std::vector<std::string> ClueLexicon::sorted() const {
  std::vector<std::string> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end());
  return out;
}

ClueLexicon read_clue_lexicon(std::istream& in) {
  std::unordered_set<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    if (skip_line(line)) continue;
    // Normalize to single-space joined lowercase tokens.
    const auto toks = raw_tokens(line);
    if (toks.empty() || toks.size() > 2) continue;
    terms.insert(toks.size() == 1 ? toks[0] : toks[0] + ' ' + toks[1]);
  }
  return ClueLexicon(std::move(terms));
}

ClueLexicon load_clue_lexicon(const std::string& path) {
  auto in = open_or_throw(path, "clue lexicon");
  return read_clue_lexicon(in);
}

Eigen::Vector2d clue_features(const TokenList& tokens, const ClueLexicon& lex) {
  double matches = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (lex.contains(tokens[i])) matches += 1.0;
    if (i + 1 < tokens.size() && lex.contains(tokens[i] + ' ' + tokens[i + 1])) matches += 1.0;
  }
  const double n = normalizer(tokens);
  return {std::min(1.0, matches / n), matches > 0.0 ? 1.0 : 0.0};
}

}  // namespace triage
