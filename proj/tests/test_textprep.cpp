#include <doctest.h>

#include <map>
#include <sstream>

#include "triage/errors.hpp"
#include "triage/rng.hpp"
#include "triage/textprep.hpp"

using namespace triage;

namespace {

std::map<int, double> as_map(const SparseVector& v) {
  std::map<int, double> out;
  for (SparseVector::InnerIterator it(v); it; ++it) out[static_cast<int>(it.index())] = it.value();
  return out;
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize") {
  const Stopwords stop_i(std::unordered_set<std::string>{"i"});
  CHECK(tokenize("I feel SAD.", stop_i) == TokenList{"feel", "sad"});
  CHECK(tokenize("", stop_i).empty());
  CHECK(tokenize("don't give up", Stopwords::none()) == TokenList{"don", "t", "give", "up"});
  CHECK(raw_tokens("ÉTÉ café") == TokenList{"été", "café"});
  CHECK(tokenize("the cat and the hat") == TokenList{"cat", "hat"});
}

TEST_CASE("shipped stopword list size") {
  CHECK(Stopwords::english().size() >= 100);
  CHECK(Stopwords::english().size() <= 200);
}

TEST_CASE("stopword file") {
  std::istringstream in("# comment\nfoo\n\n bar \n");
  const auto s = read_stopwords(in);
  CHECK(s.size() == 2);
  CHECK(s.contains("foo"));
  CHECK(s.contains("bar"));
}

TEST_CASE("split_sentences") {
  CHECK(split_sentences("Hi there. I am fine!") == std::vector<std::string>{"Hi there.", "I am fine!"});
  CHECK(split_sentences("no terminator") == std::vector<std::string>{"no terminator"});
  CHECK(split_sentences("A? B. C") == std::vector<std::string>{"A?", "B.", "C"});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("3.5 is a number.") == std::vector<std::string>{"3.5 is a number."});
}

TEST_CASE("property: joined sentences re-normalize to the original text") {
  Rng rng(8);
  const std::vector<std::string> pieces = {"word", "x", ".", "!", "?", " ", "  ", "\n", "ab.cd", "1.5"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const auto n = rng.below(15);
    for (std::uint64_t i = 0; i < n; ++i) text += pieces[rng.below(pieces.size())];
    std::string joined;
    for (const auto& s : split_sentences(text)) {
      CHECK_FALSE(s.empty());
      joined += (joined.empty() ? "" : " ") + s;
    }
    CHECK(collapse_ws(joined) == collapse_ws(text));
  }
}

TEST_CASE("build_vocab") {
  CHECK(build_vocab({{"a", "b"}, {"a", "c"}}, 2).terms() == std::vector<std::string>{"a"});
  CHECK(build_vocab({{"a", "b"}, {"a", "b"}}, 2).terms() == std::vector<std::string>{"a", "a b", "b"});
  CHECK(build_vocab({{"x"}}, 1).terms() == std::vector<std::string>{"x"});
  CHECK(build_vocab({}, 1).size() == 0);
  CHECK_THROWS_AS(build_vocab({{"x"}}, 0), InvalidArgument);
  const auto v = build_vocab({{"b", "a"}, {"a", "b"}}, 1);
  for (int i = 0; i < v.size(); ++i) CHECK(v.index_of(v.terms()[static_cast<std::size_t>(i)]) == i);
  CHECK(v.index_of("zzz") == -1);
}

TEST_CASE("document frequency counts each document once") {
  const auto v = build_vocab({{"a", "a", "a"}, {"b"}}, 2);
  CHECK(v.size() == 0);
}

TEST_CASE("bow_vector") {
  const auto vocab = Vocabulary::from_map({{"sad", 0}, {"feel", 1}, {"sad sad", 2}, {"sad feel", 3}});
  const auto v = bow_vector({"sad", "sad", "feel"}, vocab);
  CHECK(as_map(v) == std::map<int, double>{{0, 2.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}});
  CHECK(v.size() == 4);
  CHECK(bow_vector({"zzz", "yyy"}, vocab).nonZeros() == 0);
  CHECK(bow_vector({}, vocab).nonZeros() == 0);
}

TEST_CASE("property: bow_vector equals brute-force counting") {
  Rng rng(77);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TokenList> docs(1 + rng.below(6));
    for (auto& d : docs)
      for (std::uint64_t i = 0, n = rng.below(8); i < n; ++i) d.push_back(alphabet[rng.below(alphabet.size())]);
    const auto vocab = build_vocab(docs, 1 + static_cast<int>(rng.below(2)));
    TokenList query;
    for (std::uint64_t i = 0, n = rng.below(10); i < n; ++i) query.push_back(alphabet[rng.below(alphabet.size())]);

    std::map<int, double> expected;
    for (std::size_t i = 0; i < query.size(); ++i) {
      if (int idx = vocab.index_of(query[i]); idx >= 0) expected[idx] += 1.0;
      if (i + 1 < query.size())
        if (int idx = vocab.index_of(query[i] + " " + query[i + 1]); idx >= 0) expected[idx] += 1.0;
    }
    const auto v = bow_vector(query, vocab);
    CHECK(as_map(v) == expected);
    int last = -1;
    for (SparseVector::InnerIterator it(v); it; ++it) {
      CHECK(it.index() > last);
      CHECK(it.value() > 0.0);
      last = static_cast<int>(it.index());
    }
    CHECK(build_vocab(docs, 1) == build_vocab(docs, 1));
  }
}

TEST_CASE("property: vocabulary respects min_df") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenList> docs(2 + rng.below(6));
    for (auto& d : docs)
      for (std::uint64_t i = 0, n = rng.below(6); i < n; ++i) d.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
    const int min_df = 1 + static_cast<int>(rng.below(3));
    const auto vocab = build_vocab(docs, min_df);
    for (const auto& term : vocab.terms()) {
      int df = 0;
      for (const auto& d : docs) {
        const auto terms = ngram_terms(d);
        df += std::find(terms.begin(), terms.end(), term) != terms.end();
      }
      CHECK(df >= min_df);
    }
  }
}
