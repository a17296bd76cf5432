#include <doctest.h>

#include <sstream>

#include "triage/densevec.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"

using namespace triage;

TEST_CASE("load: uniform dimension") {
  std::istringstream in("p1\t0\t1,2,3,4\np1\t1\t0,0,0,1\n");
  const auto load = read_sentence_vectors(in);
  CHECK(load.store.dimension() == 4);
  CHECK(load.store.size() == 2);
}

TEST_CASE("load: dimension mismatch is fatal") {
  std::istringstream in("p1\t0\t1,2,3,4\np1\t1\t0,0,0,1,5\n");
  CHECK_THROWS_AS(read_sentence_vectors(in), IoError);
}

TEST_CASE("load: empty input and malformed rows") {
  std::istringstream empty("");
  const auto e = read_sentence_vectors(empty);
  CHECK(e.store.size() == 0);
  CHECK_FALSE(e.store.dimension().has_value());

  std::istringstream bad("p1\tx\t1,2\np1\t0\t1,abc\np2\t0\t3,4\n");
  const auto b = read_sentence_vectors(bad);
  CHECK(b.store.size() == 1);
  CHECK(b.skipped == 2);
  CHECK(b.diagnostics.size() == 2);
}

TEST_CASE("round trip through the TSV format") {
  VectorStore s;
  s.insert("a", 0, Eigen::Vector2d(0.1, -1e-7));
  s.insert("a", 1, Eigen::Vector2d(1.0 / 3.0, 5.0));
  std::stringstream buf;
  write_sentence_vectors(buf, s);
  const auto back = read_sentence_vectors(buf);
  CHECK(back.store.entries() == s.entries());
}

TEST_CASE("post vector") {
  VectorStore s;
  s.insert("one", 0, Eigen::Vector2d(3, 4));
  s.insert("two", 0, Eigen::Vector2d(1, 0));
  s.insert("two", 1, Eigen::Vector2d(0, 1));
  CHECK(post_vector(s, "one", 1) == Eigen::Vector2d(3, 4));
  CHECK(post_vector(s, "two", 2) == Eigen::Vector2d(0.5, 0.5));
  CHECK(s.missing_count() == 0);
  CHECK(post_vector(s, "absent", 3) == Eigen::Vector2d(0, 0));
  CHECK(s.missing_count() == 1);
  CHECK_THROWS_AS(post_vector(s, "one", 0), InvalidArgument);
}

TEST_CASE("property: post vector is order-free and bounded") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(6));
    const int n = 1 + static_cast<int>(rng.below(6));
    std::vector<Eigen::VectorXd> rows;
    for (int i = 0; i < n; ++i) rows.push_back(Eigen::VectorXd::Random(d));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    VectorStore a, b;
    for (int i = 0; i < n; ++i) {
      a.insert("p", i, rows[static_cast<std::size_t>(i)]);
      b.insert("p", i, rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    }
    const auto va = post_vector(a, "p", n);
    CHECK(va.isApprox(post_vector(b, "p", n), 1e-12));
    for (int j = 0; j < d; ++j) {
      double lo = 1e300, hi = -1e300;
      for (const auto& r : rows) {
        lo = std::min(lo, r[j]);
        hi = std::max(hi, r[j]);
      }
      CHECK(va[j] >= lo - 1e-12);
      CHECK(va[j] <= hi + 1e-12);
    }
  }
}
