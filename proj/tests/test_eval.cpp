#include <doctest.h>

#include <cmath>
#include <set>

#include "synth_fixture.hpp"
#include "triage/errors.hpp"
#include "triage/eval.hpp"
#include "triage/rng.hpp"

using namespace triage;
using namespace triage::testing;
using L = SeverityLabel;

namespace {

// Two-sided p-value of Student's t by Simpson integration of the density.
double student_two_sided(double t, int df) {
  const double nu = df;
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const int n = 200000;
  const double a = 0.0, b = std::abs(t), h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * s * h / 3.0;
}

struct Reference {
  std::array<double, kNumClasses> f1{};
  double flagged_f1 = 0, flagged_acc = 0, urgent_f1 = 0, urgent_acc = 0, accuracy = 0;
};

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }
double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

// Recomputes every score from the label lists.
Reference reference(const std::vector<L>& gold, const std::vector<L>& pred) {
  Reference out;
  const double n = static_cast<double>(gold.size());
  int correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  out.accuracy = correct / n;
  for (int c = 0; c < kNumClasses; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = index_of(gold[i]) == c, p = index_of(pred[i]) == c;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    out.f1[static_cast<std::size_t>(c)] = harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
  }
  auto binary = [&](auto positive, double& f1, double& acc) {
    double tp = 0, fp = 0, fn = 0, agree = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = positive(gold[i]), p = positive(pred[i]);
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
      agree += g == p;
    }
    f1 = harmonic(ratio(tp, tp + fp), ratio(tp, tp + fn));
    acc = agree / n;
  };
  binary(is_flagged, out.flagged_f1, out.flagged_acc);
  binary(is_urgent, out.urgent_f1, out.urgent_acc);
  return out;
}

std::vector<L> random_labels(Rng& rng, std::size_t n) {
  std::vector<L> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(label_at(static_cast<int>(rng.below(4))));
  return out;
}

}  // namespace

TEST_CASE("confusion examples") {
  const auto one = confusion(std::vector{L::Green}, std::vector{L::Green});
  CHECK(one.counts(0, 0) == 1);
  CHECK(one.total() == 1);
  const auto two = confusion(std::vector{L::Green, L::Amber}, std::vector{L::Amber, L::Amber});
  CHECK(two.counts(0, 1) == 1);
  CHECK(two.counts(1, 1) == 1);
  CHECK(two.total() == 2);
  CHECK_THROWS_AS(confusion(std::vector{L::Green}, std::vector<L>{}), InvalidArgument);
  CHECK_THROWS_AS(confusion(std::vector<L>{}, std::vector<L>{}), InvalidArgument);

  Rng rng(1);
  const auto g = random_labels(rng, 100), p = random_labels(rng, 100);
  CHECK(confusion(g, p).total() == 100);
}

TEST_CASE("hand-computed four-post example") {
  const auto r = evaluate(std::vector{L::Green, L::Green, L::Amber, L::Red}, std::vector{L::Green, L::Amber, L::Amber, L::Red});
  CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[1].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[2].f1 == doctest::Approx(1.0));
  CHECK(r.per_class[3].f1 == 0.0);
  CHECK(r.macro_f1_nongreen == doctest::Approx(5.0 / 9.0));
  CHECK(r.flagged_f1 == doctest::Approx(0.8));
  CHECK(r.accuracy == doctest::Approx(0.75));
}

TEST_CASE("macro over non-green classes averages amber, red and crisis F1") {
  // Per-class F1 75.5 (amber), 76.1 (red), 0 (crisis) average to 50.5.
  const double macro = macro_nongreen({0.9, 0.755, 0.761, 0.0});
  CHECK(macro == doctest::Approx(0.50533).epsilon(1e-4));
  CHECK(std::round(macro * 1000) / 10 == doctest::Approx(50.5));
}

TEST_CASE("perfect predictions score 1 everywhere") {
  const std::vector<L> gold{L::Green, L::Amber, L::Red, L::Crisis, L::Amber};
  const auto r = evaluate(gold, gold);
  for (const auto& c : r.per_class) CHECK(c.f1 == 1.0);
  CHECK(r.macro_f1_nongreen == 1.0);
  CHECK(r.flagged_f1 == 1.0);
  CHECK(r.urgent_f1 == 1.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("zero-over-zero ratios count as zero") {
  const auto s = binary_scores(0, 0, 0);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK(f1_from(0.0, 0.0) == 0.0);
}

TEST_CASE("property: metrics agree with an independent recomputation and ignore pairing order") {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    auto gold = random_labels(rng, n), pred = random_labels(rng, n);
    const auto r = evaluate(gold, pred);
    const auto ref = reference(gold, pred);
    for (int c = 0; c < kNumClasses; ++c) CHECK(r.per_class[static_cast<std::size_t>(c)].f1 == doctest::Approx(ref.f1[static_cast<std::size_t>(c)]));
    CHECK(r.macro_f1_nongreen == doctest::Approx((ref.f1[1] + ref.f1[2] + ref.f1[3]) / 3.0));
    CHECK(r.flagged_f1 == doctest::Approx(ref.flagged_f1));
    CHECK(r.flagged_acc == doctest::Approx(ref.flagged_acc));
    CHECK(r.urgent_f1 == doctest::Approx(ref.urgent_f1));
    CHECK(r.urgent_acc == doctest::Approx(ref.urgent_acc));
    CHECK(r.accuracy == doctest::Approx(ref.accuracy));
    CHECK(r.n == static_cast<std::int64_t>(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    std::vector<L> g2, p2;
    for (auto i : order) {
      g2.push_back(gold[i]);
      p2.push_back(pred[i]);
    }
    CHECK(confusion(g2, p2) == confusion(gold, pred));

    const double p = rng.uniform(), q = rng.uniform();
    CHECK(f1_from(p, q) == doctest::Approx(f1_from(q, p)));
  }
}

TEST_CASE("mean report averages fields and sums n") {
  MetricsReport a, b;
  a.accuracy = 0.5;
  b.accuracy = 1.0;
  a.n = 3;
  b.n = 4;
  a.per_class[2].f1 = 0.2;
  b.per_class[2].f1 = 0.4;
  const std::vector<MetricsReport> both{a, b};
  const auto m = mean_report(both);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.per_class[2].f1 == doctest::Approx(0.3));
  CHECK(m.n == 7);
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{2, 4, 6, 8, 10}, b{1, 2, 3, 4, 5};
  const auto r = paired_ttest(a, b);
  CHECK(r.t == doctest::Approx(3.0 * std::sqrt(5.0) / std::sqrt(2.5)));
  CHECK(r.df == 4);
  CHECK(r.p == doctest::Approx(student_two_sided(r.t, 4)).epsilon(1e-6));
  CHECK(r.p == doctest::Approx(0.0132).epsilon(0.01));

  const auto same = paired_ttest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  const auto flat = paired_ttest(std::vector<double>{2, 3, 4}, std::vector<double>{1, 2, 3});
  CHECK(flat.p == 0.0);
  CHECK(flat.t > 0.0);
  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("property: t-test p-values match numerical integration") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(12));
    std::vector<double> a, b;
    for (int i = 0; i < k; ++i) {
      a.push_back(rng.uniform());
      b.push_back(rng.uniform());
    }
    const auto r = paired_ttest(a, b);
    CHECK(r.p == doctest::Approx(student_two_sided(r.t, k - 1)).epsilon(1e-6));
    const auto swapped = paired_ttest(b, a);
    CHECK(swapped.t == doctest::Approx(-r.t));
    CHECK(swapped.p == doctest::Approx(r.p));
  }
}

TEST_CASE("two-fold cross-validation evaluates every labeled post once") {
  const auto data = make_synth(small_config(5));
  CvConfig cfg;
  cfg.k = 2;
  cfg.seed = 3;
  cfg.train.rounds = 10;
  const std::vector<std::vector<FeatureSetSpec>> models{{bow_spec()}, {{FeatureGroup::Body, FeatureGroup::Liwc}}};
  const auto results = cross_validate(data.synth.corpus, models, cfg, data.lexicons, data.vectors);
  REQUIRE(results.size() == 2);
  const auto labels = data.synth.corpus.labels();
  for (const auto& per_model : results) {
    REQUIRE(per_model.size() == 2);
    std::set<std::string> seen;
    for (const auto& fold : per_model) {
      CHECK(fold.gold.size() == fold.post_ids.size());
      CHECK(fold.report.n == static_cast<std::int64_t>(fold.post_ids.size()));
      for (std::size_t i = 0; i < fold.post_ids.size(); ++i) {
        CHECK(seen.insert(fold.post_ids[i]).second);
        CHECK(labels.at(fold.post_ids[i]) == fold.gold[i]);
      }
    }
    CHECK(seen.size() == labels.size());
  }
  CHECK(results[0][0].post_ids == results[1][0].post_ids);

  const auto again = cross_validate(data.synth.corpus, models, cfg, data.lexicons, data.vectors);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t f = 0; f < 2; ++f) CHECK(again[m][f].pred == results[m][f].pred);
}

TEST_CASE("cross-validation on an easy synthetic corpus is accurate") {
  SynthConfig sc = small_config(21);
  sc.marker_strength = 3.0;
  const auto data = make_synth(sc);
  CvConfig cfg;
  cfg.k = 3;
  cfg.train.rounds = 20;
  const auto results = cross_validate(data.synth.corpus, {{{FeatureGroup::Body, FeatureGroup::Liwc}}}, cfg,
                                      data.lexicons, data.vectors);
  double acc = 0;
  for (const auto& fold : results[0]) acc += fold.report.accuracy;
  CHECK(acc / 3.0 >= 0.9);
}
