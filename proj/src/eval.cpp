#include "triage/eval.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "triage/errors.hpp"

namespace triage {

ConfusionMatrix confusion(std::span<const SeverityLabel> gold, std::span<const SeverityLabel> pred) {
  if (gold.size() != pred.size())
    throw InvalidArgument("confusion: " + std::to_string(gold.size()) + " gold labels but " +
                          std::to_string(pred.size()) + " predictions");
  if (gold.empty()) throw InvalidArgument("confusion: no labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts(index_of(gold[i]), index_of(pred[i]));
  return cm;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double f1_from(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

ClassScores binary_scores(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = f1_from(s.precision, s.recall);
  return s;
}

double macro_nongreen(const std::array<double, kNumClasses>& per_class) {
  return (per_class[1] + per_class[2] + per_class[3]) / 3.0;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const auto& c = cm.counts;
  MetricsReport r;
  r.n = cm.total();
  if (r.n <= 0) throw InvalidArgument("metrics: empty confusion matrix");
  std::array<double, kNumClasses> f1{}, prec{}, rec{};
  for (int k = 0; k < kNumClasses; ++k) {
    const std::int64_t tp = c(k, k);
    const std::int64_t fp = c.col(k).sum() - tp;
    const std::int64_t fn = c.row(k).sum() - tp;
    auto& s = r.per_class[static_cast<std::size_t>(k)];
    s = binary_scores(tp, fp, fn);
    f1[static_cast<std::size_t>(k)] = s.f1;
    prec[static_cast<std::size_t>(k)] = s.precision;
    rec[static_cast<std::size_t>(k)] = s.recall;
  }
  r.accuracy = ratio(c.trace(), r.n);
  r.macro_f1_nongreen = macro_nongreen(f1);
  r.macro_precision_nongreen = macro_nongreen(prec);
  r.macro_recall_nongreen = macro_nongreen(rec);

  // Binarized views: positive = classes from `first` upward.
  auto binary = [&](int first, double& f1_out, double& acc_out) {
    const auto n = c.rows();
    const std::int64_t tp = c.bottomRightCorner(n - first, n - first).sum();
    const std::int64_t fn = c.bottomLeftCorner(n - first, first).sum();
    const std::int64_t fp = c.topRightCorner(first, n - first).sum();
    const std::int64_t tn = c.topLeftCorner(first, first).sum();
    f1_out = binary_scores(tp, fp, fn).f1;
    acc_out = ratio(tp + tn, r.n);
  };
  binary(index_of(SeverityLabel::Amber), r.flagged_f1, r.flagged_acc);
  binary(index_of(SeverityLabel::Red), r.urgent_f1, r.urgent_acc);
  return r;
}

MetricsReport evaluate(std::span<const SeverityLabel> gold, std::span<const SeverityLabel> pred) {
  return metrics(confusion(gold, pred));
}

MetricsReport mean_report(std::span<const MetricsReport> reports) {
  MetricsReport m;
  if (reports.empty()) return m;
  const double k = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < m.per_class.size(); ++c) {
      m.per_class[c].precision += r.per_class[c].precision / k;
      m.per_class[c].recall += r.per_class[c].recall / k;
      m.per_class[c].f1 += r.per_class[c].f1 / k;
    }
    m.accuracy += r.accuracy / k;
    m.macro_f1_nongreen += r.macro_f1_nongreen / k;
    m.macro_precision_nongreen += r.macro_precision_nongreen / k;
    m.macro_recall_nongreen += r.macro_recall_nongreen / k;
    m.flagged_f1 += r.flagged_f1 / k;
    m.flagged_acc += r.flagged_acc / k;
    m.urgent_f1 += r.urgent_f1 / k;
    m.urgent_acc += r.urgent_acc / k;
    m.n += r.n;
  }
  return m;
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired_ttest: samples differ in length");
  if (a.size() < 2) throw InvalidArgument("paired_ttest: need at least 2 pairs");
  const auto k = static_cast<Eigen::Index>(a.size());
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(a.data(), k) - Eigen::Map<const Eigen::VectorXd>(b.data(), k);
  TTestResult r;
  r.df = static_cast<int>(k) - 1;
  const double mean = d.mean();
  const double var = (d.array() - mean).square().sum() / r.df;
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, 1.0, r.df};
    r.t = mean > 0.0 ? INFINITY : -INFINITY;
    r.p = 0.0;
    return r;
  }
  r.t = mean / std::sqrt(var / static_cast<double>(k));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::vector<std::vector<FoldResult>> cross_validate(const Corpus& corpus,
                                                    const std::vector<std::vector<FeatureSetSpec>>& models,
                                                    const CvConfig& cfg, std::shared_ptr<const Lexicons> lexicons,
                                                    std::shared_ptr<const VectorStore> vectors) {
  if (models.empty()) throw InvalidArgument("cross_validate: no models");
  const auto labels = corpus.labels();
  const FoldAssignment folds = stratified_folds(labels, cfg.k, cfg.seed);
  ResourceConfig rcfg = cfg.resources;
  rcfg.train_lda = std::any_of(models.begin(), models.end(),
                               [](const auto& specs) { return uses_group(specs, FeatureGroup::Topic); });

  std::vector<std::vector<FoldResult>> out(models.size());
  for (int f = 0; f < cfg.k; ++f) {
    std::vector<std::string> train_ids, test_ids;
    for (const auto& [id, fold] : folds.fold_of) (fold == f ? test_ids : train_ids).push_back(id);
    auto res = std::make_shared<const Resources>(
        build_resources(corpus, train_ids, test_ids, rcfg, lexicons, vectors));
    const FeatureExtractor fx(corpus, res);
    const auto train_posts = posts_by_id(corpus, train_ids);
    const auto test_posts = posts_by_id(corpus, test_ids);
    std::vector<SeverityLabel> gold;
    for (const Post* p : test_posts) gold.push_back(*p->label);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const EnsembleModel model = train_ensemble(fx, train_posts, models[m], cfg.train);
      FoldResult fr;
      fr.fold = f;
      fr.post_ids = test_ids;
      fr.gold = gold;
      fr.pred = predict(model, fx, test_posts);
      fr.report = evaluate(fr.gold, fr.pred);
      out[m].push_back(std::move(fr));
    }
  }
  return out;
}

}  // namespace triage
