#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "triage/ensemble.hpp"
#include "triage/severity.hpp"

namespace triage {

/// Rows are gold labels, columns predictions, both in GREEN..CRISIS order.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, kNumClasses, kNumClasses> counts = decltype(counts)::Zero();

  std::int64_t total() const { return counts.sum(); }
  bool operator==(const ConfusionMatrix& o) const { return counts == o.counts; }
};

/// Throws InvalidArgument when lengths differ or are zero.
ConfusionMatrix confusion(std::span<const SeverityLabel> gold, std::span<const SeverityLabel> pred);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// 0/0 ratios count as 0.
ClassScores binary_scores(std::int64_t tp, std::int64_t fp, std::int64_t fn);
double f1_from(double precision, double recall);

struct MetricsReport {
  std::array<ClassScores, kNumClasses> per_class{};
  double accuracy = 0.0;
  double macro_f1_nongreen = 0.0;
  double macro_precision_nongreen = 0.0;
  double macro_recall_nongreen = 0.0;
  double flagged_f1 = 0.0;
  double flagged_acc = 0.0;
  double urgent_f1 = 0.0;
  double urgent_acc = 0.0;
  std::int64_t n = 0;
};

/// Mean of the AMBER, RED and CRISIS entries; the GREEN entry is ignored.
double macro_nongreen(const std::array<double, kNumClasses>& per_class);

MetricsReport metrics(const ConfusionMatrix& cm);
MetricsReport evaluate(std::span<const SeverityLabel> gold, std::span<const SeverityLabel> pred);

/// Field-wise mean of several reports (n is summed).
MetricsReport mean_report(std::span<const MetricsReport> reports);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
};

/// Two-sided paired t-test on a - b.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

struct CvConfig {
  int k = 10;
  std::uint64_t seed = 1;
  ResourceConfig resources;
  TrainConfig train;
};

struct FoldResult {
  int fold = 0;
  std::vector<std::string> post_ids;
  std::vector<SeverityLabel> gold;
  std::vector<SeverityLabel> pred;
  MetricsReport report;
};

/// Stratified k-fold evaluation of several models over the same folds. Each entry of
/// `models` is a list of member specs (one spec = a single model). Vocabulary and LDA
/// are rebuilt per fold from the training folds. Result is indexed [model][fold].
std::vector<std::vector<FoldResult>> cross_validate(const Corpus& corpus,
                                                    const std::vector<std::vector<FeatureSetSpec>>& models,
                                                    const CvConfig& cfg, std::shared_ptr<const Lexicons> lexicons,
                                                    std::shared_ptr<const VectorStore> vectors);

}  // namespace triage
