#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "triage/severity.hpp"
#include "triage/textprep.hpp"

namespace triage {

/// Samples x features. Entries that are not stored are 0.0, which is also how
/// missing values are treated.
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using RowFeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct TrainConfig {
  double eta = 0.3;
  int max_depth = 6;
  double min_child_weight = 1.0;
  /// L2 penalty on leaf weights.
  double lambda = 1.0;
  /// Penalty per additional leaf.
  double gamma = 0.0;
  int rounds = 100;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Splits must improve the objective by more than this to be taken.
inline constexpr double kMinSplitGain = 1e-12;
/// Lower clamp for per-row hessians.
inline constexpr double kMinHessian = 1e-16;

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& margins) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = margins.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (margins.array() - top).exp().matrix();
  return e / e.sum();
}

/// Softmax cross-entropy loss of one row: -log softmax(margins)[true_class].
template <typename Derived>
typename Derived::Scalar softmax_loss(const Eigen::MatrixBase<Derived>& margins, int true_class) {
  using std::exp;
  using std::log;
  const auto top = margins.maxCoeff();
  return top + log((margins.array() - top).exp().sum()) - margins(true_class);
}

template <typename Scalar>
struct GradHess {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> hess;
};

/// g_c = p_c - [c == true_class], h_c = max(p_c (1 - p_c), 1e-16) with p = softmax(margins).
template <typename Derived>
GradHess<typename Derived::Scalar> softmax_grad_hess(const Eigen::MatrixBase<Derived>& margins, int true_class) {
  using Scalar = typename Derived::Scalar;
  GradHess<Scalar> out;
  const auto p = softmax(margins);
  out.grad = p;
  out.grad(true_class) -= Scalar(1);
  out.hess = (p.array() * (Scalar(1) - p.array())).max(Scalar(kMinHessian)).matrix();
  return out;
}

struct TreeNode {
  /// -1 marks a leaf.
  int feature = -1;
  /// Rows with value < threshold go left.
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Direction taken by absent (zero) values; always equals 0 < threshold.
  bool default_left = false;
  /// Leaf output.
  double value = 0.0;
  /// Objective improvement of the split at an internal node.
  double gain = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  /// nodes[0] is the root.
  std::vector<TreeNode> nodes;

  /// Longest root-to-leaf path in edges.
  int depth() const;
  int num_leaves() const;

  /// Index of the leaf reached by x; `value_of(feature)` returns the feature value.
  template <typename Lookup>
  int leaf_for(Lookup&& value_of) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = value_of(n.feature) < n.threshold ? n.left : n.right;
    }
    return i;
  }
  double predict(const SparseVector& x) const;

  /// Multiplies every leaf output by factor.
  void scale(double factor);

  bool operator==(const RegressionTree&) const = default;
};

/// Per-class additive trees. trees[c][r] is the round-r tree of class c.
struct BoostedForest {
  std::array<std::vector<RegressionTree>, kNumClasses> trees;
  double base_margin = 0.0;
  int num_features = 0;

  int rounds() const { return static_cast<int>(trees[0].size()); }
  bool operator==(const BoostedForest&) const = default;
};

/// Presorted nonzero entries of every column; reusable across the trees of one training run.
class TreeGrower {
 public:
  explicit TreeGrower(const FeatureMatrix& X);

  /// Exact greedy depth-wise growth. If leaf_of_row is given it receives the leaf index of every row.
  RegressionTree grow(std::span<const double> grad, std::span<const double> hess, const TrainConfig& cfg,
                      std::vector<int>* leaf_of_row = nullptr) const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  struct Entry {
    double value;
    int row;
  };
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> col_start_;
  std::vector<Entry> entries_;
};

RegressionTree grow_tree(const Eigen::VectorXd& grad, const Eigen::VectorXd& hess, const FeatureMatrix& X,
                         const TrainConfig& cfg);
RegressionTree grow_tree(const Eigen::VectorXd& grad, const Eigen::VectorXd& hess, const Eigen::MatrixXd& X,
                         const TrainConfig& cfg);

/// Summed softmax cross-entropy over rows of margins (n x 4).
double total_softmax_loss(const Eigen::MatrixXd& margins, std::span<const SeverityLabel> y);

/// Boosts one tree per class per round. If loss_trace is given it receives the
/// summed training loss before the first round and after every round.
BoostedForest train(const FeatureMatrix& X, std::span<const SeverityLabel> y, const TrainConfig& cfg,
                    std::vector<double>* loss_trace = nullptr);
BoostedForest train(const Eigen::MatrixXd& X, std::span<const SeverityLabel> y, const TrainConfig& cfg,
                    std::vector<double>* loss_trace = nullptr);

/// Per-class margin sums. Throws InvalidArgument on dimension mismatch.
Eigen::Vector4d predict_margins(const BoostedForest& forest, const SparseVector& x);
Eigen::Vector4d predict_proba(const BoostedForest& forest, const SparseVector& x);
/// One row of probabilities per sample.
Eigen::MatrixXd predict_proba(const BoostedForest& forest, const RowFeatureMatrix& X);

/// Argmax; ties go to the earliest class in GREEN, AMBER, RED, CRISIS order.
SeverityLabel argmax_label(const Eigen::Vector4d& proba);
SeverityLabel predict(const BoostedForest& forest, const SparseVector& x);
std::vector<SeverityLabel> predict(const BoostedForest& forest, const RowFeatureMatrix& X);

}  // namespace triage
