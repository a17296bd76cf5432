#include "triage/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "triage/errors.hpp"

namespace triage {

void TrainConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("eta must be in (0, 1]");
  if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) throw InvalidArgument("min_child_weight must be >= 0");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  if (rounds < 1) throw InvalidArgument("rounds must be >= 1");
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) {
      best = std::max(best, d[i]);
      continue;
    }
    d[static_cast<std::size_t>(n.left)] = d[i] + 1;
    d[static_cast<std::size_t>(n.right)] = d[i] + 1;
  }
  return best;
}

int RegressionTree::num_leaves() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double RegressionTree::predict(const SparseVector& x) const {
  return nodes[static_cast<std::size_t>(leaf_for([&](int f) { return x.coeff(f); }))].value;
}

void RegressionTree::scale(double factor) {
  for (auto& n : nodes)
    if (n.is_leaf()) n.value *= factor;
}

TreeGrower::TreeGrower(const FeatureMatrix& X) : rows_(static_cast<int>(X.rows())), cols_(static_cast<int>(X.cols())) {
  col_start_.assign(static_cast<std::size_t>(cols_) + 1, 0);
  entries_.reserve(static_cast<std::size_t>(X.nonZeros()));
  for (int c = 0; c < cols_; ++c) {
    col_start_[static_cast<std::size_t>(c)] = entries_.size();
    for (FeatureMatrix::InnerIterator it(X, c); it; ++it)
      if (it.value() != 0.0) entries_.push_back({it.value(), static_cast<int>(it.row())});
    std::sort(entries_.begin() + static_cast<std::ptrdiff_t>(col_start_[static_cast<std::size_t>(c)]), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.value != b.value ? a.value < b.value : a.row < b.row; });
  }
  col_start_[static_cast<std::size_t>(cols_)] = entries_.size();
}

namespace {

struct NodeStats {
  double G = 0.0;
  double H = 0.0;
  int count = 0;
};

struct Candidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = kMinSplitGain;
};

// Running state of one open node while scanning a single column.
struct ScanState {
  double nz_G = 0.0, nz_H = 0.0;
  int nz_count = 0;
  double run_G = 0.0, run_H = 0.0;
  double last = 0.0;
  bool has_last = false;
  bool zero_done = false;
};

double leaf_score(double G, double H, double lambda) { return G * G / (H + lambda); }

}  // namespace

RegressionTree TreeGrower::grow(std::span<const double> grad, std::span<const double> hess, const TrainConfig& cfg,
                                std::vector<int>* leaf_of_row) const {
  if (grad.size() != static_cast<std::size_t>(rows_) || hess.size() != grad.size())
    throw InvalidArgument("grow: gradient length " + std::to_string(grad.size()) + " does not match " +
                          std::to_string(rows_) + " rows");
  const auto n = static_cast<std::size_t>(rows_);
  RegressionTree tree;
  std::vector<NodeStats> stats(1);
  tree.nodes.emplace_back();
  for (std::size_t i = 0; i < n; ++i) {
    stats[0].G += grad[i];
    stats[0].H += hess[i];
  }
  stats[0].count = rows_;

  // node id per row, or -1 once the row's node is final
  std::vector<int> pos(n, 0);
  std::vector<int> final_leaf(n, 0);
  std::vector<int> open = {0};
  std::vector<ScanState> scan;
  std::vector<int> touched;

  auto finalize_leaf = [&](int id) {
    auto& s = stats[static_cast<std::size_t>(id)];
    tree.nodes[static_cast<std::size_t>(id)].value = -s.G / (s.H + cfg.lambda);
  };

  for (int depth = 0; !open.empty(); ++depth) {
    if (depth >= cfg.max_depth) {
      for (int id : open) finalize_leaf(id);
      break;
    }
    std::vector<Candidate> best(tree.nodes.size());
    scan.assign(tree.nodes.size(), ScanState{});

    auto consider = [&](int id, int feature, double threshold, double GL, double HL) {
      const auto& s = stats[static_cast<std::size_t>(id)];
      const double GR = s.G - GL, HR = s.H - HL;
      if (HL < cfg.min_child_weight || HR < cfg.min_child_weight) return;
      const double gain =
          0.5 * (leaf_score(GL, HL, cfg.lambda) + leaf_score(GR, HR, cfg.lambda) - leaf_score(s.G, s.H, cfg.lambda)) -
          cfg.gamma;
      auto& b = best[static_cast<std::size_t>(id)];
      if (gain > b.gain) b = {feature, threshold, gain};
    };
    // The implicit zeros of a node sit between its negative and positive entries.
    auto insert_zero_block = [&](int id, int feature) {
      auto& st = scan[static_cast<std::size_t>(id)];
      st.zero_done = true;
      const auto& s = stats[static_cast<std::size_t>(id)];
      if (s.count - st.nz_count == 0) return;
      if (st.has_last) consider(id, feature, st.last / 2.0, st.run_G, st.run_H);
      st.run_G += s.G - st.nz_G;
      st.run_H += s.H - st.nz_H;
      st.last = 0.0;
      st.has_last = true;
    };

    for (int f = 0; f < cols_; ++f) {
      const auto first = entries_.begin() + static_cast<std::ptrdiff_t>(col_start_[static_cast<std::size_t>(f)]);
      const auto last = entries_.begin() + static_cast<std::ptrdiff_t>(col_start_[static_cast<std::size_t>(f) + 1]);
      touched.clear();
      for (auto e = first; e != last; ++e) {
        const int id = pos[static_cast<std::size_t>(e->row)];
        if (id < 0) continue;
        auto& st = scan[static_cast<std::size_t>(id)];
        if (st.nz_count == 0) touched.push_back(id);
        st.nz_G += grad[static_cast<std::size_t>(e->row)];
        st.nz_H += hess[static_cast<std::size_t>(e->row)];
        ++st.nz_count;
      }
      for (auto e = first; e != last; ++e) {
        const int id = pos[static_cast<std::size_t>(e->row)];
        if (id < 0) continue;
        auto& st = scan[static_cast<std::size_t>(id)];
        if (e->value > 0.0 && !st.zero_done) insert_zero_block(id, f);
        if (st.has_last && e->value != st.last) consider(id, f, (st.last + e->value) / 2.0, st.run_G, st.run_H);
        st.run_G += grad[static_cast<std::size_t>(e->row)];
        st.run_H += hess[static_cast<std::size_t>(e->row)];
        st.last = e->value;
        st.has_last = true;
      }
      for (int id : touched) {
        if (!scan[static_cast<std::size_t>(id)].zero_done) insert_zero_block(id, f);
        scan[static_cast<std::size_t>(id)] = ScanState{};
      }
    }

    // Apply the chosen splits.
    std::vector<int> next_open;
    std::vector<int> split_nodes;
    for (int id : open) {
      const Candidate b = best[static_cast<std::size_t>(id)];
      if (b.feature < 0) {
        finalize_leaf(id);
        continue;
      }
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.resize(tree.nodes.size());
      TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.gain = b.gain;
      node.left = left;
      node.right = left + 1;
      node.default_left = 0.0 < b.threshold;
      split_nodes.push_back(id);
      next_open.push_back(left);
      next_open.push_back(left + 1);
    }
    std::vector<int> old_pos = pos;
    for (std::size_t i = 0; i < n; ++i) {
      const int id = old_pos[i];
      if (id < 0) continue;
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.is_leaf()) {
        final_leaf[i] = id;
        pos[i] = -1;
      } else {
        pos[i] = node.default_left ? node.left : node.right;
      }
    }
    std::vector<int> features;
    for (int id : split_nodes) features.push_back(tree.nodes[static_cast<std::size_t>(id)].feature);
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
    for (int f : features) {
      const auto first = entries_.begin() + static_cast<std::ptrdiff_t>(col_start_[static_cast<std::size_t>(f)]);
      const auto last = entries_.begin() + static_cast<std::ptrdiff_t>(col_start_[static_cast<std::size_t>(f) + 1]);
      for (auto e = first; e != last; ++e) {
        const int id = old_pos[static_cast<std::size_t>(e->row)];
        if (id < 0) continue;
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        if (node.is_leaf() || node.feature != f) continue;
        pos[static_cast<std::size_t>(e->row)] = e->value < node.threshold ? node.left : node.right;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (pos[i] < 0) continue;
      auto& s = stats[static_cast<std::size_t>(pos[i])];
      s.G += grad[i];
      s.H += hess[i];
      ++s.count;
    }
    open = std::move(next_open);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (pos[i] >= 0) final_leaf[i] = pos[i];
  if (leaf_of_row) *leaf_of_row = std::move(final_leaf);
  return tree;
}

RegressionTree grow_tree(const Eigen::VectorXd& grad, const Eigen::VectorXd& hess, const FeatureMatrix& X,
                         const TrainConfig& cfg) {
  cfg.validate();
  return TreeGrower(X).grow({grad.data(), static_cast<std::size_t>(grad.size())},
                            {hess.data(), static_cast<std::size_t>(hess.size())}, cfg);
}

RegressionTree grow_tree(const Eigen::VectorXd& grad, const Eigen::VectorXd& hess, const Eigen::MatrixXd& X,
                         const TrainConfig& cfg) {
  FeatureMatrix sparse = X.sparseView(1.0, 0.0);
  return grow_tree(grad, hess, sparse, cfg);
}

double total_softmax_loss(const Eigen::MatrixXd& margins, std::span<const SeverityLabel> y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.rows(); ++i)
    loss += softmax_loss(margins.row(i).transpose(), index_of(y[static_cast<std::size_t>(i)]));
  return loss;
}

BoostedForest train(const FeatureMatrix& X, std::span<const SeverityLabel> y, const TrainConfig& cfg,
                    std::vector<double>* loss_trace) {
  cfg.validate();
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw InvalidArgument("train: " + std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  if (y.empty()) throw InvalidArgument("train: no training rows");
  const Eigen::Index n = X.rows();
  BoostedForest forest;
  forest.num_features = static_cast<int>(X.cols());
  const TreeGrower grower(X);
  Eigen::MatrixXd margins = Eigen::MatrixXd::Constant(n, kNumClasses, forest.base_margin);
  // Column-major so each class's gradient column is contiguous.
  Eigen::MatrixXd grad(n, kNumClasses), hess(n, kNumClasses);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(total_softmax_loss(margins, y));
  }
  std::vector<int> leaf_of_row;
  for (int round = 0; round < cfg.rounds; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto gh = softmax_grad_hess(margins.row(i).transpose(), index_of(y[static_cast<std::size_t>(i)]));
      grad.row(i) = gh.grad.transpose();
      hess.row(i) = gh.hess.transpose();
    }
    for (int c = 0; c < kNumClasses; ++c) {
      RegressionTree tree = grower.grow({grad.col(c).data(), static_cast<std::size_t>(n)},
                                        {hess.col(c).data(), static_cast<std::size_t>(n)}, cfg, &leaf_of_row);
      tree.scale(cfg.eta);
      for (Eigen::Index i = 0; i < n; ++i)
        margins(i, c) += tree.nodes[static_cast<std::size_t>(leaf_of_row[static_cast<std::size_t>(i)])].value;
      forest.trees[static_cast<std::size_t>(c)].push_back(std::move(tree));
    }
    if (loss_trace) loss_trace->push_back(total_softmax_loss(margins, y));
  }
  return forest;
}

BoostedForest train(const Eigen::MatrixXd& X, std::span<const SeverityLabel> y, const TrainConfig& cfg,
                    std::vector<double>* loss_trace) {
  FeatureMatrix sparse = X.sparseView(1.0, 0.0);
  return train(sparse, y, cfg, loss_trace);
}

namespace {

template <typename Lookup>
Eigen::Vector4d margins_of(const BoostedForest& forest, Lookup&& value_of) {
  Eigen::Vector4d m = Eigen::Vector4d::Constant(forest.base_margin);
  for (int c = 0; c < kNumClasses; ++c)
    for (const auto& tree : forest.trees[static_cast<std::size_t>(c)])
      m[c] += tree.nodes[static_cast<std::size_t>(tree.leaf_for(value_of))].value;
  return m;
}

}  // namespace

Eigen::Vector4d predict_margins(const BoostedForest& forest, const SparseVector& x) {
  if (x.size() != forest.num_features)
    throw InvalidArgument("predict: feature vector has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(forest.num_features));
  return margins_of(forest, [&](int f) { return x.coeff(f); });
}

Eigen::Vector4d predict_proba(const BoostedForest& forest, const SparseVector& x) {
  return softmax(predict_margins(forest, x));
}

Eigen::MatrixXd predict_proba(const BoostedForest& forest, const RowFeatureMatrix& X) {
  if (X.cols() != forest.num_features)
    throw InvalidArgument("predict: feature matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                          std::to_string(forest.num_features));
  Eigen::MatrixXd out(X.rows(), kNumClasses);
  for (Eigen::Index r = 0; r < X.outerSize(); ++r) {
    const int* idx = X.innerIndexPtr() + X.outerIndexPtr()[r];
    const double* val = X.valuePtr() + X.outerIndexPtr()[r];
    const int nnz = X.isCompressed() ? X.outerIndexPtr()[r + 1] - X.outerIndexPtr()[r] : X.innerNonZeroPtr()[r];
    auto lookup = [&](int f) {
      const int* it = std::lower_bound(idx, idx + nnz, f);
      return it != idx + nnz && *it == f ? val[it - idx] : 0.0;
    };
    out.row(r) = softmax(margins_of(forest, lookup)).transpose();
  }
  return out;
}

SeverityLabel argmax_label(const Eigen::Vector4d& proba) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (proba[c] > proba[best]) best = c;
  return label_at(best);
}

SeverityLabel predict(const BoostedForest& forest, const SparseVector& x) {
  return argmax_label(predict_proba(forest, x));
}

std::vector<SeverityLabel> predict(const BoostedForest& forest, const RowFeatureMatrix& X) {
  const Eigen::MatrixXd p = predict_proba(forest, X);
  std::vector<SeverityLabel> out;
  out.reserve(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) out.push_back(argmax_label(p.row(r).transpose()));
  return out;
}

}  // namespace triage
