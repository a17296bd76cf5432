#pragma once

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "triage/gbt.hpp"
#include "triage/rng.hpp"
#include "triage/severity.hpp"

namespace triage::testing {

inline double gaussian(Rng& rng) {
  const double u = 1.0 - rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.141592653589793 * rng.uniform());
}

struct BruteSplit {
  double gain = kMinSplitGain;
  bool found = false;
};

inline double split_gain(double GL, double HL, double GR, double HR, double lambda, double gamma) {
  auto score = [&](double G, double H) { return G * G / (H + lambda); };
  return 0.5 * (score(GL, HL) + score(GR, HR) - score(GL + GR, HL + HR)) - gamma;
}

// Evaluates every midpoint of every column directly from the dense data.
inline BruteSplit brute_root(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                             const TrainConfig& cfg) {
  BruteSplit best;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    std::set<double> values(X.col(f).data(), X.col(f).data() + X.rows());
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const double t = (sorted[i] + sorted[i + 1]) / 2.0;
      double GL = 0, HL = 0, GR = 0, HR = 0;
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        if (X(r, f) < t) {
          GL += g[r];
          HL += h[r];
        } else {
          GR += g[r];
          HR += h[r];
        }
      }
      if (HL < cfg.min_child_weight || HR < cfg.min_child_weight) continue;
      const double gain = split_gain(GL, HL, GR, HR, cfg.lambda, cfg.gamma);
      if (gain > best.gain) best = {gain, true};
    }
  }
  return best;
}

inline double gain_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, const Eigen::VectorXd& h, int f, double t,
                      const TrainConfig& cfg) {
  double GL = 0, HL = 0, GR = 0, HR = 0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    (X(r, f) < t ? GL : GR) += g[r];
    (X(r, f) < t ? HL : HR) += h[r];
  }
  return split_gain(GL, HL, GR, HR, cfg.lambda, cfg.gamma);
}

// Small integer grid with negatives and many zeros so ties and the implicit-zero path are exercised.
inline Eigen::MatrixXd random_features(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd X(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) X(r, c) = rng.bernoulli(0.4) ? 0.0 : static_cast<double>(rng.below(9)) - 3.0;
  return X;
}

// Count the votes, then take the most severe of the most frequent labels.
inline SeverityLabel brute_vote(const std::vector<SeverityLabel>& votes) {
  std::array<int, kNumClasses> counts{};
  for (auto v : votes) ++counts[static_cast<std::size_t>(index_of(v))];
  int best = kNumClasses - 1;
  for (int c = kNumClasses - 2; c >= 0; --c)
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
  return label_at(best);
}

}  // namespace triage::testing
