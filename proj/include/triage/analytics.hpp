#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "triage/corpus.hpp"
#include "triage/errors.hpp"
#include "triage/severity.hpp"

namespace triage {

/// CRISIS 1.0, RED 0.66, AMBER 0.33, GREEN 0.0.
double numeric_severity(SeverityLabel label);

enum class SeverityScale {
  /// numeric_severity values.
  Fine,
  /// 1.0 for flagged, 0.0 for GREEN.
  FlaggedBinary,
};
double severity_value(SeverityLabel label, SeverityScale scale);

/// Cut points on monthly mean fine severity: midpoints of GREEN/AMBER and AMBER/RED.
inline constexpr double kFlaggedMonthThreshold = 0.165;
inline constexpr double kUrgentMonthThreshold = 0.495;

struct DatedLabel {
  Timestamp timestamp;
  SeverityLabel label;
};

/// Months since year 0 of the UTC calendar month containing t.
int month_number(Timestamp t);

struct MonthlyPoint {
  /// Calendar months since the first active month.
  int x = 0;
  /// Mean severity of that month's posts.
  double y = 0.0;
  int posts = 0;
};

/// One point per calendar month with posts, ordered by month.
std::vector<MonthlyPoint> monthly_series(std::span<const DatedLabel> posts, SeverityScale scale = SeverityScale::Fine);

struct TrendLine {
  double m = 0.0;
  double b = 0.0;
  /// Pearson correlation; 0 when either series has zero variance.
  double r = 0.0;
};

/// Closed-form least squares y ~ m x + b. Throws InvalidArgument with fewer than two distinct x.
template <typename DerivedX, typename DerivedY>
TrendLine fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using std::sqrt;
  if (x.size() != y.size()) throw InvalidArgument("fit_line: x and y differ in length");
  if (x.size() < 2) throw InvalidArgument("fit_line: need at least 2 points");
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double syy = (y.array() - my).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  if (sxx == 0.0) throw InvalidArgument("fit_line: need at least 2 distinct x values");
  TrendLine t;
  t.m = sxy / sxx;
  t.b = my - t.m * mx;
  t.r = syy == 0.0 ? 0.0 : std::clamp(sxy / sqrt(sxx * syy), -1.0, 1.0);
  return t;
}

TrendLine fit_trend(std::span<const MonthlyPoint> points);

struct TrendSummary {
  double avg_slope = 0.0;
  /// Sample standard deviation of the retained slopes.
  double stdev_slope = 0.0;
  int positive = 0;
  int negative = 0;
  int retained = 0;
  /// True when no slope survived the filter; averages are then reported as 0.
  bool empty = true;
};

/// Keeps lines with |m| > threshold (all lines when no threshold is given).
TrendSummary trend_summary(std::span<const TrendLine> lines, std::optional<double> threshold);

struct RStats {
  double mean = 0.0;
  double stdev = 0.0;
  int count = 0;
};

/// Mean and sample standard deviation of r over lines with positive and with negative slope.
struct GoodnessOfFit {
  RStats positive;
  RStats negative;
};
GoodnessOfFit goodness_of_fit(std::span<const TrendLine> lines);

/// Users by first (columns) and last (rows) state; the positive state comes first.
///            first+  first-
///   last+      a       b
///   last-      c       d
struct ContingencyTable2x2 {
  std::int64_t a = 0, b = 0, c = 0, d = 0;

  std::int64_t total() const { return a + b + c + d; }
  bool operator==(const ContingencyTable2x2&) const = default;
};

struct ChiSquareResult {
  double statistic = 0.0;
  double p = 1.0;
};

/// Pearson chi-square with 1 degree of freedom and no continuity correction.
/// Throws InvalidArgument when a row or column total is zero.
ChiSquareResult chi_square(const ContingencyTable2x2& t);

/// Upper tail of the chi-square distribution with 1 degree of freedom.
double chi_square_sf1(double x);

enum class Activity { Active, Inactive };

/// Active iff the posts fall into at least two distinct calendar months.
Activity classify_activity(std::span<const DatedLabel> posts);

struct UserHistory {
  std::string author_id;
  /// Chronological.
  std::vector<DatedLabel> posts;
};

/// Per-author chronological histories over the posts that have a severity.
std::vector<UserHistory> user_histories(const Corpus& corpus, const std::map<std::string, SeverityLabel>& severities);

enum class TableScheme { PostFlagged, PostUrgent, MonthFlagged, MonthUrgent };

/// First/last state of every active user. Post schemes need two posts, month schemes two active months.
ContingencyTable2x2 first_last_table(std::span<const UserHistory> users, TableScheme scheme);

/// Mean activity duration in months (inclusive span from first to last active month)
/// of the users in each cell of the matching month-scheme table; 0 for an empty cell.
struct DurationTable {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};
DurationTable duration_table(std::span<const UserHistory> users, TableScheme scheme);

/// Inclusive number of calendar months from the first to the last post.
int activity_months(std::span<const DatedLabel> posts);

struct ResponseRow {
  std::int64_t total = 0;
  std::int64_t moderator_first = 0;
  double percentage = 0.0;
  double mean_hours = 0.0;
  /// Sample standard deviation; 0 with fewer than two cases.
  double stdev_hours = 0.0;
};

struct ResponseStats {
  std::array<ResponseRow, kNumClasses> per_class{};
  ResponseRow urgent;
  ResponseRow flagged;
};

/// For each member post with a severity, the first later post in its thread by a different
/// author is its first response. Times aggregate over moderator-first responses only.
ResponseStats response_stats(const Corpus& corpus, const std::map<std::string, SeverityLabel>& severities);

}  // namespace triage
