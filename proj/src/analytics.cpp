#include "triage/analytics.hpp"

#include <chrono>
#include <cmath>
#include <tuple>

namespace triage {

double numeric_severity(SeverityLabel label) {
  switch (label) {
    case SeverityLabel::Crisis:
      return 1.0;
    case SeverityLabel::Red:
      return 0.66;
    case SeverityLabel::Amber:
      return 0.33;
    case SeverityLabel::Green:
      return 0.0;
  }
  return 0.0;
}

double severity_value(SeverityLabel label, SeverityScale scale) {
  if (scale == SeverityScale::FlaggedBinary) return is_flagged(label) ? 1.0 : 0.0;
  return numeric_severity(label);
}

int month_number(Timestamp t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

std::vector<MonthlyPoint> monthly_series(std::span<const DatedLabel> posts, SeverityScale scale) {
  std::map<int, std::pair<double, int>> by_month;
  for (const auto& p : posts) {
    auto& [sum, n] = by_month[month_number(p.timestamp)];
    sum += severity_value(p.label, scale);
    ++n;
  }
  std::vector<MonthlyPoint> out;
  if (by_month.empty()) return out;
  const int first = by_month.begin()->first;
  for (const auto& [month, acc] : by_month) out.push_back({month - first, acc.first / acc.second, acc.second});
  return out;
}

TrendLine fit_trend(std::span<const MonthlyPoint> points) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(points.size())), y(x.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = points[i].x;
    y[static_cast<Eigen::Index>(i)] = points[i].y;
  }
  return fit_line(x, y);
}

namespace {

// Mean and sample standard deviation.
std::pair<double, double> mean_stdev(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const Eigen::Map<const Eigen::VectorXd> m(v.data(), static_cast<Eigen::Index>(v.size()));
  const double mean = m.mean();
  if (v.size() < 2) return {mean, 0.0};
  return {mean, std::sqrt((m.array() - mean).square().sum() / static_cast<double>(v.size() - 1))};
}

}  // namespace

TrendSummary trend_summary(std::span<const TrendLine> lines, std::optional<double> threshold) {
  const double tau = threshold.value_or(0.0);
  std::vector<double> kept;
  TrendSummary s;
  for (const auto& l : lines) {
    if (threshold && !(std::abs(l.m) > tau)) continue;
    kept.push_back(l.m);
    if (l.m > tau) ++s.positive;
    if (l.m < -tau) ++s.negative;
  }
  s.retained = static_cast<int>(kept.size());
  s.empty = kept.empty();
  std::tie(s.avg_slope, s.stdev_slope) = mean_stdev(kept);
  return s;
}

GoodnessOfFit goodness_of_fit(std::span<const TrendLine> lines) {
  std::vector<double> pos, neg;
  for (const auto& l : lines) {
    if (l.m > 0.0) pos.push_back(l.r);
    if (l.m < 0.0) neg.push_back(l.r);
  }
  GoodnessOfFit g;
  std::tie(g.positive.mean, g.positive.stdev) = mean_stdev(pos);
  std::tie(g.negative.mean, g.negative.stdev) = mean_stdev(neg);
  g.positive.count = static_cast<int>(pos.size());
  g.negative.count = static_cast<int>(neg.size());
  return g;
}

double chi_square_sf1(double x) { return x <= 0.0 ? 1.0 : std::erfc(std::sqrt(x / 2.0)); }

ChiSquareResult chi_square(const ContingencyTable2x2& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) throw InvalidArgument("chi_square: negative cell count");
  const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0.0 || r2 == 0.0 || c1 == 0.0 || c2 == 0.0)
    throw InvalidArgument("chi_square: a row or column total is zero");
  const double n = r1 + r2;
  const double diff = a * d - b * c;
  ChiSquareResult r;
  r.statistic = n * diff * diff / (r1 * r2 * c1 * c2);
  r.p = chi_square_sf1(r.statistic);
  return r;
}

int activity_months(std::span<const DatedLabel> posts) {
  if (posts.empty()) return 0;
  int lo = month_number(posts.front().timestamp), hi = lo;
  for (const auto& p : posts) {
    const int m = month_number(p.timestamp);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  return hi - lo + 1;
}

Activity classify_activity(std::span<const DatedLabel> posts) {
  return activity_months(posts) >= 2 ? Activity::Active : Activity::Inactive;
}

std::vector<UserHistory> user_histories(const Corpus& corpus, const std::map<std::string, SeverityLabel>& severities) {
  std::vector<UserHistory> out;
  for (const auto& [author, posts] : corpus.posts_by_author()) {
    UserHistory h{author, {}};
    for (const Post* p : posts)
      if (auto it = severities.find(p->post_id); it != severities.end()) h.posts.push_back({p->timestamp, it->second});
    if (!h.posts.empty()) out.push_back(std::move(h));
  }
  return out;
}

namespace {

struct FirstLast {
  bool first;
  bool last;
};

bool positive_label(SeverityLabel l, TableScheme scheme) {
  return scheme == TableScheme::PostUrgent || scheme == TableScheme::MonthUrgent ? is_urgent(l) : is_flagged(l);
}

std::optional<FirstLast> first_last(const UserHistory& u, TableScheme scheme) {
  if (classify_activity(u.posts) != Activity::Active) return std::nullopt;
  if (scheme == TableScheme::PostFlagged || scheme == TableScheme::PostUrgent) {
    if (u.posts.size() < 2) return std::nullopt;
    return FirstLast{positive_label(u.posts.front().label, scheme), positive_label(u.posts.back().label, scheme)};
  }
  const auto series = monthly_series(u.posts, SeverityScale::Fine);
  if (series.size() < 2) return std::nullopt;
  const double cut = scheme == TableScheme::MonthUrgent ? kUrgentMonthThreshold : kFlaggedMonthThreshold;
  return FirstLast{series.front().y >= cut, series.back().y >= cut};
}

int cell_of(const FirstLast& fl) { return (fl.last ? 0 : 2) + (fl.first ? 0 : 1); }

}  // namespace

ContingencyTable2x2 first_last_table(std::span<const UserHistory> users, TableScheme scheme) {
  std::array<std::int64_t, 4> cells{};
  for (const auto& u : users)
    if (auto fl = first_last(u, scheme)) ++cells[static_cast<std::size_t>(cell_of(*fl))];
  return {cells[0], cells[1], cells[2], cells[3]};
}

DurationTable duration_table(std::span<const UserHistory> users, TableScheme scheme) {
  std::array<double, 4> sum{};
  std::array<int, 4> n{};
  for (const auto& u : users)
    if (auto fl = first_last(u, scheme)) {
      const auto cell = static_cast<std::size_t>(cell_of(*fl));
      sum[cell] += activity_months(u.posts);
      ++n[cell];
    }
  auto mean = [&](std::size_t i) { return n[i] == 0 ? 0.0 : sum[i] / n[i]; };
  return {mean(0), mean(1), mean(2), mean(3)};
}

ResponseStats response_stats(const Corpus& corpus, const std::map<std::string, SeverityLabel>& severities) {
  std::array<std::vector<double>, kNumClasses> hours;
  std::array<std::int64_t, kNumClasses> totals{};
  for (const auto& tid : corpus.thread_ids()) {
    const ThreadView thread = corpus.thread(tid);
    for (std::size_t i = 0; i < thread.posts.size(); ++i) {
      const Post& p = *thread.posts[i];
      if (p.author_role != AuthorRole::Member) continue;
      auto sev = severities.find(p.post_id);
      if (sev == severities.end()) continue;
      const auto cls = static_cast<std::size_t>(index_of(sev->second));
      ++totals[cls];
      for (std::size_t j = i + 1; j < thread.posts.size(); ++j) {
        const Post& reply = *thread.posts[j];
        if (reply.author_id == p.author_id) continue;
        if (reply.author_role == AuthorRole::Moderator)
          hours[cls].push_back(std::chrono::duration<double, std::ratio<3600>>(reply.timestamp - p.timestamp).count());
        break;
      }
    }
  }
  auto row = [](std::int64_t total, const std::vector<double>& h) {
    ResponseRow r;
    r.total = total;
    r.moderator_first = static_cast<std::int64_t>(h.size());
    r.percentage = total == 0 ? 0.0 : 100.0 * static_cast<double>(r.moderator_first) / static_cast<double>(total);
    std::tie(r.mean_hours, r.stdev_hours) = mean_stdev(h);
    return r;
  };
  ResponseStats s;
  std::vector<double> urgent_h, flagged_h;
  std::int64_t urgent_n = 0, flagged_n = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto k = static_cast<std::size_t>(c);
    s.per_class[k] = row(totals[k], hours[k]);
    if (is_urgent(label_at(c))) {
      urgent_h.insert(urgent_h.end(), hours[k].begin(), hours[k].end());
      urgent_n += totals[k];
    }
    if (is_flagged(label_at(c))) {
      flagged_h.insert(flagged_h.end(), hours[k].begin(), hours[k].end());
      flagged_n += totals[k];
    }
  }
  s.urgent = row(urgent_n, urgent_h);
  s.flagged = row(flagged_n, flagged_h);
  return s;
}

}  // namespace triage
