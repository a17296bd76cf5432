// Acceptance checks, one line per criterion. Exit status is nonzero if any fails.
#include <Eigen/QR>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "lda_fixture.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "triage/analytics.hpp"
#include "triage/ensemble.hpp"
#include "triage/eval.hpp"
#include "triage/gbt.hpp"
#include "triage/synthgen.hpp"
#include "triage/topics.hpp"

using namespace triage;
using namespace triage::testing;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome chi_square_reproduction() {
  Outcome o;
  const double month_flagged = chi_square({120, 46, 78, 208}).statistic;
  const double month_urgent = chi_square({40, 31, 64, 317}).statistic;
  const double post_urgent = chi_square({30, 16, 126, 280}).statistic;
  const double post_flagged = chi_square({93, 37, 105, 220}).statistic;
  o.require(std::abs(month_flagged - 86.47) <= 0.05, "month flagged " + fmt(month_flagged));
  o.require(std::abs(month_urgent - 52.82) <= 0.05, "month urgent " + fmt(month_urgent));
  o.require(std::abs(post_urgent - 21.4) <= 0.5, "post urgent " + fmt(post_urgent));
  o.require(std::abs(post_flagged - 58.4) <= 0.5, "post flagged " + fmt(post_flagged));
  if (o.pass)
    o.detail = fmt(month_flagged, 2) + ", " + fmt(month_urgent, 2) + ", " + fmt(post_urgent, 2) + ", " +
               fmt(post_flagged, 2);
  return o;
}

Outcome metric_identity() {
  Outcome o;
  const double macro = macro_nongreen({0.0, 0.761, 0.755, 0.0});
  o.require(std::round(macro * 1000) / 1000 == 0.505, "macro " + fmt(macro));
  // The same figure from a confusion matrix realizing those per-class scores through metrics().
  ConfusionMatrix cm;
  // amber: tp 761, fp 239, fn 239 -> F1 0.761; red: tp 755, fp 245, fn 245 -> F1 0.755; crisis never found.
  cm.counts << 5000, 239, 245, 0,
               239, 761, 0, 0,
               245, 0, 755, 0,
               1, 0, 0, 0;
  const auto r = metrics(cm);
  o.require(std::abs(r.per_class[1].f1 - 0.761) < 1e-3 && std::abs(r.per_class[2].f1 - 0.755) < 1e-3 &&
                r.per_class[3].f1 == 0.0,
            "per-class construction");
  o.require(std::round(r.macro_f1_nongreen * 1000) / 1000 == 0.505, "metrics macro " + fmt(r.macro_f1_nongreen));
  if (o.pass) o.detail = "macro_f1_nongreen " + fmt(macro);
  return o;
}

Outcome severity_mapping() {
  Outcome o;
  o.require(numeric_severity(SeverityLabel::Crisis) == 1.0 && numeric_severity(SeverityLabel::Red) == 0.66 &&
                numeric_severity(SeverityLabel::Amber) == 0.33 && numeric_severity(SeverityLabel::Green) == 0.0,
            "mapping differs");
  if (o.pass) o.detail = "crisis 1.0, red 0.66, amber 0.33, green 0.0";
  return o;
}

Outcome gbt_suite() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);

  int fd_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Vector4d m;
    for (int c = 0; c < 4; ++c) m[c] = gaussian(rng) * 3.0;
    const int y = static_cast<int>(rng.below(4));
    const auto gh = softmax_grad_hess(m, y);
    const double step = 1e-4;
    for (int c = 0; c < 4; ++c) {
      Eigen::Vector4d up = m, down = m;
      up[c] += step;
      down[c] -= step;
      const double lu = softmax_loss(up, y), l0 = softmax_loss(m, y), ld = softmax_loss(down, y);
      const double g = (lu - ld) / (2 * step), h = (lu - 2 * l0 + ld) / (step * step);
      if (std::abs(gh.grad[c] - g) > 1e-4 * std::max(std::abs(g), 1e-3)) ++fd_bad;
      if (gh.hess[c] > 1e-3 && std::abs(gh.hess[c] - h) > 1e-4 * std::max(std::abs(h), 1.0) + 1e-4 * h) ++fd_bad;
    }
  }
  o.require(fd_bad == 0, "(a) " + std::to_string(fd_bad) + " finite-difference mismatches");

  int split_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 2 + static_cast<int>(rng.below(63)), cols = 1 + static_cast<int>(rng.below(8));
    const Eigen::MatrixXd X = random_features(rng, rows, cols);
    Eigen::VectorXd g(rows), h(rows);
    for (int r = 0; r < rows; ++r) {
      g[r] = gaussian(rng);
      h[r] = 0.05 + rng.uniform();
    }
    TrainConfig cfg;
    cfg.max_depth = 1;
    cfg.min_child_weight = rng.bernoulli(0.5) ? 0.0 : 1.0;
    const auto root = grow_tree(g, h, X, cfg).nodes[0];
    const auto oracle = brute_root(X, g, h, cfg);
    if (root.is_leaf() != !oracle.found) {
      ++split_bad;
    } else if (oracle.found) {
      const double chosen = gain_of(X, g, h, root.feature, root.threshold, cfg);
      if (std::abs(chosen - oracle.gain) > 1e-9 * std::max(1.0, oracle.gain)) ++split_bad;
    }
  }
  o.require(split_bad == 0, "(b) " + std::to_string(split_bad) + " root splits differ from brute force");

  int loss_bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 20 + static_cast<int>(rng.below(60));
    const Eigen::MatrixXd X = random_features(rng, rows, 1 + static_cast<int>(rng.below(6)));
    std::vector<SeverityLabel> y;
    for (int r = 0; r < rows; ++r) y.push_back(label_at(static_cast<int>(rng.below(4))));
    TrainConfig cfg;
    cfg.rounds = 15;
    std::vector<double> trace;
    train(X, y, cfg, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) loss_bad += trace[i] > trace[i - 1] + 1e-9;
  }
  o.require(loss_bad == 0, "(c) " + std::to_string(loss_bad) + " rounds increased the loss");

  Eigen::MatrixXd X(4, 1);
  X << 0, 0, 1, 1;
  TrainConfig cfg;
  cfg.min_child_weight = 0;
  const auto tree = grow_tree(Eigen::Vector4d(-1, -1, 1, 1), Eigen::Vector4d::Ones(), X, cfg);
  const bool hand = tree.nodes.size() == 3 && std::abs(tree.nodes[0].gain - 4.0 / 3.0) < 1e-15 &&
                    std::abs(tree.nodes[1].value - 2.0 / 3.0) < 1e-15 &&
                    std::abs(tree.nodes[2].value + 2.0 / 3.0) < 1e-15;
  o.require(hand, "(d) hand example");

  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed, 1) + " s");
  if (o.pass) o.detail = "(a)-(d) hold, " + fmt(elapsed, 2) + " s";
  return o;
}

Outcome vote_oracle() {
  Outcome o;
  int disagree = 0, cases = 0;
  for (int code = 0; code < 4096; ++code, ++cases) {
    std::vector<SeverityLabel> votes;
    for (int i = 0, rest = code; i < 6; ++i, rest /= 4) votes.push_back(label_at(rest % 4));
    disagree += vote(votes) != brute_vote(votes);
  }
  o.require(disagree == 0, std::to_string(disagree) + " disagreements");
  if (o.pass) o.detail = std::to_string(cases) + " vote vectors agree";
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  TempDir dir("acceptance_e2e");
  const std::string corpus = dir.file("corpus.jsonl");
  const auto synth = cli_run({"synth", "--seed", "7", "--out", corpus});
  if (synth.code != 0) {
    o.require(false, "synth failed: " + synth.err);
    return o;
  }
  const auto labels = load_corpus(corpus).corpus.labels();
  o.require(labels.size() == 1188, "labeled " + std::to_string(labels.size()));

  const std::vector<std::string> common = {"--corpus", corpus, "--seed", "3", "--topics", "20",
                                           "--lda-iters", "200", "--infer-iters", "30", "--test-fraction", "0.2"};
  auto train = [&](const std::string& out, const std::vector<std::string>& extra) {
    std::vector<std::string> args = {"train", "--out", out};
    args.insert(args.end(), common.begin(), common.end());
    args.insert(args.end(), extra.begin(), extra.end());
    return cli_run(args);
  };
  auto score = [&](const std::string& model) {
    const auto r = cli_run({"eval", "--model", model, "--corpus", corpus, "--split", "test"});
    return r.code == 0 ? json::parse(r.out) : json();
  };
  const auto ens = train(dir.file("ensemble.json"), {"--ensemble"});
  const auto bow = train(dir.file("bow.json"), {"--spec", "body"});
  if (ens.code != 0 || bow.code != 0) {
    o.require(false, "training failed: " + ens.err + bow.err);
    return o;
  }
  const json e = score(dir.file("ensemble.json")), b = score(dir.file("bow.json"));
  if (e.is_null() || b.is_null()) {
    o.require(false, "evaluation failed");
    return o;
  }
  const double e_macro = e["macro_f1_nongreen"], b_macro = b["macro_f1_nongreen"], e_flag = e["flagged_f1"];
  const double elapsed = seconds_since(t0);
  o.require(e_macro - b_macro >= 0.05, "ensemble gap " + fmt(e_macro - b_macro));
  o.require(e_flag >= 0.85, "flagged F1 " + fmt(e_flag));
  o.require(elapsed < 300.0, "runtime " + fmt(elapsed, 1) + " s");
  o.detail = (o.pass ? "" : o.detail + "; ") + "ensemble macro " + fmt(e_macro, 3) + " vs bow " + fmt(b_macro, 3) +
             ", flagged F1 " + fmt(e_flag, 3) + ", test n " + std::to_string(e["n"].get<int>()) + ", " +
             fmt(elapsed, 1) + " s";
  return o;
}

Outcome lda_recovery() {
  Outcome o;
  const auto planted = planted_topics(300, 40, 17);
  LdaConfig cfg;
  cfg.topics = 3;
  cfg.train_iters = 500;
  cfg.min_df = 1;
  cfg.seed = 5;
  const auto model = lda_train(planted.docs, cfg);
  const auto align = best_alignment(planted_distribution(planted, model.vocab), model.topic_word_distribution());
  double worst = 1.0;
  for (double c : align.cosine) worst = std::min(worst, c);
  o.require(worst >= 0.8, "worst cosine " + fmt(worst));
  int bad_theta = 0;
  for (std::size_t d = 0; d < planted.docs.size(); ++d) {
    const auto theta = lda_infer(model, planted.docs[d], 50, d);
    bad_theta += std::abs(theta.sum() - 1.0) > 1e-9 || theta.minCoeff() < 0.0;
  }
  o.require(bad_theta == 0, std::to_string(bad_theta) + " unnormalized theta");
  if (o.pass) o.detail = "worst cosine " + fmt(worst) + ", theta normalized on " + std::to_string(planted.docs.size()) + " calls";
  return o;
}

Outcome trend_suite() {
  Outcome o;
  Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(24));
    std::vector<MonthlyPoint> pts;
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      pts.push_back({i, rng.uniform()});
      A(i, 0) = i;
      A(i, 1) = 1.0;
      y[i] = pts.back().y;
    }
    const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(y);
    const auto t = fit_trend(pts);
    worst = std::max({worst, std::abs(t.m - sol[0]), std::abs(t.b - sol[1])});
  }
  o.require(worst <= 1e-9, "least-squares deviation " + std::to_string(worst));

  const SynthCorpus s = generate(SynthConfig{});
  int checked = 0, negative = 0;
  for (const auto& h : user_histories(s.corpus, s.truth)) {
    if (!s.declining_users.count(h.author_id)) continue;
    const auto series = monthly_series(h.posts);
    if (series.size() < 2) continue;
    ++checked;
    negative += fit_trend(series).m < 0.0;
  }
  const double share = checked ? static_cast<double>(negative) / checked : 0.0;
  o.require(checked > 0 && share >= 0.95, "declining users negative " + fmt(share));

  const std::vector<MonthlyPoint> flat{{0, 0.5}, {1, 0.5}, {2, 0.5}};
  const auto c = fit_trend(flat);
  o.require(c.m == 0.0 && c.r == 0.0, "constant series");
  if (o.pass)
    o.detail = "max deviation " + std::to_string(worst) + ", " + std::to_string(negative) + "/" +
               std::to_string(checked) + " declining users negative";
  return o;
}

Outcome determinism() {
  Outcome o;
  TempDir a("acceptance_det_a"), b("acceptance_det_b");
  const std::vector<std::string> fast = {"--seed", "4", "--topics", "6", "--lda-iters", "40", "--infer-iters", "10",
                                         "--rounds", "10"};
  std::vector<std::string> checked;
  auto both = [&](const std::string& name, const std::function<std::vector<std::string>(const TempDir&)>& args,
                  const std::vector<std::string>& files) {
    std::string outputs[2];
    const TempDir* dirs[2] = {&a, &b};
    for (int i = 0; i < 2; ++i) {
      const auto r = cli_run(args(*dirs[i]));
      if (r.code != 0) {
        o.require(false, name + " failed: " + r.err);
        return;
      }
      outputs[i] = r.out;
      for (const auto& f : files) outputs[i] += "\x1f" + slurp(dirs[i]->file(f));
    }
    // Reports may quote their own paths; compare with the directory names removed.
    auto strip = [](std::string s, const std::string& p) {
      for (std::size_t at; (at = s.find(p)) != std::string::npos;) s.erase(at, p.size());
      return s;
    };
    const bool same = strip(outputs[0], a.path().string()) == strip(outputs[1], b.path().string());
    o.require(same, name + " differs");
    checked.push_back(name);
  };
  auto plus = [](std::vector<std::string> x, const std::vector<std::string>& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  both("synth", [](const TempDir& d) {
    return std::vector<std::string>{"synth", "--seed", "11", "--out", d.file("c.jsonl"), "--users", "90",
                                    "--threads", "300", "--labeled", "400"};
  }, {"c.jsonl", "c.truth.tsv", "c.vectors.tsv", "lexicons/categories.tsv", "lexicons/emotions.tsv"});
  both("lda-train", [](const TempDir& d) {
    return std::vector<std::string>{"lda-train", "--corpus", d.file("c.jsonl"), "--topics", "5", "--iters", "30",
                                    "--seed", "2", "--out", d.file("lda.json")};
  }, {"lda.json"});
  both("train", [&](const TempDir& d) {
    return plus({"train", "--corpus", d.file("c.jsonl"), "--ensemble", "--out", d.file("m.json")}, fast);
  }, {"m.json"});
  for (const std::string cmd : {"predict", "eval", "vote-debug"})
    both(cmd, [cmd](const TempDir& d) {
      return std::vector<std::string>{cmd, "--model", d.file("m.json"), "--corpus", d.file("c.jsonl"), "--out",
                                      d.file(cmd + ".out")};
    }, {cmd + ".out"});
  for (const std::string cmd : {"cv", "ablate"})
    both(cmd, [&, cmd](const TempDir& d) {
      return plus({cmd, "--corpus", d.file("c.jsonl"), "--k", "2", "--out", d.file(cmd + ".json")}, fast);
    }, {cmd + ".json"});
  both("trends", [](const TempDir& d) {
    return std::vector<std::string>{"trends", "--corpus", d.file("c.jsonl"), "--model", d.file("m.json"),
                                    "--threshold", "0.05", "--csv", d.file("t.csv"), "--out", d.file("t.json")};
  }, {"t.csv", "t.json"});
  for (const std::string cmd : {"tables", "respstats"})
    both(cmd, [cmd](const TempDir& d) {
      return std::vector<std::string>{cmd, "--corpus", d.file("c.jsonl"), "--model", d.file("m.json"), "--out",
                                      d.file(cmd + ".json")};
    }, {cmd + ".json"});
  if (o.pass) {
    o.detail = std::to_string(checked.size()) + " subcommands byte-identical:";
    for (const auto& c : checked) o.detail += " " + c;
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"chi-square reproduction", chi_square_reproduction},
      {"metric identity", metric_identity},
      {"numeric severity mapping", severity_mapping},
      {"GBT correctness suite", gbt_suite},
      {"vote oracle", vote_oracle},
      {"end-to-end synthetic run", end_to_end},
      {"LDA recovery", lda_recovery},
      {"trend suite", trend_suite},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
