#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"
#include "triage/ensemble.hpp"

using nlohmann::json;
using triage::testing::TempDir;
namespace cli = triage::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Reduced settings so the whole pipeline runs in a few seconds.
const std::vector<std::string> kFast = {"--topics", "6", "--lda-iters", "40", "--infer-iters", "10", "--rounds", "15"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class Pipeline {
 public:
  Pipeline() : dir_("cli") {
    const auto r = run({"synth", "--seed", "7", "--out", corpus(), "--users", "90", "--threads", "300", "--labeled", "400"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  std::string corpus() const { return dir_.file("corpus.jsonl"); }
  std::string file(const std::string& name) const { return dir_.file(name); }

 private:
  TempDir dir_;
};

}  // namespace

TEST_CASE("synth, train, eval and predict") {
  Pipeline p;
  CHECK(std::filesystem::exists(p.file("lexicons/categories.tsv")));
  CHECK(std::filesystem::exists(p.file("corpus.vectors.tsv")));

  const auto train = run(with({"train", "--corpus", p.corpus(), "--out", p.file("model.json"), "--ensemble"}, kFast));
  REQUIRE_MESSAGE(train.code == 0, train.err);
  CHECK(std::filesystem::exists(p.file("model.json")));
  const auto model = json::parse(slurp(p.file("model.json")));
  CHECK(model["format"] == "triage-model/1");
  CHECK(model["members"].size() == 6);

  const auto ev = run({"eval", "--model", p.file("model.json"), "--corpus", p.corpus(), "--split", "test"});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  const auto report = json::parse(ev.out);
  CHECK(report.contains("macro_f1_nongreen"));
  CHECK(report["macro_f1_nongreen"].get<double>() >= 0.0);
  CHECK(report["macro_f1_nongreen"].get<double>() <= 1.0);
  CHECK(report["n"] == 80);

  const auto table = run({"eval", "--model", p.file("model.json"), "--corpus", p.corpus(), "--format", "table"});
  CHECK(table.code == 0);
  CHECK(table.out.find("macro") != std::string::npos);

  const auto pred = run({"predict", "--model", p.file("model.json"), "--corpus", p.corpus(), "--split", "test"});
  REQUIRE_MESSAGE(pred.code == 0, pred.err);
  CHECK_FALSE(pred.out.empty());

  const auto vd = run({"vote-debug", "--model", p.file("model.json"), "--corpus", p.corpus(), "--split", "test"});
  CHECK_MESSAGE(vd.code == 0, vd.err);
}

TEST_CASE("analytics subcommands") {
  Pipeline p;
  REQUIRE(run(with({"train", "--corpus", p.corpus(), "--out", p.file("model.json"), "--spec", "body+liwc"}, kFast)).code == 0);

  const auto trends = run({"trends", "--corpus", p.corpus(), "--model", p.file("model.json"), "--threshold", "0.05",
                           "--csv", p.file("trends.csv")});
  REQUIRE_MESSAGE(trends.code == 0, trends.err);
  const auto t = json::parse(trends.out);
  for (const char* field : {"avg_slope", "stdev_slope", "positive", "negative"}) CHECK(t["filtered"].contains(field));
  CHECK(slurp(p.file("trends.csv")).rfind("author_id,slope,intercept,r,months_active\n", 0) == 0);

  const auto gold = run({"trends", "--corpus", p.corpus(), "--labels", "truth", "--format", "table"});
  CHECK_MESSAGE(gold.code == 0, gold.err);
  CHECK(gold.out.rfind("filter\t", 0) == 0);

  const auto tables = run({"tables", "--corpus", p.corpus(), "--labels", "truth"});
  REQUIRE_MESSAGE(tables.code == 0, tables.err);
  const auto tj = json::parse(tables.out);
  for (const char* scheme : {"post_flagged", "post_urgent", "month_flagged", "month_urgent"}) CHECK(tj.contains(scheme));

  const auto resp = run({"respstats", "--corpus", p.corpus(), "--model", p.file("model.json")});
  REQUIRE_MESSAGE(resp.code == 0, resp.err);
  CHECK(json::parse(resp.out).contains("flagged"));

  CHECK(run({"trends", "--corpus", p.corpus(), "--labels", "predicted"}).code == cli::kExitError);
}

TEST_CASE("topic model and cross-validation subcommands") {
  Pipeline p;
  const auto lda = run({"lda-train", "--corpus", p.corpus(), "--topics", "4", "--iters", "20", "--top-words", "3"});
  REQUIRE_MESSAGE(lda.code == 0, lda.err);
  CHECK(json::parse(lda.out)["topics"] == 4);

  const auto cv = run(with({"cv", "--corpus", p.corpus(), "--k", "2"}, kFast));
  REQUIRE_MESSAGE(cv.code == 0, cv.err);
  const auto j = json::parse(cv.out);
  CHECK(j["models"].size() == 3);
  CHECK(j.contains("ttest_ensemble_vs"));
}

TEST_CASE("ablation without sentence vectors skips the dense rung") {
  Pipeline p;
  std::filesystem::remove(p.file("corpus.vectors.tsv"));
  const auto ab = run(with({"ablate", "--corpus", p.corpus(), "--k", "2"}, kFast));
  REQUIRE_MESSAGE(ab.code == 0, ab.err);
  CHECK(ab.err.find("skipping rung 'dense vectors'") != std::string::npos);
  const auto rungs = json::parse(ab.out)["rungs"];
  CHECK(rungs.size() == triage::ablation_ladder().size() - 1);
  for (const auto& r : rungs) CHECK(r["name"] != "dense vectors");
  CHECK(run(with({"train", "--corpus", p.corpus(), "--out", p.file("d.json"), "--spec", "densevec"}, kFast)).code ==
        cli::kExitError);
}

TEST_CASE("usage and input errors") {
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"train", "--corpus", "x.jsonl", "--out", "m.json", "--no-such-flag"}).code == cli::kExitUsage);
  CHECK(run({"train", "--out", "m.json"}).code == cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
  const auto missing = run({"train", "--corpus", "/nonexistent/corpus.jsonl", "--out", "/tmp/m.json"});
  CHECK(missing.code == cli::kExitError);
  CHECK_FALSE(missing.err.empty());
  CHECK(run({"eval", "--model", "/nonexistent/model.json", "--corpus", "/nonexistent/c.jsonl"}).code == cli::kExitError);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("subcommands are deterministic") {
  Pipeline p;
  TempDir again("cli_again");
  REQUIRE(run({"synth", "--seed", "7", "--out", again.file("corpus.jsonl"), "--users", "90", "--threads", "300",
               "--labeled", "400"})
              .code == 0);
  CHECK(slurp(p.corpus()) == slurp(again.file("corpus.jsonl")));

  const auto args = with({"train", "--corpus", p.corpus(), "--spec", "body+context+topic", "--seed", "5"}, kFast);
  REQUIRE(run(with(args, {"--out", p.file("a.json")})).code == 0);
  REQUIRE(run(with(args, {"--out", p.file("b.json")})).code == 0);
  CHECK(slurp(p.file("a.json")) == slurp(p.file("b.json")));

  const std::vector<std::string> pred = {"predict", "--model", p.file("a.json"), "--corpus", p.corpus()};
  CHECK(run(pred).out == run(pred).out);
}
