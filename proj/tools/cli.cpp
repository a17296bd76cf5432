#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "triage/analytics.hpp"
#include "triage/corpus.hpp"
#include "triage/ensemble.hpp"
#include "triage/errors.hpp"
#include "triage/eval.hpp"
#include "triage/model_io.hpp"
#include "triage/synthgen.hpp"
#include "triage/topics.hpp"

namespace triage::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

// Writes a report to --out when given, otherwise to stdout.
void emit(const Io& io, const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    io.out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot write " + out_path);
  f << text;
}

std::string render_json(const json& j) { return j.dump(2) + '\n'; }

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

Corpus read_corpus_file(const Io& io, const std::string& path) {
  CorpusLoad load = load_corpus(path);
  for (const auto& d : load.diagnostics) io.err << "warning: " << d << '\n';
  if (load.skipped) io.err << "warning: skipped " << load.skipped << " malformed record(s) in " << path << '\n';
  return std::move(load.corpus);
}

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

// Explicit path, else the sibling default when present.
std::string resolve_lexicon_dir(const std::string& given, const std::string& corpus_path) {
  if (!given.empty()) {
    if (!fs::is_directory(given)) throw IoError("lexicon directory not found: " + given);
    return absolute_or_empty(given);
  }
  const auto sib = sibling_lexicon_dir(corpus_path);
  return fs::is_directory(sib) ? absolute_or_empty(sib) : std::string();
}

std::string resolve_vectors(const std::string& given, const std::string& corpus_path) {
  if (!given.empty()) {
    if (!fs::exists(given)) throw IoError("vector file not found: " + given);
    return absolute_or_empty(given);
  }
  const auto sib = sibling_vectors_path(corpus_path);
  return fs::exists(sib) ? absolute_or_empty(sib) : std::string();
}

std::shared_ptr<const Lexicons> lexicons_from(const std::string& dir) {
  if (dir.empty()) return std::make_shared<const Lexicons>();
  return std::make_shared<const Lexicons>(load_lexicon_dir(dir));
}

std::shared_ptr<const VectorStore> vectors_from(const Io& io, const std::string& path) {
  if (path.empty()) return nullptr;
  VectorLoad load = load_sentence_vectors(path);
  for (const auto& d : load.diagnostics) io.err << "warning: " << d << '\n';
  return std::make_shared<const VectorStore>(std::move(load.store));
}

json metrics_json(const MetricsReport& r) {
  json per = json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& s = r.per_class[static_cast<std::size_t>(c)];
    per[std::string(to_string(label_at(c)))] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  }
  return {{"n", r.n},
          {"accuracy", r.accuracy},
          {"macro_f1_nongreen", r.macro_f1_nongreen},
          {"macro_precision_nongreen", r.macro_precision_nongreen},
          {"macro_recall_nongreen", r.macro_recall_nongreen},
          {"flagged_f1", r.flagged_f1},
          {"flagged_acc", r.flagged_acc},
          {"urgent_f1", r.urgent_f1},
          {"urgent_acc", r.urgent_acc},
          {"per_class", per}};
}

std::string metrics_row_header() { return "model\tmacro_f1\tmacro_p\tmacro_r\tflagged_f1\tflagged_acc\turgent_f1\turgent_acc\n"; }

std::string metrics_row(const std::string& name, const MetricsReport& r) {
  return name + '\t' + fixed(r.macro_f1_nongreen) + '\t' + fixed(r.macro_precision_nongreen) + '\t' +
         fixed(r.macro_recall_nongreen) + '\t' + fixed(r.flagged_f1) + '\t' + fixed(r.flagged_acc) + '\t' +
         fixed(r.urgent_f1) + '\t' + fixed(r.urgent_acc) + '\n';
}

// Shared feature-pipeline flags.
struct PipelineOpts {
  std::string corpus;
  std::string lexicon_dir;
  std::string vectors;
  std::uint64_t seed = 1;
  int window = 3;
  bool temporal = false;
  int bow_min_df = 2;
  LdaConfig lda;
  TrainConfig train;

  void add(CLI::App* app) {
    app->add_option("--corpus", corpus, "Corpus JSONL")->required();
    app->add_option("--lexicon-dir", lexicon_dir, "Lexicon directory (default: <corpus dir>/lexicons)");
    app->add_option("--vectors", vectors, "Sentence vectors TSV (default: <stem>.vectors.tsv)");
    app->add_option("--seed", seed, "Seed")->capture_default_str();
    app->add_option("--window", window, "Context window of preceding posts")->capture_default_str();
    app->add_flag("--temporal", temporal, "Add time-of-day metadata features");
    app->add_option("--bow-min-df", bow_min_df, "Document frequency cutoff for body terms")->capture_default_str();
    app->add_option("--topics", lda.topics, "LDA topics K")->capture_default_str();
    app->add_option("--lda-iters", lda.train_iters, "LDA training sweeps")->capture_default_str();
    app->add_option("--infer-iters", lda.infer_iters, "LDA inference sweeps")->capture_default_str();
    app->add_option("--lda-min-df", lda.min_df, "LDA vocabulary cutoff")->capture_default_str();
    app->add_option("--rounds", train.rounds, "Boosting rounds")->capture_default_str();
    app->add_option("--eta", train.eta, "Learning rate")->capture_default_str();
    app->add_option("--max-depth", train.max_depth, "Tree depth")->capture_default_str();
    app->add_option("--min-child-weight", train.min_child_weight, "Minimum hessian per child")->capture_default_str();
    app->add_option("--lambda", train.lambda, "L2 leaf penalty")->capture_default_str();
    app->add_option("--gamma", train.gamma, "Per-leaf penalty")->capture_default_str();
  }

  ResourceConfig resource_config(bool train_lda) const {
    ResourceConfig rc;
    rc.bow_min_df = bow_min_df;
    rc.context.window_size = window;
    rc.context.include_temporal = temporal;
    rc.lda = lda;
    rc.lda.seed = seed;
    rc.train_lda = train_lda;
    return rc;
  }

  TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    t.validate();
    return t;
  }
};

std::vector<FeatureSetSpec> chosen_specs(bool ensemble, const std::string& specs_file, const std::string& spec_text) {
  if (!specs_file.empty()) return load_specs(specs_file);
  if (ensemble) return default_specs();
  if (!spec_text.empty()) {
    FeatureSetSpec spec;
    std::stringstream ss(spec_text);
    std::string name;
    while (std::getline(ss, name, '+')) {
      const auto g = parse_feature_group(name);
      if (!g) throw ConfigError("unknown feature group: " + name);
      spec.push_back(*g);
    }
    validate_spec(spec);
    return {spec};
  }
  return {single_model_spec()};
}

// ---- synth ----

struct SynthOpts {
  SynthConfig cfg;
  std::string out;
  std::string lexicon_dir;
};

int cmd_synth(const Io& io, const SynthOpts& o) {
  const SynthCorpus s = generate(o.cfg);
  const std::string lex = o.lexicon_dir.empty() ? sibling_lexicon_dir(o.out) : o.lexicon_dir;
  write_synth(s, o.out, lex);
  std::array<int, kNumClasses> counts{};
  for (const auto& [id, label] : s.corpus.labels()) ++counts[static_cast<std::size_t>(index_of(label))];
  json classes = json::object();
  for (int c = 0; c < kNumClasses; ++c)
    classes[std::string(to_string(label_at(c)))] = counts[static_cast<std::size_t>(c)];
  const json report = {{"posts", s.corpus.size()},
                       {"labeled", s.corpus.labels().size()},
                       {"labeled_per_class", classes},
                       {"threads", s.corpus.thread_ids().size()},
                       {"declining_users", s.declining_users.size()},
                       {"corpus", o.out},
                       {"truth", sibling_truth_path(o.out)},
                       {"vectors", sibling_vectors_path(o.out)},
                       {"lexicon_dir", lex}};
  io.out << render_json(report);
  return kExitOk;
}

// ---- lda-train ----

struct LdaOpts {
  std::string corpus;
  std::string out;
  LdaConfig cfg;
  int top_words = 10;
};

int cmd_lda_train(const Io& io, const LdaOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.corpus);
  std::vector<const Post*> posts;
  for (const Post& p : corpus.posts()) posts.push_back(&p);
  std::sort(posts.begin(), posts.end(), [](const Post* a, const Post* b) { return a->post_id < b->post_id; });
  std::vector<TokenList> docs;
  for (const Post* p : posts) docs.push_back(tokenize(p->body));
  o.cfg.validate();
  const LdaModel lda = lda_train(docs, o.cfg);
  emit(io, lda_to_json(lda), o.out);
  const Eigen::MatrixXd phi = lda.topic_word_distribution();
  json topics = json::array();
  for (int k = 0; k < lda.topics; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(lda.vocab.size()));
    std::iota(idx.begin(), idx.end(), 0);
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(o.top_words), idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(), [&](int a, int b) {
      return phi(k, a) != phi(k, b) ? phi(k, a) > phi(k, b) : a < b;
    });
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(lda.vocab.terms()[static_cast<std::size_t>(idx[i])]);
    topics.push_back(words);
  }
  if (!o.out.empty())
    io.out << render_json({{"topics", lda.topics}, {"vocabulary", lda.vocab.size()}, {"top_words", topics}});
  return kExitOk;
}

// ---- train ----

struct TrainOpts {
  PipelineOpts p;
  std::string out;
  bool ensemble = false;
  std::string specs;
  std::string spec;
  double test_fraction = 0.2;
};

int cmd_train(const Io& io, const TrainOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.p.corpus);
  const auto specs = chosen_specs(o.ensemble, o.specs, o.spec);
  const auto labels = corpus.labels();
  if (labels.empty()) throw InvalidArgument("corpus has no labeled posts");
  HoldoutSplit split;
  if (o.test_fraction > 0.0) {
    split = stratified_holdout(labels, o.test_fraction, o.p.seed);
  } else {
    for (const auto& [id, l] : labels) split.train.push_back(id);
  }
  ModelFile m;
  m.seed = o.p.seed;
  m.lexicon_dir = resolve_lexicon_dir(o.p.lexicon_dir, o.p.corpus);
  m.vectors_path = resolve_vectors(o.p.vectors, o.p.corpus);
  m.train = o.p.train_config();
  m.resources = o.p.resource_config(uses_group(specs, FeatureGroup::Topic));
  m.train_ids = split.train;
  m.test_ids = split.test;
  auto res = std::make_shared<const Resources>(build_resources(corpus, split.train, split.test, m.resources,
                                                               lexicons_from(m.lexicon_dir),
                                                               vectors_from(io, m.vectors_path)));
  const FeatureExtractor fx(corpus, res);
  m.model = train_ensemble(fx, posts_by_id(corpus, split.train), specs, m.train);
  save_model(o.out, m);
  json members = json::array();
  for (const auto& mem : m.model.members) members.push_back(spec_name(mem.spec));
  io.out << render_json({{"model", o.out},
                         {"members", members},
                         {"train_posts", split.train.size()},
                         {"test_posts", split.test.size()},
                         {"vocabulary", res->vocab.size()}});
  return kExitOk;
}

// ---- model-based commands ----

struct ModelOpts {
  std::string model;
  std::string corpus;
  std::string lexicon_dir;
  std::string vectors;
  std::string out;
  std::string format = "json";

  void add(CLI::App* app, bool corpus_required = true) {
    app->add_option("--model", model, "Model file")->required();
    auto* c = app->add_option("--corpus", corpus, "Corpus JSONL");
    if (corpus_required) c->required();
    app->add_option("--lexicon-dir", lexicon_dir, "Override the model's lexicon directory");
    app->add_option("--vectors", vectors, "Override the model's sentence-vector file");
    app->add_option("--out", out, "Report file (default: stdout)");
    app->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  }

  ModelFile load() const {
    ModelLoadOptions lo;
    if (!lexicon_dir.empty()) lo.lexicon_dir = absolute_or_empty(lexicon_dir);
    if (!vectors.empty()) lo.vectors_path = absolute_or_empty(vectors);
    return load_model(model, lo);
  }
};

std::vector<const Post*> select_posts(const Corpus& corpus, const ModelFile& m, const std::string& split) {
  if (split == "test") return posts_by_id(corpus, m.test_ids);
  if (split == "train") return posts_by_id(corpus, m.train_ids);
  std::vector<const Post*> out;
  for (const Post& p : corpus.posts()) {
    if (split == "labeled" && !p.label) continue;
    if (split == "members" && p.author_role != AuthorRole::Member) continue;
    out.push_back(&p);
  }
  return out;
}

struct PredictOpts {
  ModelOpts m;
  std::string split = "all";
};

int cmd_predict(const Io& io, const PredictOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.m.corpus);
  const ModelFile model = o.m.load();
  const FeatureExtractor fx(corpus, model.model.resources);
  const auto posts = select_posts(corpus, model, o.split);
  const auto pred = predict(model.model, fx, posts);
  std::string text;
  if (o.m.format == "table") {
    text = "post_id\tlabel\n";
    for (std::size_t i = 0; i < posts.size(); ++i)
      text += posts[i]->post_id + '\t' + std::string(to_string(pred[i])) + '\n';
  } else {
    json j = json::object();
    for (std::size_t i = 0; i < posts.size(); ++i) j[posts[i]->post_id] = std::string(to_string(pred[i]));
    text = render_json({{"predictions", j}});
  }
  emit(io, text, o.m.out);
  return kExitOk;
}

struct EvalOpts {
  ModelOpts m;
  std::string split = "test";
};

int cmd_eval(const Io& io, const EvalOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.m.corpus);
  const ModelFile model = o.m.load();
  const FeatureExtractor fx(corpus, model.model.resources);
  std::vector<const Post*> posts;
  for (const Post* p : select_posts(corpus, model, o.split))
    if (p->label) posts.push_back(p);
  if (posts.empty()) throw InvalidArgument("split '" + o.split + "' has no labeled posts in this corpus");
  std::vector<SeverityLabel> gold;
  for (const Post* p : posts) gold.push_back(*p->label);
  const auto pred = predict(model.model, fx, posts);
  const ConfusionMatrix cm = confusion(gold, pred);
  const MetricsReport r = metrics(cm);
  std::string text;
  if (o.m.format == "table") {
    text = metrics_row_header() + metrics_row(o.split, r);
    text += "\nconfusion (rows gold, columns predicted)\n\tGREEN\tAMBER\tRED\tCRISIS\n";
    for (int g = 0; g < kNumClasses; ++g) {
      text += std::string(to_string(label_at(g)));
      for (int p = 0; p < kNumClasses; ++p) text += '\t' + std::to_string(cm.counts(g, p));
      text += '\n';
    }
  } else {
    json j = metrics_json(r);
    json rows = json::array();
    for (int g = 0; g < kNumClasses; ++g) {
      std::vector<std::int64_t> row;
      for (int p = 0; p < kNumClasses; ++p) row.push_back(cm.counts(g, p));
      rows.push_back(row);
    }
    j["confusion"] = rows;
    j["split"] = o.split;
    text = render_json(j);
  }
  emit(io, text, o.m.out);
  return kExitOk;
}

// ---- cross-validation and ablation ----

struct CvOpts {
  PipelineOpts p;
  int k = 10;
  std::string specs;
  std::string out;
  std::string format = "json";
};

CvConfig cv_config(const CvOpts& o, bool topics) {
  CvConfig cfg;
  cfg.k = o.k;
  cfg.seed = o.p.seed;
  cfg.resources = o.p.resource_config(topics);
  cfg.train = o.p.train_config();
  return cfg;
}

std::vector<double> fold_metric(const std::vector<FoldResult>& folds, double MetricsReport::*field) {
  std::vector<double> v;
  for (const auto& f : folds) v.push_back(f.report.*field);
  return v;
}

MetricsReport mean_of(const std::vector<FoldResult>& folds) {
  std::vector<MetricsReport> reports;
  for (const auto& f : folds) reports.push_back(f.report);
  return mean_report(reports);
}

json ttest_json(const TTestResult& t) { return {{"t", t.t}, {"p", t.p}, {"df", t.df}}; }

int cmd_cv(const Io& io, const CvOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.p.corpus);
  const auto ens = chosen_specs(true, o.specs, "");
  const std::vector<std::pair<std::string, std::vector<FeatureSetSpec>>> models = {
      {"bow", {bow_spec()}}, {"single", {single_model_spec()}}, {"ensemble", ens}};
  std::vector<std::vector<FeatureSetSpec>> specs;
  for (const auto& [name, s] : models) specs.push_back(s);
  bool topics = false;
  for (const auto& s : specs) topics = topics || uses_group(s, FeatureGroup::Topic);
  const auto lex = lexicons_from(resolve_lexicon_dir(o.p.lexicon_dir, o.p.corpus));
  const auto vec = vectors_from(io, resolve_vectors(o.p.vectors, o.p.corpus));
  const auto results = cross_validate(corpus, specs, cv_config(o, topics), lex, vec);

  json j = {{"k", o.k}, {"seed", o.p.seed}};
  std::string table = metrics_row_header();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const MetricsReport mean = mean_of(results[m]);
    j["models"][models[m].first] = {{"mean", metrics_json(mean)},
                                    {"fold_macro_f1_nongreen", fold_metric(results[m], &MetricsReport::macro_f1_nongreen)}};
    table += metrics_row(models[m].first, mean);
  }
  const auto ens_f1 = fold_metric(results[2], &MetricsReport::macro_f1_nongreen);
  table += "\npaired t-test on macro_f1 (ensemble minus other)\n";
  for (std::size_t m = 0; m < 2; ++m) {
    const auto t = paired_ttest(ens_f1, fold_metric(results[m], &MetricsReport::macro_f1_nongreen));
    j["ttest_ensemble_vs"][models[m].first] = ttest_json(t);
    table += models[m].first + "\tt=" + fixed(t.t) + "\tp=" + fixed(t.p, 4) + "\tdf=" + std::to_string(t.df) + '\n';
  }
  emit(io, o.format == "table" ? table : render_json(j), o.out);
  return kExitOk;
}

int cmd_ablate(const Io& io, const CvOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.p.corpus);
  const auto lex = lexicons_from(resolve_lexicon_dir(o.p.lexicon_dir, o.p.corpus));
  const auto vec = vectors_from(io, resolve_vectors(o.p.vectors, o.p.corpus));
  auto ladder = ablation_ladder();
  if (!vec)
    std::erase_if(ladder, [&](const AblationRung& r) {
      if (!r.spec || !uses_group({*r.spec}, FeatureGroup::Densevec)) return false;
      io.err << "warning: no sentence vectors; skipping rung '" << r.name << "'\n";
      return true;
    });
  const auto ens = chosen_specs(true, o.specs, "");
  std::vector<std::vector<FeatureSetSpec>> specs;
  for (const auto& rung : ladder) specs.push_back(rung.spec ? std::vector<FeatureSetSpec>{*rung.spec} : ens);
  bool topics = false;
  for (const auto& s : specs) topics = topics || uses_group(s, FeatureGroup::Topic);
  const auto results = cross_validate(corpus, specs, cv_config(o, topics), lex, vec);
  json rungs = json::array();
  std::string table = "rung\t" + metrics_row_header().substr(6);
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const MetricsReport mean = mean_of(results[i]);
    rungs.push_back({{"name", ladder[i].name},
                     {"spec", ladder[i].spec ? spec_name(*ladder[i].spec) : std::string("ensemble")},
                     {"mean", metrics_json(mean)}});
    table += metrics_row(ladder[i].name, mean);
  }
  emit(io, o.format == "table" ? table : render_json({{"k", o.k}, {"seed", o.p.seed}, {"rungs", rungs}}), o.out);
  return kExitOk;
}

// ---- user analytics ----

struct AnalyticsOpts {
  std::string corpus;
  std::string model;
  std::string labels = "predicted";
  std::string truth;
  std::string lexicon_dir;
  std::string vectors;
  std::string out;
  std::string format = "json";

  void add(CLI::App* app) {
    app->add_option("--corpus", corpus, "Corpus JSONL")->required();
    app->add_option("--model", model, "Model used to label posts");
    app->add_option("--labels", labels,
                    "Severity source: predicted (model everywhere), gold (gold where present, model elsewhere), "
                    "truth (generator truth file)")
        ->check(CLI::IsMember({"predicted", "gold", "truth"}))
        ->capture_default_str();
    app->add_option("--truth", truth, "Truth file for --labels truth (default: <stem>.truth.tsv)");
    app->add_option("--lexicon-dir", lexicon_dir, "Override the model's lexicon directory");
    app->add_option("--vectors", vectors, "Override the model's sentence-vector file");
    app->add_option("--out", out, "Report file (default: stdout)");
    app->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();
  }
};

// Severities of member posts.
std::map<std::string, SeverityLabel> severities_for(const Corpus& corpus, const AnalyticsOpts& o) {
  std::map<std::string, SeverityLabel> out;
  if (o.labels == "truth") {
    const auto truth = load_truth(o.truth.empty() ? sibling_truth_path(o.corpus) : o.truth);
    for (const Post& p : corpus.posts())
      if (auto it = truth.find(p.post_id); it != truth.end() && p.author_role == AuthorRole::Member)
        out[p.post_id] = it->second;
    return out;
  }
  const bool gold = o.labels == "gold";
  std::vector<const Post*> todo;
  for (const Post& p : corpus.posts()) {
    if (p.author_role != AuthorRole::Member) continue;
    if (gold && p.label)
      out[p.post_id] = *p.label;
    else
      todo.push_back(&p);
  }
  if (todo.empty()) return out;
  if (o.model.empty()) {
    if (gold) return out;
    throw ConfigError("--labels predicted needs --model");
  }
  ModelOpts mo;
  mo.model = o.model;
  mo.lexicon_dir = o.lexicon_dir;
  mo.vectors = o.vectors;
  const ModelFile model = mo.load();
  const FeatureExtractor fx(corpus, model.model.resources);
  const auto pred = predict(model.model, fx, todo);
  for (std::size_t i = 0; i < todo.size(); ++i) out[todo[i]->post_id] = pred[i];
  return out;
}

struct TrendOpts {
  AnalyticsOpts a;
  std::optional<double> threshold;
  std::string csv;
  std::string scale = "fine";
};

json summary_json(const TrendSummary& s) {
  return {{"avg_slope", s.avg_slope}, {"stdev_slope", s.stdev_slope}, {"positive", s.positive},
          {"negative", s.negative},   {"retained", s.retained},       {"empty", s.empty}};
}

int cmd_trends(const Io& io, const TrendOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.a.corpus);
  const auto sev = severities_for(corpus, o.a);
  const auto scale = o.scale == "flagged" ? SeverityScale::FlaggedBinary : SeverityScale::Fine;
  std::vector<TrendLine> lines;
  std::string csv = "author_id,slope,intercept,r,months_active\n";
  for (const auto& u : user_histories(corpus, sev)) {
    if (classify_activity(u.posts) != Activity::Active) continue;
    const auto series = monthly_series(u.posts, scale);
    const TrendLine l = fit_trend(series);
    lines.push_back(l);
    std::ostringstream row;
    row << std::setprecision(10) << u.author_id << ',' << l.m << ',' << l.b << ',' << l.r << ','
        << activity_months(u.posts) << '\n';
    csv += row.str();
  }
  if (!o.csv.empty()) emit(io, csv, o.csv);
  const TrendSummary all = trend_summary(lines, std::nullopt);
  const GoodnessOfFit gof = goodness_of_fit(lines);
  json j = {{"active_users", lines.size()},
            {"labels", o.a.labels},
            {"scale", o.scale},
            {"all", summary_json(all)},
            {"goodness_of_fit",
             {{"positive", {{"mean_r", gof.positive.mean}, {"stdev_r", gof.positive.stdev}, {"count", gof.positive.count}}},
              {"negative",
               {{"mean_r", gof.negative.mean}, {"stdev_r", gof.negative.stdev}, {"count", gof.negative.count}}}}}};
  std::string table = "filter\tusers\tavg_slope\tstdev_slope\tpositive\tnegative\n";
  table += "all\t" + std::to_string(all.retained) + '\t' + fixed(all.avg_slope, 4) + '\t' + fixed(all.stdev_slope, 4) +
           '\t' + std::to_string(all.positive) + '\t' + std::to_string(all.negative) + '\n';
  if (o.threshold) {
    const TrendSummary f = trend_summary(lines, o.threshold);
    j["threshold"] = *o.threshold;
    j["filtered"] = summary_json(f);
    table += "|m|>" + fixed(*o.threshold, 3) + '\t' + std::to_string(f.retained) + '\t' + fixed(f.avg_slope, 4) + '\t' +
             fixed(f.stdev_slope, 4) + '\t' + std::to_string(f.positive) + '\t' + std::to_string(f.negative) + '\n';
  }
  emit(io, o.a.format == "table" ? table : render_json(j), o.a.out);
  return kExitOk;
}

int cmd_tables(const Io& io, const AnalyticsOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.corpus);
  const auto users = user_histories(corpus, severities_for(corpus, o));
  const std::vector<std::pair<std::string, TableScheme>> schemes = {{"post_flagged", TableScheme::PostFlagged},
                                                                    {"post_urgent", TableScheme::PostUrgent},
                                                                    {"month_flagged", TableScheme::MonthFlagged},
                                                                    {"month_urgent", TableScheme::MonthUrgent}};
  json j = json::object();
  std::string table;
  for (const auto& [name, scheme] : schemes) {
    const auto t = first_last_table(users, scheme);
    json entry = {{"cells", {{t.a, t.b}, {t.c, t.d}}}, {"users", t.total()}};
    table += name + "\tfirst+\tfirst-\n";
    table += "last+\t" + std::to_string(t.a) + '\t' + std::to_string(t.b) + '\n';
    table += "last-\t" + std::to_string(t.c) + '\t' + std::to_string(t.d) + '\n';
    try {
      const auto chi = chi_square(t);
      entry["chi_square"] = chi.statistic;
      entry["p"] = chi.p;
      table += "chi2=" + fixed(chi.statistic, 2) + "\tp=" + fixed(chi.p, 6) + '\n';
    } catch (const InvalidArgument& e) {
      entry["chi_square"] = nullptr;
      entry["note"] = e.what();
      table += std::string("chi2 undefined: ") + e.what() + '\n';
    }
    if (scheme == TableScheme::MonthFlagged || scheme == TableScheme::MonthUrgent) {
      const auto d = duration_table(users, scheme);
      entry["mean_duration_months"] = {{d.a, d.b}, {d.c, d.d}};
      table += "months\t" + fixed(d.a, 2) + '\t' + fixed(d.b, 2) + "\n\t" + fixed(d.c, 2) + '\t' + fixed(d.d, 2) + '\n';
    }
    table += '\n';
    j[name] = entry;
  }
  emit(io, o.format == "table" ? table : render_json(j), o.out);
  return kExitOk;
}

json response_json(const ResponseRow& r) {
  return {{"total", r.total},           {"moderator_first", r.moderator_first}, {"percentage", r.percentage},
          {"mean_hours", r.mean_hours}, {"stdev_hours", r.stdev_hours}};
}

std::string response_line(const std::string& name, const ResponseRow& r) {
  return name + '\t' + std::to_string(r.total) + '\t' + std::to_string(r.moderator_first) + '\t' +
         fixed(r.percentage, 1) + '\t' + fixed(r.mean_hours, 2) + '\t' + fixed(r.stdev_hours, 2) + '\n';
}

int cmd_respstats(const Io& io, const AnalyticsOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.corpus);
  const ResponseStats s = response_stats(corpus, severities_for(corpus, o));
  json j = json::object();
  std::string table = "class\tposts\tmoderator_first\tpercent\tmean_hours\tstdev_hours\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string name(to_string(label_at(c)));
    j[name] = response_json(s.per_class[static_cast<std::size_t>(c)]);
    table += response_line(name, s.per_class[static_cast<std::size_t>(c)]);
  }
  j["urgent"] = response_json(s.urgent);
  j["flagged"] = response_json(s.flagged);
  table += response_line("urgent", s.urgent) + response_line("flagged", s.flagged);
  emit(io, o.format == "table" ? table : render_json(j), o.out);
  return kExitOk;
}

// ---- vote-debug ----

struct VoteDebugOpts {
  ModelOpts m;
  std::vector<std::string> posts;
  std::string split = "test";
};

int cmd_vote_debug(const Io& io, const VoteDebugOpts& o) {
  const Corpus corpus = read_corpus_file(io, o.m.corpus);
  const ModelFile model = o.m.load();
  const FeatureExtractor fx(corpus, model.model.resources);
  const auto posts = o.posts.empty() ? select_posts(corpus, model, o.split) : posts_by_id(corpus, o.posts);
  json rows = json::array();
  std::string table = "post_id\tgold\tvote";
  for (const auto& mem : model.model.members) table += '\t' + spec_name(mem.spec);
  table += '\n';
  for (const Post* p : posts) {
    json members = json::array();
    std::vector<SeverityLabel> votes;
    std::string cells;
    for (const auto& mem : model.model.members) {
      const auto x = fx.assemble(*p, mem.spec);
      const Eigen::Vector4d proba = predict_proba(mem.forest, x);
      const SeverityLabel l = argmax_label(proba);
      votes.push_back(l);
      members.push_back({{"spec", spec_name(mem.spec)},
                         {"label", std::string(to_string(l))},
                         {"proba", {proba[0], proba[1], proba[2], proba[3]}}});
      cells += '\t' + std::string(to_string(l));
    }
    const SeverityLabel v = vote(votes);
    const std::string gold = p->label ? std::string(to_string(*p->label)) : "-";
    rows.push_back({{"post_id", p->post_id},
                    {"gold", p->label ? json(gold) : json(nullptr)},
                    {"vote", std::string(to_string(v))},
                    {"members", members}});
    table += p->post_id + '\t' + gold + '\t' + std::string(to_string(v)) + cells + '\n';
  }
  emit(io, o.m.format == "table" ? table : render_json({{"posts", rows}}), o.m.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Io io{out, err};
  CLI::App app{"Severity triage of forum posts", "triage"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic labeled forum corpus with lexicon fixtures");
  s_synth->add_option("--seed", synth.cfg.seed, "Seed")->capture_default_str();
  s_synth->add_option("--out", synth.out, "Corpus JSONL to write")->required();
  s_synth->add_option("--lexicon-dir", synth.lexicon_dir, "Where to write lexicons (default: <out dir>/lexicons)");
  s_synth->add_option("--users", synth.cfg.n_users, "Member authors")->capture_default_str();
  s_synth->add_option("--threads", synth.cfg.n_threads, "Expected thread count")->capture_default_str();
  s_synth->add_option("--months", synth.cfg.months, "Months of activity")->capture_default_str();
  s_synth->add_option("--labeled", synth.cfg.n_labeled, "Labeled member posts")->capture_default_str();
  s_synth->add_option("--marker-pool", synth.cfg.marker_pool_size, "Words per class-marker pool")->capture_default_str();
  s_synth->add_option("--marker-strength", synth.cfg.marker_strength, "Marker token rate multiplier")
      ->capture_default_str();
  s_synth->add_option("--declining", synth.cfg.declining_fraction, "Fraction of declining-trend users")
      ->capture_default_str();
  s_synth->add_option("--moderators", synth.cfg.moderator_fraction, "Fraction of moderator authors")
      ->capture_default_str();
  s_synth->add_option("--planted-topics", synth.cfg.topics, "Planted topics")->capture_default_str();

  LdaOpts lda;
  auto* s_lda = app.add_subcommand("lda-train", "Fit a topic model on every post of a corpus");
  s_lda->add_option("--corpus", lda.corpus, "Corpus JSONL")->required();
  s_lda->add_option("--out", lda.out, "Topic model JSON (default: stdout)");
  s_lda->add_option("--topics", lda.cfg.topics, "Topics K")->capture_default_str();
  s_lda->add_option("--iters", lda.cfg.train_iters, "Gibbs sweeps")->capture_default_str();
  s_lda->add_option("--alpha", lda.cfg.alpha, "Document-topic prior (0: 50/K)")->capture_default_str();
  s_lda->add_option("--beta", lda.cfg.beta, "Topic-word prior")->capture_default_str();
  s_lda->add_option("--min-df", lda.cfg.min_df, "Vocabulary cutoff")->capture_default_str();
  s_lda->add_option("--seed", lda.cfg.seed, "Seed")->capture_default_str();
  s_lda->add_option("--top-words", lda.top_words, "Words listed per topic")->capture_default_str();

  TrainOpts train;
  auto* s_train = app.add_subcommand("train", "Train a single model or an ensemble and save it");
  train.p.add(s_train);
  s_train->add_option("--out", train.out, "Model file to write")->required();
  s_train->add_flag("--ensemble", train.ensemble, "Train the default ensemble");
  s_train->add_option("--specs", train.specs, "Ensemble member specs (JSON list of lists)");
  s_train->add_option("--spec", train.spec, "Single model feature groups joined by '+'");
  s_train->add_option("--test-fraction", train.test_fraction, "Stratified held-out fraction of labeled posts")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();

  PredictOpts pred;
  auto* s_pred = app.add_subcommand("predict", "Label posts with a saved model");
  pred.m.add(s_pred);
  s_pred->add_option("--split", pred.split, "Posts to label")
      ->check(CLI::IsMember({"all", "members", "labeled", "train", "test"}))
      ->capture_default_str();

  EvalOpts ev;
  auto* s_eval = app.add_subcommand("eval", "Score a saved model against gold labels");
  ev.m.add(s_eval);
  s_eval->add_option("--split", ev.split, "Labeled posts to score")
      ->check(CLI::IsMember({"test", "train", "labeled"}))
      ->capture_default_str();

  CvOpts cv;
  auto* s_cv = app.add_subcommand("cv", "Stratified k-fold comparison of BOW, single model and ensemble");
  cv.p.add(s_cv);
  s_cv->add_option("--k", cv.k, "Folds")->capture_default_str();
  s_cv->add_option("--specs", cv.specs, "Ensemble member specs (JSON list of lists)");
  s_cv->add_option("--out", cv.out, "Report file (default: stdout)");
  s_cv->add_option("--format", cv.format, "Report format")->check(CLI::IsMember({"json", "table"}));

  CvOpts ab;
  auto* s_ab = app.add_subcommand("ablate", "Cross-validate the feature-addition ladder");
  ab.p.add(s_ab);
  s_ab->add_option("--k", ab.k, "Folds")->capture_default_str();
  s_ab->add_option("--specs", ab.specs, "Ensemble member specs for the final rung");
  s_ab->add_option("--out", ab.out, "Report file (default: stdout)");
  s_ab->add_option("--format", ab.format, "Report format")->check(CLI::IsMember({"json", "table"}));

  TrendOpts trends;
  auto* s_trends = app.add_subcommand("trends", "Per-user severity trend lines");
  trends.a.add(s_trends);
  s_trends->add_option("--threshold", trends.threshold, "Keep slopes with |m| above this");
  s_trends->add_option("--csv", trends.csv, "Per-user CSV export");
  s_trends->add_option("--scale", trends.scale, "Severity scale")
      ->check(CLI::IsMember({"fine", "flagged"}))
      ->capture_default_str();

  AnalyticsOpts tables;
  auto* s_tables = app.add_subcommand("tables", "First/last state contingency tables with chi-square");
  tables.add(s_tables);

  AnalyticsOpts resp;
  auto* s_resp = app.add_subcommand("respstats", "Moderator-first response statistics by severity");
  resp.add(s_resp);

  VoteDebugOpts vd;
  auto* s_vd = app.add_subcommand("vote-debug", "Show member votes and probabilities per post");
  vd.m.add(s_vd);
  s_vd->add_option("--post", vd.posts, "Post ids (repeatable)");
  s_vd->add_option("--split", vd.split, "Posts when no --post is given")
      ->check(CLI::IsMember({"all", "members", "labeled", "train", "test"}))
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (s_synth->parsed()) return cmd_synth(io, synth);
    if (s_lda->parsed()) return cmd_lda_train(io, lda);
    if (s_train->parsed()) return cmd_train(io, train);
    if (s_pred->parsed()) return cmd_predict(io, pred);
    if (s_eval->parsed()) return cmd_eval(io, ev);
    if (s_cv->parsed()) return cmd_cv(io, cv);
    if (s_ab->parsed()) return cmd_ablate(io, ab);
    if (s_trends->parsed()) return cmd_trends(io, trends);
    if (s_tables->parsed()) return cmd_tables(io, tables);
    if (s_resp->parsed()) return cmd_respstats(io, resp);
    if (s_vd->parsed()) return cmd_vote_debug(io, vd);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace triage::cli
