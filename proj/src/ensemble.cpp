#include "triage/ensemble.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "triage/errors.hpp"

namespace triage {

namespace {

constexpr std::array<std::string_view, kNumFeatureGroups> kGroupNames = {
    "body",     "context", "last_sentence", "liwc", "emotion",  "subjectivity",
    "sentiment", "topic",  "metadata",      "clue", "densevec",
};

std::size_t slot(FeatureGroup g) { return static_cast<std::size_t>(g); }

SparseVector dense_block(const Eigen::VectorXd& v) {
  SparseVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) out.insertBack(i) = v[i];
  return out;
}

void append_block(SparseVector& out, const SparseVector& block, int offset) {
  for (SparseVector::InnerIterator it(block); it; ++it) out.insertBack(offset + it.index()) = it.value();
}

const Lexicons& lexicons_of(const Resources& res) {
  static const Lexicons none;
  return res.lexicons ? *res.lexicons : none;
}

[[noreturn]] void missing(FeatureGroup g, const char* what) {
  throw ConfigError("feature group '" + std::string(to_string(g)) + "' needs " + what);
}

}  // namespace

std::string_view to_string(FeatureGroup g) { return kGroupNames[slot(g)]; }

std::optional<FeatureGroup> parse_feature_group(std::string_view name) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == name) return static_cast<FeatureGroup>(i);
  return std::nullopt;
}

void validate_spec(const FeatureSetSpec& spec) {
  if (spec.empty()) throw InvalidArgument("feature set spec is empty");
  std::set<FeatureGroup> seen;
  for (auto g : spec)
    if (!seen.insert(g).second)
      throw InvalidArgument("feature group '" + std::string(to_string(g)) + "' repeated in spec");
}

std::string spec_name(const FeatureSetSpec& spec) {
  std::string out;
  for (auto g : spec) {
    if (!out.empty()) out += '+';
    out += to_string(g);
  }
  return out;
}

std::vector<FeatureSetSpec> default_specs() {
  using G = FeatureGroup;
  return {
      {G::Body, G::Metadata, G::Subjectivity, G::Emotion},
      {G::Body, G::Context, G::Emotion, G::Liwc},
      {G::Body, G::Context, G::LastSentence},
      {G::Body, G::LastSentence, G::Emotion, G::Sentiment},
      {G::Body, G::Context, G::Topic},
      {G::Body, G::Context, G::Liwc, G::Clue, G::Metadata},
  };
}

FeatureSetSpec single_model_spec() {
  using G = FeatureGroup;
  return {G::Body, G::Metadata, G::Subjectivity, G::Emotion, G::Context, G::LastSentence, G::Topic, G::Liwc};
}

FeatureSetSpec bow_spec() { return {FeatureGroup::Body}; }

std::vector<FeatureSetSpec> read_specs(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("spec file is not valid JSON: ") + e.what());
  }
  if (!j.is_array() || j.empty()) throw ConfigError("spec file must be a nonempty list of lists of group names");
  std::vector<FeatureSetSpec> out;
  for (const auto& row : j) {
    if (!row.is_array()) throw ConfigError("spec file must be a nonempty list of lists of group names");
    FeatureSetSpec spec;
    for (const auto& name : row) {
      if (!name.is_string()) throw ConfigError("feature group names must be strings");
      auto g = parse_feature_group(name.get<std::string>());
      if (!g) throw ConfigError("unknown feature group '" + name.get<std::string>() + "'");
      spec.push_back(*g);
    }
    try {
      validate_spec(spec);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<FeatureSetSpec> load_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read spec file: " + path);
  return read_specs(in);
}

std::string specs_to_json(const std::vector<FeatureSetSpec>& specs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& spec : specs) {
    nlohmann::json row = nlohmann::json::array();
    for (auto g : spec) row.push_back(std::string(to_string(g)));
    j.push_back(std::move(row));
  }
  return j.dump();
}

Lexicons load_lexicon_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("lexicon directory not found: " + dir);
  Lexicons lex;
  auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
  if (fs::exists(path("categories.tsv"))) lex.categories = load_category_lexicon(path("categories.tsv"));
  if (fs::exists(path("emotions.tsv"))) lex.emotions = load_emotion_lexicon(path("emotions.tsv"));
  if (fs::exists(path("subjectivity.tsv"))) lex.subjectivity = load_subjectivity_lexicon(path("subjectivity.tsv"));
  if (fs::exists(path("clues.txt"))) lex.clues = load_clue_lexicon(path("clues.txt"));
  return lex;
}

Resources build_resources(const Corpus& corpus, std::span<const std::string> train_ids,
                          std::span<const std::string> heldout_ids, const ResourceConfig& cfg,
                          std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const VectorStore> vectors) {
  cfg.context.validate();
  Resources res;
  res.context = cfg.context;
  res.lexicons = lexicons ? std::move(lexicons) : std::make_shared<Lexicons>();
  res.vectors = std::move(vectors);
  std::vector<TokenList> docs;
  docs.reserve(train_ids.size());
  for (const auto& id : train_ids) docs.push_back(tokenize(corpus.at(id).body));
  res.vocab = build_vocab(docs, cfg.bow_min_df);
  if (cfg.train_lda) {
    cfg.lda.validate();
    const std::set<std::string_view> heldout(heldout_ids.begin(), heldout_ids.end());
    std::vector<const Post*> lda_posts;
    for (const Post& p : corpus.posts())
      if (!heldout.count(p.post_id)) lda_posts.push_back(&p);
    // Corpus file order must not influence the sampler.
    std::sort(lda_posts.begin(), lda_posts.end(),
              [](const Post* a, const Post* b) { return a->post_id < b->post_id; });
    std::vector<TokenList> lda_docs;
    lda_docs.reserve(lda_posts.size());
    for (const Post* p : lda_posts) lda_docs.push_back(tokenize(p->body));
    res.lda = lda_train(lda_docs, cfg.lda);
    res.lda_infer_iters = cfg.lda.infer_iters;
  }
  return res;
}

bool uses_group(const std::vector<FeatureSetSpec>& specs, FeatureGroup g) {
  return std::any_of(specs.begin(), specs.end(),
                     [&](const FeatureSetSpec& s) { return std::find(s.begin(), s.end(), g) != s.end(); });
}

int group_width(FeatureGroup g, const Resources& res) {
  const Lexicons& lex = lexicons_of(res);
  switch (g) {
    case FeatureGroup::Body:
      return static_cast<int>(res.vocab.size());
    case FeatureGroup::Context:
      return 2 * static_cast<int>(res.vocab.size());
    case FeatureGroup::LastSentence:
    case FeatureGroup::Liwc:
      if (!lex.categories) missing(g, "a category lexicon (categories.tsv)");
      return lex.categories->num_categories();
    case FeatureGroup::Emotion:
      if (!lex.emotions) missing(g, "an emotion lexicon (emotions.tsv)");
      return kNumEmotions + 1;
    case FeatureGroup::Subjectivity:
      if (!lex.subjectivity) missing(g, "a subjectivity lexicon (subjectivity.tsv)");
      return 4;
    case FeatureGroup::Sentiment:
      if (!lex.subjectivity) missing(g, "a subjectivity lexicon (subjectivity.tsv)");
      return 2;
    case FeatureGroup::Topic:
      if (!res.lda) missing(g, "a trained topic model");
      return res.lda->topics;
    case FeatureGroup::Metadata:
      return metadata_size(res.context);
    case FeatureGroup::Clue:
      if (!lex.clues) missing(g, "a clue lexicon (clues.txt)");
      return 2;
    case FeatureGroup::Densevec:
      if (!res.vectors || !res.vectors->dimension()) missing(g, "sentence vectors");
      return *res.vectors->dimension();
  }
  throw InvalidArgument("unknown feature group");
}

std::vector<GroupRange> layout(const FeatureSetSpec& spec, const Resources& res) {
  validate_spec(spec);
  std::vector<GroupRange> out;
  int offset = 0;
  for (auto g : spec) {
    const int w = group_width(g, res);
    out.push_back({g, offset, w});
    offset += w;
  }
  return out;
}

int feature_dimension(const FeatureSetSpec& spec, const Resources& res) {
  const auto l = layout(spec, res);
  return l.empty() ? 0 : l.back().offset + l.back().width;
}

SparseVector group_block(const Post& target, const ThreadView& thread, FeatureGroup g, const Resources& res) {
  const int width = group_width(g, res);
  const Lexicons& lex = lexicons_of(res);
  switch (g) {
    case FeatureGroup::Body:
      return bow_vector(tokenize(target.body), res.vocab);
    case FeatureGroup::Context: {
      SparseVector out(width);
      append_block(out, bow_vector(author_prior_tokens(thread, target), res.vocab), 0);
      append_block(out, bow_vector(prior_window_tokens(thread, target, res.context.window_size), res.vocab),
                   width / 2);
      return out;
    }
    case FeatureGroup::LastSentence:
      return dense_block(last_sentence_categories(target, *lex.categories));
    case FeatureGroup::Liwc:
      return dense_block(category_features(raw_tokens(target.body), *lex.categories));
    case FeatureGroup::Emotion: {
      const auto profile = emotion_profile(raw_tokens(target.body), *lex.emotions);
      Eigen::VectorXd v(width);
      v.head(kNumEmotions) = profile.probabilities;
      v[kNumEmotions] = profile.dominant;
      return dense_block(v);
    }
    case FeatureGroup::Subjectivity:
      return dense_block(subjectivity_features(raw_tokens(target.body), *lex.subjectivity));
    case FeatureGroup::Sentiment:
      return dense_block(subjectivity_features(raw_tokens(target.body), *lex.subjectivity).tail<2>());
    case FeatureGroup::Topic:
      return dense_block(
          lda_infer(*res.lda, tokenize(target.body), res.lda_infer_iters, res.lda->seed ^ stable_hash(target.post_id)));
    case FeatureGroup::Metadata:
      return dense_block(metadata_features(target, thread, res.context));
    case FeatureGroup::Clue:
      return dense_block(clue_features(raw_tokens(target.body), *lex.clues));
    case FeatureGroup::Densevec:
      return dense_block(post_vector(*res.vectors, target.post_id,
                                     static_cast<int>(split_sentences(target.body).size())));
  }
  throw InvalidArgument("unknown feature group");
}

SparseVector assemble(const Post& target, const ThreadView& thread, const FeatureSetSpec& spec,
                      const Resources& res) {
  const auto ranges = layout(spec, res);
  SparseVector out(feature_dimension(spec, res));
  for (const auto& r : ranges) append_block(out, group_block(target, thread, r.group, res), r.offset);
  return out;
}

FeatureExtractor::FeatureExtractor(const Corpus& corpus, std::shared_ptr<const Resources> resources)
    : corpus_(&corpus), res_(std::move(resources)) {
  if (!res_) throw InvalidArgument("feature extractor needs resources");
}

const SparseVector& FeatureExtractor::block(const Post& p, FeatureGroup g) const {
  auto& entry = cache_[p.post_id][slot(g)];
  if (!entry) entry = group_block(p, corpus_->thread(p.thread_id), g, *res_);
  return *entry;
}

SparseVector FeatureExtractor::assemble(const Post& p, const FeatureSetSpec& spec) const {
  const auto ranges = layout(spec, *res_);
  SparseVector out(feature_dimension(spec, *res_));
  for (const auto& r : ranges) append_block(out, block(p, r.group), r.offset);
  return out;
}

RowFeatureMatrix FeatureExtractor::row_matrix(std::span<const Post* const> posts, const FeatureSetSpec& spec) const {
  const int dim = feature_dimension(spec, *res_);
  std::vector<Eigen::Triplet<double, int>> triplets;
  for (std::size_t r = 0; r < posts.size(); ++r) {
    const SparseVector x = assemble(*posts[r], spec);
    for (SparseVector::InnerIterator it(x); it; ++it)
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(it.index()), it.value());
  }
  RowFeatureMatrix m(static_cast<Eigen::Index>(posts.size()), dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

FeatureMatrix FeatureExtractor::matrix(std::span<const Post* const> posts, const FeatureSetSpec& spec) const {
  return FeatureMatrix(row_matrix(posts, spec));
}

SeverityLabel vote(std::span<const SeverityLabel> member_labels) {
  if (member_labels.empty()) throw InvalidArgument("vote: no member labels");
  std::array<int, kNumClasses> counts{};
  for (auto l : member_labels) ++counts[static_cast<std::size_t>(index_of(l))];
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (counts[static_cast<std::size_t>(c)] >= counts[static_cast<std::size_t>(best)]) best = c;
  return label_at(best);
}

EnsembleModel train_ensemble(const FeatureExtractor& fx, std::span<const Post* const> labeled,
                             const std::vector<FeatureSetSpec>& specs, const TrainConfig& cfg) {
  if (specs.empty()) throw InvalidArgument("train_ensemble: no feature set specs");
  if (labeled.empty()) throw InvalidArgument("train_ensemble: no labeled posts");
  cfg.validate();
  std::vector<SeverityLabel> y;
  y.reserve(labeled.size());
  for (const Post* p : labeled) {
    if (!p->label) throw InvalidArgument("train_ensemble: post " + p->post_id + " has no label");
    y.push_back(*p->label);
  }
  EnsembleModel model;
  model.resources = fx.shared_resources();
  for (const auto& spec : specs) {
    validate_spec(spec);
    model.members.push_back({spec, train(fx.matrix(labeled, spec), y, cfg)});
  }
  return model;
}

EnsembleModel train_ensemble(const Corpus& corpus, const std::vector<FeatureSetSpec>& specs, const TrainConfig& cfg,
                             std::shared_ptr<const Resources> resources) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : corpus.labels()) ids.push_back(id);
  const FeatureExtractor fx(corpus, std::move(resources));
  return train_ensemble(fx, posts_by_id(corpus, ids), specs, cfg);
}

std::vector<const Post*> posts_by_id(const Corpus& corpus, std::span<const std::string> ids) {
  std::vector<const Post*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(&corpus.at(id));
  return out;
}

std::vector<SeverityLabel> member_predictions(const EnsembleModel& model, const FeatureExtractor& fx, const Post& p) {
  std::vector<SeverityLabel> out;
  out.reserve(model.members.size());
  for (const auto& m : model.members) out.push_back(predict(m.forest, fx.assemble(p, m.spec)));
  return out;
}

SeverityLabel predict(const EnsembleModel& model, const FeatureExtractor& fx, const Post& p) {
  return vote(member_predictions(model, fx, p));
}

std::vector<SeverityLabel> predict(const EnsembleModel& model, const FeatureExtractor& fx,
                                   std::span<const Post* const> posts) {
  if (model.members.empty()) throw InvalidArgument("predict: ensemble has no members");
  std::vector<std::vector<SeverityLabel>> by_member;
  for (const auto& m : model.members) by_member.push_back(predict(m.forest, fx.row_matrix(posts, m.spec)));
  std::vector<SeverityLabel> out;
  out.reserve(posts.size());
  std::vector<SeverityLabel> votes(model.members.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    for (std::size_t m = 0; m < by_member.size(); ++m) votes[m] = by_member[m][i];
    out.push_back(vote(votes));
  }
  return out;
}

std::vector<AblationRung> ablation_ladder() {
  using G = FeatureGroup;
  FeatureSetSpec s = {G::Body};
  std::vector<AblationRung> out;
  out.push_back({"baseline (body)", s});
  out.push_back({"dense vectors", FeatureSetSpec{G::Densevec}});
  s.push_back(G::Context);
  out.push_back({"body+contextual", s});
  s.push_back(G::Metadata);
  s.push_back(G::Subjectivity);
  out.push_back({"+meta+subj", s});
  s.push_back(G::Clue);
  out.push_back({"+lexical clues", s});
  s.push_back(G::LastSentence);
  out.push_back({"+last sentence", s});
  s.push_back(G::Emotion);
  out.push_back({"+emotion", s});
  s.push_back(G::Topic);
  out.push_back({"+topic", s});
  s.pop_back();
  s.push_back(G::Liwc);
  out.push_back({"-topic+liwc", s});
  s.push_back(G::Topic);
  out.push_back({"+topic", s});
  out.push_back({"ensemble", std::nullopt});
  return out;
}

}  // namespace triage
