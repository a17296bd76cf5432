#include "triage/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triage/errors.hpp"

namespace triage {

using nlohmann::json;

namespace {

json vocab_json(const Vocabulary& v) { return {{"min_df", v.min_df()}, {"terms", v.terms()}}; }

Vocabulary vocab_from(const json& j) {
  return Vocabulary(j.at("terms").get<std::vector<std::string>>(), j.at("min_df").get<int>());
}

json lda_json(const LdaModel& lda) {
  json rows = json::array();
  for (Eigen::Index k = 0; k < lda.topic_word.rows(); ++k) {
    std::vector<int> row(static_cast<std::size_t>(lda.topic_word.cols()));
    for (Eigen::Index w = 0; w < lda.topic_word.cols(); ++w) row[static_cast<std::size_t>(w)] = lda.topic_word(k, w);
    rows.push_back(std::move(row));
  }
  return {{"topics", lda.topics}, {"alpha", lda.alpha}, {"beta", lda.beta}, {"seed", lda.seed},
          {"iterations", lda.iterations}, {"vocab", vocab_json(lda.vocab)}, {"topic_word", std::move(rows)}};
}

LdaModel lda_from(const json& j) {
  LdaModel lda;
  lda.topics = j.at("topics").get<int>();
  lda.alpha = j.at("alpha").get<double>();
  lda.beta = j.at("beta").get<double>();
  lda.seed = j.at("seed").get<std::uint64_t>();
  lda.iterations = j.at("iterations").get<int>();
  lda.vocab = vocab_from(j.at("vocab"));
  const auto& rows = j.at("topic_word");
  if (static_cast<int>(rows.size()) != lda.topics) throw ConfigError("lda: topic_word has the wrong number of rows");
  lda.topic_word.resize(lda.topics, lda.vocab.size());
  for (int k = 0; k < lda.topics; ++k) {
    const auto row = rows[static_cast<std::size_t>(k)].get<std::vector<int>>();
    if (static_cast<int>(row.size()) != lda.vocab.size()) throw ConfigError("lda: topic_word row has the wrong width");
    for (int w = 0; w < lda.vocab.size(); ++w) lda.topic_word(k, w) = row[static_cast<std::size_t>(w)];
  }
  lda.topic_totals = lda.topic_word.rowwise().sum();
  return lda;
}

json context_json(const ContextConfig& c) {
  return {{"window_size", c.window_size},   {"include_temporal", c.include_temporal},
          {"morning_start", c.morning_start}, {"afternoon_start", c.afternoon_start},
          {"evening_start", c.evening_start}, {"day_start", c.day_start},
          {"night_start", c.night_start}};
}

ContextConfig context_from(const json& j) {
  ContextConfig c;
  c.window_size = j.at("window_size").get<int>();
  c.include_temporal = j.at("include_temporal").get<bool>();
  c.morning_start = j.at("morning_start").get<int>();
  c.afternoon_start = j.at("afternoon_start").get<int>();
  c.evening_start = j.at("evening_start").get<int>();
  c.day_start = j.at("day_start").get<int>();
  c.night_start = j.at("night_start").get<int>();
  c.validate();
  return c;
}

json lda_config_json(const LdaConfig& c) {
  return {{"topics", c.topics},           {"alpha", c.alpha},   {"beta", c.beta},
          {"train_iters", c.train_iters}, {"infer_iters", c.infer_iters},
          {"min_df", c.min_df},           {"seed", c.seed}};
}

LdaConfig lda_config_from(const json& j) {
  LdaConfig c;
  c.topics = j.at("topics").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.train_iters = j.at("train_iters").get<int>();
  c.infer_iters = j.at("infer_iters").get<int>();
  c.min_df = j.at("min_df").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json train_json(const TrainConfig& c) {
  return {{"eta", c.eta},       {"max_depth", c.max_depth}, {"min_child_weight", c.min_child_weight},
          {"lambda", c.lambda}, {"gamma", c.gamma},         {"rounds", c.rounds},
          {"seed", c.seed}};
}

TrainConfig train_from(const json& j) {
  TrainConfig c;
  c.eta = j.at("eta").get<double>();
  c.max_depth = j.at("max_depth").get<int>();
  c.min_child_weight = j.at("min_child_weight").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.rounds = j.at("rounds").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

// Column layout keeps large forests compact.
json tree_json(const RegressionTree& t) {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, value, gain;
  for (const TreeNode& n : t.nodes) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"gain", gain}};
}

RegressionTree tree_from(const json& j, int num_features) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const auto gain = j.at("gain").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (n == 0 || left.size() != n || right.size() != n || threshold.size() != n || value.size() != n ||
      gain.size() != n)
    throw ConfigError("tree: node columns differ in length");
  RegressionTree t;
  const int count = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode node;
    node.feature = feature[i];
    node.threshold = threshold[i];
    node.left = left[i];
    node.right = right[i];
    node.value = value[i];
    node.gain = gain[i];
    if (!node.is_leaf()) {
      // Children always follow their parent, so traversal cannot loop.
      const int self = static_cast<int>(i);
      if (node.feature >= num_features || node.left <= self || node.right <= self || node.left >= count ||
          node.right >= count)
        throw ConfigError("tree: malformed node " + std::to_string(i));
      node.default_left = 0.0 < node.threshold;
    }
    t.nodes.push_back(node);
  }
  return t;
}

json forest_json(const BoostedForest& f) {
  json classes = json::array();
  for (const auto& trees : f.trees) {
    json c = json::array();
    for (const auto& t : trees) c.push_back(tree_json(t));
    classes.push_back(std::move(c));
  }
  return {{"base_margin", f.base_margin}, {"num_features", f.num_features}, {"trees", std::move(classes)}};
}

BoostedForest forest_from(const json& j) {
  BoostedForest f;
  f.base_margin = j.at("base_margin").get<double>();
  f.num_features = j.at("num_features").get<int>();
  const auto& classes = j.at("trees");
  if (classes.size() != static_cast<std::size_t>(kNumClasses)) throw ConfigError("forest: expected 4 tree lists");
  for (int c = 0; c < kNumClasses; ++c)
    for (const auto& t : classes[static_cast<std::size_t>(c)])
      f.trees[static_cast<std::size_t>(c)].push_back(tree_from(t, f.num_features));
  for (const auto& trees : f.trees)
    if (trees.size() != f.trees[0].size()) throw ConfigError("forest: classes have different round counts");
  return f;
}

FeatureSetSpec spec_from(const json& j) {
  FeatureSetSpec spec;
  for (const auto& name : j) {
    const auto g = parse_feature_group(name.get<std::string>());
    if (!g) throw ConfigError("unknown feature group: " + name.get<std::string>());
    spec.push_back(*g);
  }
  validate_spec(spec);
  return spec;
}

json spec_json(const FeatureSetSpec& spec) {
  json out = json::array();
  for (FeatureGroup g : spec) out.push_back(std::string(to_string(g)));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string model_to_json(const ModelFile& m) {
  if (!m.model.resources) throw InvalidArgument("model_to_json: model has no resources");
  const Resources& res = *m.model.resources;
  json members = json::array();
  for (const auto& mem : m.model.members)
    members.push_back({{"spec", spec_json(mem.spec)}, {"forest", forest_json(mem.forest)}});
  json doc = {
      {"format", kModelFormat},
      {"seed", m.seed},
      {"lexicon_dir", m.lexicon_dir},
      {"vectors_path", m.vectors_path},
      {"train", train_json(m.train)},
      {"resource_config",
       {{"bow_min_df", m.resources.bow_min_df},
        {"context", context_json(m.resources.context)},
        {"lda", lda_config_json(m.resources.lda)},
        {"train_lda", m.resources.train_lda}}},
      {"vocab", vocab_json(res.vocab)},
      {"context", context_json(res.context)},
      {"lda", res.lda ? lda_json(*res.lda) : json(nullptr)},
      {"lda_infer_iters", res.lda_infer_iters},
      {"members", std::move(members)},
      {"split", {{"train", m.train_ids}, {"test", m.test_ids}}},
  };
  return doc.dump() + '\n';
}

ModelFile model_from_json(const std::string& text, const ModelLoadOptions& opt) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model: not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kModelFormat)
      throw ConfigError(std::string("model: missing or unsupported format (expected ") + kModelFormat + ")");
    ModelFile m;
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.lexicon_dir = opt.lexicon_dir.value_or(doc.at("lexicon_dir").get<std::string>());
    m.vectors_path = opt.vectors_path.value_or(doc.at("vectors_path").get<std::string>());
    m.train = train_from(doc.at("train"));
    const auto& rc = doc.at("resource_config");
    m.resources.bow_min_df = rc.at("bow_min_df").get<int>();
    m.resources.context = context_from(rc.at("context"));
    m.resources.lda = lda_config_from(rc.at("lda"));
    m.resources.train_lda = rc.at("train_lda").get<bool>();

    auto res = std::make_shared<Resources>();
    res->vocab = vocab_from(doc.at("vocab"));
    res->context = context_from(doc.at("context"));
    if (!doc.at("lda").is_null()) res->lda = lda_from(doc.at("lda"));
    res->lda_infer_iters = doc.at("lda_infer_iters").get<int>();
    if (!m.lexicon_dir.empty()) res->lexicons = std::make_shared<const Lexicons>(load_lexicon_dir(m.lexicon_dir));
    if (!m.vectors_path.empty()) {
      auto load = load_sentence_vectors(m.vectors_path);
      res->vectors = std::make_shared<const VectorStore>(std::move(load.store));
    }
    m.model.resources = res;

    for (const auto& mem : doc.at("members")) {
      EnsembleMember e{spec_from(mem.at("spec")), forest_from(mem.at("forest"))};
      const int dim = feature_dimension(e.spec, *res);
      if (dim != e.forest.num_features)
        throw ConfigError("model: member " + spec_name(e.spec) + " expects " + std::to_string(e.forest.num_features) +
                          " features but the loaded resources give " + std::to_string(dim));
      m.model.members.push_back(std::move(e));
    }
    if (m.model.members.empty()) throw ConfigError("model: no members");
    m.train_ids = doc.at("split").at("train").get<std::vector<std::string>>();
    m.test_ids = doc.at("split").at("test").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& m) {
  const std::string text = model_to_json(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

ModelFile load_model(const std::string& path, const ModelLoadOptions& opt) {
  return model_from_json(read_file(path), opt);
}

std::string lda_to_json(const LdaModel& lda) {
  json doc = lda_json(lda);
  doc["format"] = "triage-lda/1";
  return doc.dump() + '\n';
}

LdaModel lda_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "triage-lda/1") throw ConfigError("lda: missing or unsupported format");
    return lda_from(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("lda: malformed document: ") + e.what());
  }
}

}  // namespace triage
