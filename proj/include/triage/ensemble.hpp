#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "triage/contextfeat.hpp"
#include "triage/corpus.hpp"
#include "triage/densevec.hpp"
#include "triage/gbt.hpp"
#include "triage/psychfeat.hpp"
#include "triage/textprep.hpp"
#include "triage/topics.hpp"

namespace triage {

enum class FeatureGroup {
  Body,
  Context,
  LastSentence,
  Liwc,
  Emotion,
  Subjectivity,
  Sentiment,
  Topic,
  Metadata,
  Clue,
  Densevec,
};

inline constexpr int kNumFeatureGroups = 11;

std::string_view to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view name);

/// Ordered group list; determines the feature layout of one member.
using FeatureSetSpec = std::vector<FeatureGroup>;

/// Throws InvalidArgument when empty or when a group repeats.
void validate_spec(const FeatureSetSpec& spec);
std::string spec_name(const FeatureSetSpec& spec);

/// The six members of the default ensemble.
std::vector<FeatureSetSpec> default_specs();
/// The best single feature set, used as the non-ensemble comparison model.
FeatureSetSpec single_model_spec();
FeatureSetSpec bow_spec();

/// JSON: a list of lists of group names.
std::vector<FeatureSetSpec> read_specs(std::istream& in);
std::vector<FeatureSetSpec> load_specs(const std::string& path);
std::string specs_to_json(const std::vector<FeatureSetSpec>& specs);

struct Lexicons {
  std::optional<CategoryLexicon> categories;
  std::optional<EmotionLexicon> emotions;
  std::optional<SubjectivityLexicon> subjectivity;
  std::optional<ClueLexicon> clues;
};

/// Loads categories.tsv, emotions.tsv, subjectivity.tsv and clues.txt from dir.
/// Absent files leave the lexicon unset; malformed files throw IoError.
Lexicons load_lexicon_dir(const std::string& dir);

/// Shared, immutable inputs of feature extraction.
struct Resources {
  Vocabulary vocab;
  std::shared_ptr<const Lexicons> lexicons = std::make_shared<Lexicons>();
  std::optional<LdaModel> lda;
  int lda_infer_iters = 100;
  std::shared_ptr<const VectorStore> vectors;
  ContextConfig context;
};

struct ResourceConfig {
  int bow_min_df = 2;
  ContextConfig context;
  LdaConfig lda;
  bool train_lda = false;
};

/// Body vocabulary from train_ids. When cfg.train_lda is set, LDA is fit on every
/// post of the corpus except those in heldout_ids.
Resources build_resources(const Corpus& corpus, std::span<const std::string> train_ids,
                          std::span<const std::string> heldout_ids, const ResourceConfig& cfg,
                          std::shared_ptr<const Lexicons> lexicons, std::shared_ptr<const VectorStore> vectors);

bool uses_group(const std::vector<FeatureSetSpec>& specs, FeatureGroup g);

/// Block width of a group under the given resources; throws ConfigError when a resource is missing.
int group_width(FeatureGroup g, const Resources& res);

struct GroupRange {
  FeatureGroup group;
  int offset;
  int width;
};
std::vector<GroupRange> layout(const FeatureSetSpec& spec, const Resources& res);
int feature_dimension(const FeatureSetSpec& spec, const Resources& res);

/// One group's values for a post, sized group_width(g, res).
SparseVector group_block(const Post& target, const ThreadView& thread, FeatureGroup g, const Resources& res);

/// Concatenation of the spec's group blocks in spec order.
SparseVector assemble(const Post& target, const ThreadView& thread, const FeatureSetSpec& spec,
                      const Resources& res);

/// Caches group blocks per post so that members sharing a group compute it once.
/// Not thread-safe.
class FeatureExtractor {
 public:
  FeatureExtractor(const Corpus& corpus, std::shared_ptr<const Resources> resources);

  const Resources& resources() const { return *res_; }
  const std::shared_ptr<const Resources>& shared_resources() const { return res_; }
  const Corpus& corpus() const { return *corpus_; }
  const SparseVector& block(const Post& p, FeatureGroup g) const;
  SparseVector assemble(const Post& p, const FeatureSetSpec& spec) const;
  FeatureMatrix matrix(std::span<const Post* const> posts, const FeatureSetSpec& spec) const;
  RowFeatureMatrix row_matrix(std::span<const Post* const> posts, const FeatureSetSpec& spec) const;

 private:
  const Corpus* corpus_;
  std::shared_ptr<const Resources> res_;
  mutable std::unordered_map<std::string, std::array<std::optional<SparseVector>, kNumFeatureGroups>> cache_;
};

struct EnsembleMember {
  FeatureSetSpec spec;
  BoostedForest forest;

  bool operator==(const EnsembleMember&) const = default;
};

struct EnsembleModel {
  std::vector<EnsembleMember> members;
  std::shared_ptr<const Resources> resources;
};

/// Most frequent label; ties go to the most severe of the tied labels. Throws on an empty list.
SeverityLabel vote(std::span<const SeverityLabel> member_labels);

/// One forest per spec, all trained on the same labeled posts. Throws InvalidArgument
/// when no post is given or one is unlabeled.
EnsembleModel train_ensemble(const FeatureExtractor& fx, std::span<const Post* const> labeled,
                             const std::vector<FeatureSetSpec>& specs, const TrainConfig& cfg);
/// Trains on every labeled post of the corpus.
EnsembleModel train_ensemble(const Corpus& corpus, const std::vector<FeatureSetSpec>& specs, const TrainConfig& cfg,
                             std::shared_ptr<const Resources> resources);

/// Posts of the corpus with the given ids, in the order given. Throws NotFound.
std::vector<const Post*> posts_by_id(const Corpus& corpus, std::span<const std::string> ids);

std::vector<SeverityLabel> member_predictions(const EnsembleModel& model, const FeatureExtractor& fx, const Post& p);
SeverityLabel predict(const EnsembleModel& model, const FeatureExtractor& fx, const Post& p);
std::vector<SeverityLabel> predict(const EnsembleModel& model, const FeatureExtractor& fx,
                                   std::span<const Post* const> posts);

/// One rung of the feature-addition ladder. A rung without a spec is the full ensemble.
struct AblationRung {
  std::string name;
  std::optional<FeatureSetSpec> spec;
};
std::vector<AblationRung> ablation_ladder();

}  // namespace triage
