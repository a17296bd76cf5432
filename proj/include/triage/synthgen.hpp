#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/densevec.hpp"
#include "triage/severity.hpp"

namespace triage {

struct SynthConfig {
  std::uint64_t seed = 7;
  /// Member authors; moderators come on top (moderator_fraction of all authors).
  int n_users = 260;
  /// Expected number of threads.
  int n_threads = 900;
  int months = 12;
  /// Labeled member posts; class counts follow `proportions` exactly (largest remainder).
  int n_labeled = 1188;
  std::array<double, kNumClasses> proportions = {0.60, 0.25, 0.12, 0.03};
  double moderator_fraction = 0.04;
  /// Members whose severity declines month over month.
  double declining_fraction = 0.2;
  /// Words per class-marker pool. Larger pools make single words rarer, which
  /// weakens bag-of-words while leaving lexicon aggregates intact.
  int marker_pool_size = 120;
  /// Scales the number of marker tokens per post.
  double marker_strength = 1.0;
  /// Planted topics (each with its own word pool).
  int topics = 8;
  int sentence_vector_dim = 8;

  void validate() const;
};

struct SynthCorpus {
  Corpus corpus;
  /// Generating severity of every member post (labeled or not).
  std::map<std::string, SeverityLabel> truth;
  std::set<std::string> declining_users;
  std::map<std::string, int> user_first_month;
  VectorStore vectors;
  /// Lexicon fixtures in the formats read by psychfeat.
  std::string categories_tsv;
  std::string emotions_tsv;
  std::string subjectivity_tsv;
  std::string clues_txt;
};

/// Deterministic under cfg.seed.
SynthCorpus generate(const SynthConfig& cfg);

/// Writes the corpus, "<stem>.truth.tsv", "<stem>.vectors.tsv" and lexicon files into lexicon_dir.
void write_synth(const SynthCorpus& synth, const std::string& corpus_path, const std::string& lexicon_dir);

/// Default fixture locations next to a corpus file.
std::string sibling_lexicon_dir(const std::string& corpus_path);
std::string sibling_vectors_path(const std::string& corpus_path);
std::string sibling_truth_path(const std::string& corpus_path);

/// Reads "post_id<TAB>label" lines.
std::map<std::string, SeverityLabel> load_truth(const std::string& path);

}  // namespace triage
