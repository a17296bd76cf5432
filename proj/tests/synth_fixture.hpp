#pragma once

#include <memory>
#include <sstream>

#include "triage/ensemble.hpp"
#include "triage/synthgen.hpp"

namespace triage::testing {

struct SynthFixture {
  SynthCorpus synth;
  std::shared_ptr<const Lexicons> lexicons;
  std::shared_ptr<const VectorStore> vectors;
};

inline Lexicons lexicons_of(const SynthCorpus& s) {
  Lexicons lex;
  std::istringstream cat(s.categories_tsv), emo(s.emotions_tsv), subj(s.subjectivity_tsv), clue(s.clues_txt);
  lex.categories = read_category_lexicon(cat);
  lex.emotions = read_emotion_lexicon(emo);
  lex.subjectivity = read_subjectivity_lexicon(subj);
  lex.clues = read_clue_lexicon(clue);
  return lex;
}

// A reduced corpus that trains in well under a second per model.
inline SynthConfig small_config(std::uint64_t seed = 7) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_users = 90;
  cfg.n_threads = 300;
  cfg.n_labeled = 400;
  return cfg;
}

inline SynthFixture make_synth(const SynthConfig& cfg) {
  SynthFixture f{generate(cfg), nullptr, nullptr};
  f.lexicons = std::make_shared<const Lexicons>(lexicons_of(f.synth));
  f.vectors = std::make_shared<const VectorStore>(f.synth.vectors);
  return f;
}

}  // namespace triage::testing
