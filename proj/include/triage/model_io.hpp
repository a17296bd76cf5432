#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "triage/ensemble.hpp"

namespace triage {

inline constexpr const char* kModelFormat = "triage-model/1";

/// Everything `predict` needs apart from the lexicon and sentence-vector files,
/// which are stored by reference.
struct ModelFile {
  EnsembleModel model;
  TrainConfig train;
  ResourceConfig resources;
  std::string lexicon_dir;
  std::string vectors_path;
  std::uint64_t seed = 0;
  /// Labeled posts used for training and the held-out remainder.
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct ModelLoadOptions {
  /// Override the stored references.
  std::optional<std::string> lexicon_dir;
  std::optional<std::string> vectors_path;
};

/// Deterministic: the same model always serializes to the same bytes.
std::string model_to_json(const ModelFile& m);
ModelFile model_from_json(const std::string& text, const ModelLoadOptions& opt = {});

void save_model(const std::string& path, const ModelFile& m);
/// Throws IoError when the file is unreadable or the referenced lexicons/vectors are missing,
/// ConfigError when the document is not a model of this format.
ModelFile load_model(const std::string& path, const ModelLoadOptions& opt = {});

std::string lda_to_json(const LdaModel& lda);
LdaModel lda_from_json(const std::string& text);

}  // namespace triage
