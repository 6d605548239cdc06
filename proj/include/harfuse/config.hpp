#pragma once

#include "harfuse/model.hpp"
#include "harfuse/trainer.hpp"

#include <string>
#include <vector>

namespace harfuse {

/// Merged run configuration: plain-text key-value file plus command-line
/// overrides (flags win). Unknown keys are rejected with file and line.
struct RunConfig {
  std::string model_size = "base";  // base | large | tiny
  std::string fusion = "embrace";
  std::string input_mode = "raw";
  std::vector<std::string> modalities;  // empty means all seven

  TrainConfig train;

  std::string train_manifest;
  std::vector<std::string> val_manifests;
  std::string out_dir;
  std::string resume_checkpoint;

  std::string checkpoint;  // eval / predict input
  std::string manifest;    // eval / predict dataset
  int ensemble_n = 1;
  std::string predictions_out;
  std::string probabilities_out;

  /// Applies one key (exactly the config-file vocabulary). Throws
  /// ConfigError on unknown keys or unparseable values; `context` prefixes
  /// the message (file:line or flag name).
  void apply(const std::string& key, const std::string& value, const std::string& context);

  /// Resolved architecture: size preset plus fusion/input-mode/modality
  /// overrides.
  ModelConfig model_config() const;
};

/// Parses a run-config file. Lines are 'key = value'; '#' starts a comment.
RunConfig parse_run_config(const std::string& path);

}  // namespace harfuse
