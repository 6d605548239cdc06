#pragma once

#include "harfuse/dataset.hpp"
#include "harfuse/model.hpp"
#include "harfuse/rng.hpp"
#include "harfuse/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace harfuse {

/// Output self-ensemble: how many stochastic forward passes to average.
struct EnsembleConfig {
  int size = 1;
  std::uint64_t seed = 0;
};

/// Mean of `size` independent-mask forward outputs. Draw j consumes the
/// sample stream's substream j, so any n prefix-matches the first n draws of
/// a larger ensemble.
Matrix ensemble_probabilities(const Model& model, const SensorSample& sample, int size,
                              const Rng& sample_rng);

struct EnsemblePrediction {
  Matrix probs;              // averaged 5 x class_count
  std::vector<int> classes;  // per-row argmax
};

EnsemblePrediction self_ensemble_predict(const Model& model, const SensorSample& sample,
                                         const EnsembleConfig& config);

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct EvalMetrics {
  long segments = 0;
  long correct = 0;
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_location;
  ConfusionMatrix confusion;  // row: true class, column: predicted class

  std::string summary() const;
};

/// Segment-level accuracy over one or more labeled datasets. Sample i of the
/// concatenated sequence uses prediction substream i of the ensemble seed;
/// the same mapping drives predict_dataset, so the two agree exactly.
EvalMetrics evaluate_datasets(const Model& model,
                              const std::vector<const Dataset*>& datasets,
                              const EnsembleConfig& config);

struct PredictConfig {
  EnsembleConfig ensemble;
  std::string predictions_path;    // one line per sample, 5 one-based labels
  std::string probabilities_path;  // optional companion, 5 x classes values per line
};

struct PredictOutcome {
  bool has_metrics = false;
  EvalMetrics metrics;
};

/// Writes predictions (and optionally probabilities); computes metrics when
/// the dataset carries labels.
PredictOutcome predict_dataset(const Model& model, const Dataset& dataset,
                               const PredictConfig& config);

}  // namespace harfuse
