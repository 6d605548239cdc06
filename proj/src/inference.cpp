#include "harfuse/inference.hpp"

#include <cstdio>
#include <fstream>

namespace harfuse {

Matrix ensemble_probabilities(const Model& model, const SensorSample& sample, int size,
                              const Rng& sample_rng) {
  if (size < 1) throw ConfigError("ensemble size must be >= 1");
  Matrix mean;
  for (int j = 0; j < size; ++j) {
    Rng draw = sample_rng.fork(static_cast<std::uint64_t>(j));
    const Matrix probs = model.forward(sample, draw);
    if (j == 0)
      mean = probs;
    else
      mean += probs;
  }
  return mean / static_cast<double>(size);
}

EnsemblePrediction self_ensemble_predict(const Model& model, const SensorSample& sample,
                                         const EnsembleConfig& config) {
  EnsemblePrediction out;
  out.probs = ensemble_probabilities(model, sample, config.size, Rng(config.seed));
  out.classes = predict(out.probs);
  return out;
}

std::string EvalMetrics::summary() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", overall_accuracy);
  std::string s = "accuracy " + std::string(buf) + " over " + std::to_string(segments) +
                  " segments";
  for (const auto& [location, acc] : per_location) {
    std::snprintf(buf, sizeof(buf), " %s=%.6f", location.c_str(), acc);
    s += buf;
  }
  return s;
}

namespace {

struct Tally {
  long segments = 0;
  long correct = 0;
};

EvalMetrics finalize(const std::map<std::string, Tally>& by_location,
                     const ConfusionMatrix& confusion, int class_count) {
  EvalMetrics m;
  m.confusion = confusion;
  for (const auto& [location, tally] : by_location) {
    m.segments += tally.segments;
    m.correct += tally.correct;
    m.per_location[location] =
        tally.segments ? static_cast<double>(tally.correct) / tally.segments : 0.0;
  }
  m.overall_accuracy = m.segments ? static_cast<double>(m.correct) / m.segments : 0.0;
  (void)class_count;
  return m;
}

}  // namespace

EvalMetrics evaluate_datasets(const Model& model,
                              const std::vector<const Dataset*>& datasets,
                              const EnsembleConfig& config) {
  const int classes = model.config().class_count;
  ConfusionMatrix confusion = ConfusionMatrix::Zero(classes, classes);
  std::map<std::string, Tally> by_location;
  const Rng root(config.seed);

  std::uint64_t global_index = 0;
  for (const Dataset* dataset : datasets) {
    Tally& tally = by_location[dataset->location];
    for (const SensorSample& sample : dataset->samples) {
      if (!sample.has_labels)
        throw InputError("evaluation requires labels; split '" + dataset->split +
                         "' has none");
      const Matrix probs =
          ensemble_probabilities(model, sample, config.size, root.fork(global_index));
      const std::vector<int> classes_hat = predict(probs);
      for (int t = 0; t < kSegmentsPerSample; ++t) {
        const int truth = sample.labels[static_cast<std::size_t>(t)];
        const int guess = classes_hat[static_cast<std::size_t>(t)];
        confusion(truth, guess) += 1;
        tally.segments += 1;
        if (truth == guess) tally.correct += 1;
      }
      ++global_index;
    }
  }
  return finalize(by_location, confusion, classes);
}

PredictOutcome predict_dataset(const Model& model, const Dataset& dataset,
                               const PredictConfig& config) {
  if (config.predictions_path.empty())
    throw ConfigError("predict: no output path given");
  std::ofstream pred(config.predictions_path, std::ios::trunc);
  if (!pred) throw IoError("cannot write " + config.predictions_path);
  std::ofstream prob;
  if (!config.probabilities_path.empty()) {
    prob.open(config.probabilities_path, std::ios::trunc);
    if (!prob) throw IoError("cannot write " + config.probabilities_path);
  }

  const int classes = model.config().class_count;
  ConfusionMatrix confusion = ConfusionMatrix::Zero(classes, classes);
  std::map<std::string, Tally> by_location;
  Tally& tally = by_location[dataset.location];
  const Rng root(config.ensemble.seed);
  bool all_labeled = !dataset.samples.empty();

  char buf[32];
  std::uint64_t global_index = 0;
  for (const SensorSample& sample : dataset.samples) {
    const Matrix probs =
        ensemble_probabilities(model, sample, config.ensemble.size, root.fork(global_index));
    const std::vector<int> classes_hat = predict(probs);
    for (int t = 0; t < kSegmentsPerSample; ++t)
      pred << (t ? " " : "") << classes_hat[static_cast<std::size_t>(t)] + 1;
    pred << "\n";
    if (prob.is_open()) {
      for (Eigen::Index i = 0; i < probs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", probs.data()[i]);
        prob << (i ? " " : "") << buf;
      }
      prob << "\n";
    }
    if (sample.has_labels) {
      for (int t = 0; t < kSegmentsPerSample; ++t) {
        const int truth = sample.labels[static_cast<std::size_t>(t)];
        const int guess = classes_hat[static_cast<std::size_t>(t)];
        confusion(truth, guess) += 1;
        tally.segments += 1;
        if (truth == guess) tally.correct += 1;
      }
    } else {
      all_labeled = false;
    }
    ++global_index;
  }
  if (!pred) throw IoError("write failure: " + config.predictions_path);
  if (prob.is_open() && !prob) throw IoError("write failure: " + config.probabilities_path);

  PredictOutcome outcome;
  outcome.has_metrics = all_labeled;
  if (all_labeled) outcome.metrics = finalize(by_location, confusion, classes);
  return outcome;
}

}  // namespace harfuse
