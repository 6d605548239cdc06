#pragma once

#include "harfuse/dataset.hpp"
#include "harfuse/inference.hpp"
#include "harfuse/model.hpp"
#include "harfuse/rng.hpp"

#include <string>
#include <vector>

namespace harfuse {

struct TrainConfig {
  int batch_size = 8;
  long total_steps = 500000;
  double lr0 = 1e-4;
  long decay_interval = 100000;
  double decay_factor = 2.0;
  std::uint64_t seed = 0;
  long eval_interval = 100000;
  long checkpoint_interval = 100000;
  long trace_interval = 1;  // loss-trace line every N steps
  bool augment = false;     // random rotation, training inputs only
  int eval_ensemble = 1;

  void validate() const;
};

// Named substreams of the run seed. Every random decision at step s comes
// from root.fork(stream).fork(s)..., so it is independent of batch
// composition and of how much randomness any other consumer drew.
namespace stream {
inline constexpr std::uint64_t kBatch = 1;
inline constexpr std::uint64_t kMask = 2;
inline constexpr std::uint64_t kAugment = 3;
}  // namespace stream

/// lr0 / decay_factor^floor(step / decay_interval).
double learning_rate(long step, const TrainConfig& config);

struct BatchItem {
  const SensorSample* sample = nullptr;
  long dataset_index = 0;  // for diagnostics only
};

/// One forward/backward/Adam cycle over the batch. Returns the mean
/// cross-entropy over batch and time positions; gradients are zeroed
/// afterward. Late fusion trains each single-sensor member independently on
/// its own loss and reports the member mean.
double train_step(Model& model, const std::vector<BatchItem>& batch, long step,
                  const TrainConfig& config, const Rng& root);

/// trainer-side view of evaluation; shares the prediction code path.
EvalMetrics evaluate(const Model& model, const std::vector<const Dataset*>& datasets,
                     int ensemble_size, std::uint64_t seed);

struct TrainResult {
  std::string final_checkpoint;
  long steps_run = 0;
  double final_loss = 0.0;
  bool has_metrics = false;
  EvalMetrics final_metrics;
};

/// Full training run: random batches with replacement, optional on-the-fly
/// rotation augmentation, periodic evaluation and checkpointing, loss trace
/// and metrics log under out_dir. Evaluation uses the validation sets, or
/// the training set when none are given. Resuming from a checkpoint
/// continues the step-indexed random streams, so the continuation is
/// bit-identical to an uninterrupted run.
TrainResult train_run(const TrainConfig& config, const ModelConfig& model_config,
                      const Dataset& train, const std::vector<const Dataset*>& validation,
                      const std::string& out_dir, const std::string& resume_checkpoint = "");

}  // namespace harfuse
