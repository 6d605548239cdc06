#include "harfuse/trainer.hpp"

#include "harfuse/transforms.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace harfuse {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (lr0 <= 0.0) throw ConfigError("lr0 must be positive");
  if (decay_interval < 1) throw ConfigError("decay_interval must be positive");
  if (decay_factor <= 1.0) throw ConfigError("decay_factor must be > 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be positive");
  if (trace_interval < 1) throw ConfigError("trace_interval must be positive");
  if (eval_ensemble < 1) throw ConfigError("eval_ensemble must be positive");
}

double learning_rate(long step, const TrainConfig& config) {
  if (step < 0) throw InputError("learning_rate: negative step");
  const long decays = step / config.decay_interval;
  return config.lr0 / std::pow(config.decay_factor, static_cast<double>(decays));
}

namespace {

std::vector<int> label_vector(const SensorSample& sample) {
  return std::vector<int>(sample.labels.begin(), sample.labels.end());
}

[[noreturn]] void abort_non_finite(long step, double lr, long sample_index) {
  char msg[160];
  std::snprintf(msg, sizeof(msg),
                "non-finite loss at step %ld (lr %.6g, sample index %ld)", step, lr,
                sample_index);
  throw TrainError(msg);
}

}  // namespace

double train_step(Model& model, const std::vector<BatchItem>& batch, long step,
                  const TrainConfig& config, const Rng& root) {
  if (batch.empty()) throw InputError("train_step: empty batch");
  const double lr = learning_rate(step, config);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const bool late = model.members().size() > 1;

  model.zero_grads();
  double loss_sum = 0.0;
  for (std::size_t slot = 0; slot < batch.size(); ++slot) {
    const SensorSample& sample = *batch[slot].sample;
    if (!sample.has_labels) throw InputError("train_step: unlabeled sample in batch");
    const std::vector<int> labels = label_vector(sample);
    Rng mask_rng = root.fork(stream::kMask).fork(static_cast<std::uint64_t>(step))
                       .fork(static_cast<std::uint64_t>(slot));

    double sample_loss = 0.0;
    if (!late) {
      PipelineCache cache;
      Pipeline& net = model.members()[0];
      const Matrix probs = net.forward(sample, mask_rng, &cache);
      sample_loss = cross_entropy(probs, labels);
      if (std::isfinite(sample_loss))
        net.backward(cache, cross_entropy_softmax_backward(probs, labels) * inv_batch);
    } else {
      // Independent single-sensor models; the reported loss is their mean.
      for (Pipeline& member : model.members()) {
        PipelineCache cache;
        const Matrix probs = member.forward(sample, mask_rng, &cache);
        const double member_loss = cross_entropy(probs, labels);
        sample_loss += member_loss;
        if (std::isfinite(member_loss))
          member.backward(cache, cross_entropy_softmax_backward(probs, labels) * inv_batch);
      }
      sample_loss /= static_cast<double>(model.members().size());
    }
    if (!std::isfinite(sample_loss)) abort_non_finite(step, lr, batch[slot].dataset_index);
    loss_sum += sample_loss;
  }

  for (Pipeline& member : model.members()) {
    auto refs = member.store().adam_refs();
    adam_step(refs, member.store().optimizer, lr);
  }
  model.zero_grads();
  return loss_sum * inv_batch;
}

EvalMetrics evaluate(const Model& model, const std::vector<const Dataset*>& datasets,
                     int ensemble_size, std::uint64_t seed) {
  return evaluate_datasets(model, datasets, EnsembleConfig{ensemble_size, seed});
}

namespace {

void write_metrics_line(std::ofstream& log, long step, double lr, double loss,
                        const EvalMetrics& metrics) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%ld %.17g %.17g %.6f", step, lr, loss,
                metrics.overall_accuracy);
  log << buf;
  for (const auto& [location, acc] : metrics.per_location) {
    std::snprintf(buf, sizeof(buf), " %s=%.6f", location.c_str(), acc);
    log << buf;
  }
  log << "\n";
}

}  // namespace

TrainResult train_run(const TrainConfig& config, const ModelConfig& model_config,
                      const Dataset& train, const std::vector<const Dataset*>& validation,
                      const std::string& out_dir, const std::string& resume_checkpoint) {
  config.validate();
  if (train.samples.empty()) throw InputError("training dataset is empty");
  for (const SensorSample& s : train.samples)
    if (!s.has_labels) throw InputError("training requires labels for every sample");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  Model model;
  long start_step = 0;
  if (!resume_checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_checkpoint);
    if (ckpt.model.config().serialize() != model_config.serialize())
      throw ConfigError(resume_checkpoint + ": checkpoint model config differs from the run's");
    if (ckpt.seed != config.seed)
      throw ConfigError(resume_checkpoint + ": checkpoint seed differs from the run seed");
    model = std::move(ckpt.model);
    start_step = ckpt.step;
  } else {
    model = Model::build(model_config, config.seed);
  }

  TrainResult result;
  const std::string final_path = (fs::path(out_dir) / "model_final.ckpt").string();
  result.final_checkpoint = final_path;

  if (config.total_steps == 0) {
    save_checkpoint(model, config.seed, start_step, final_path);
    return result;
  }
  if (start_step >= config.total_steps)
    throw ConfigError("resume step " + std::to_string(start_step) +
                      " is at or past total_steps");

  std::ofstream trace((fs::path(out_dir) / "loss_trace.txt").string(), std::ios::app);
  std::ofstream log((fs::path(out_dir) / "metrics.log").string(), std::ios::app);
  if (!trace || !log) throw IoError("cannot open log files under " + out_dir);

  std::vector<const Dataset*> eval_sets;
  for (const Dataset* v : validation)
    if (v && !v->samples.empty()) eval_sets.push_back(v);
  if (eval_sets.empty()) eval_sets.push_back(&train);

  const Rng root(config.seed);
  const long n_samples = static_cast<long>(train.samples.size());
  double last_loss = 0.0;
  char buf[96];

  for (long s = start_step; s < config.total_steps; ++s) {
    Rng batch_rng = root.fork(stream::kBatch).fork(static_cast<std::uint64_t>(s));
    std::vector<SensorSample> staged;
    staged.reserve(static_cast<std::size_t>(config.batch_size));
    std::vector<BatchItem> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    for (int slot = 0; slot < config.batch_size; ++slot) {
      const long idx =
          static_cast<long>(batch_rng.next_u64() % static_cast<std::uint64_t>(n_samples));
      const SensorSample& sample = train.samples[static_cast<std::size_t>(idx)];
      if (config.augment) {
        Rng aug = root.fork(stream::kAugment).fork(static_cast<std::uint64_t>(s))
                      .fork(static_cast<std::uint64_t>(slot));
        staged.push_back(apply_random_rotation(sample, draw_rotation(aug)));
        batch.push_back({&staged.back(), idx});
      } else {
        batch.push_back({&sample, idx});
      }
    }

    last_loss = train_step(model, batch, s, config, root);
    const long done = s + 1;
    const double lr = learning_rate(s, config);

    if (done % config.trace_interval == 0) {
      std::snprintf(buf, sizeof(buf), "%ld %.17g %.17g\n", done, lr, last_loss);
      trace << buf;
    }
    if (done % config.eval_interval == 0 && done != config.total_steps) {
      const EvalMetrics metrics =
          evaluate(model, eval_sets, config.eval_ensemble, config.seed);
      write_metrics_line(log, done, lr, last_loss, metrics);
    }
    if (done % config.checkpoint_interval == 0 && done != config.total_steps)
      save_checkpoint(model, config.seed, done,
                      (fs::path(out_dir) / ("model_step" + std::to_string(done) + ".ckpt"))
                          .string());
  }

  const EvalMetrics metrics = evaluate(model, eval_sets, config.eval_ensemble, config.seed);
  write_metrics_line(log, config.total_steps,
                     learning_rate(config.total_steps - 1, config), last_loss, metrics);
  save_checkpoint(model, config.seed, config.total_steps, final_path);

  result.steps_run = config.total_steps - start_step;
  result.final_loss = last_loss;
  result.has_metrics = true;
  result.final_metrics = metrics;
  return result;
}

}  // namespace harfuse
