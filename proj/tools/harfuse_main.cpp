#include "harfuse/checks.hpp"
#include "harfuse/config.hpp"
#include "harfuse/dataset.hpp"
#include "harfuse/inference.hpp"
#include "harfuse/model.hpp"
#include "harfuse/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace harfuse;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Flags shadow config-file keys one-to-one; a set flag wins over the file.
struct KeyedFlags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    options.push_back({app->add_option(flag, values[key], help), key});
  }

  void apply(RunConfig& config) const {
    for (const auto& [option, key] : options)
      if (option->count() > 0) config.apply(key, values.at(key), option->get_name());
  }
};

RunConfig merged_config(const std::string& config_path, const KeyedFlags& flags) {
  RunConfig config;
  if (!config_path.empty()) config = parse_run_config(config_path);
  flags.apply(config);
  return config;
}

void print_seed(std::uint64_t seed) { std::cout << "seed: " << seed << "\n"; }

void print_metrics(const EvalMetrics& metrics) {
  std::cout << metrics.summary() << "\n";
  std::cout << "confusion (rows true, columns predicted):\n";
  for (Eigen::Index i = 0; i < metrics.confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < metrics.confusion.cols(); ++j)
      std::cout << (j ? " " : "") << metrics.confusion(i, j);
    std::cout << "\n";
  }
}

Dataset load_and_filter(const std::string& manifest_path) {
  Dataset dataset = load_dataset(read_manifest(manifest_path));
  const long dropped = filter_invalid(dataset);
  if (dropped > 0)
    std::cout << "dropped " << dropped << " invalid sample(s) from " << manifest_path << "\n";
  return dataset;
}

int run_synth(const SynthConfig& config, const std::string& out_dir) {
  print_seed(config.seed);
  const std::string manifest = synth_generate(config, out_dir);
  std::cout << "wrote " << config.samples << " samples, manifest " << manifest << "\n";
  return kExitOk;
}

int run_train(const RunConfig& config) {
  if (config.train_manifest.empty())
    throw ConfigError("train requires train_manifest (config key or --train-manifest)");
  if (config.out_dir.empty())
    throw ConfigError("train requires out_dir (config key or --out-dir)");
  print_seed(config.train.seed);

  const Dataset train = load_and_filter(config.train_manifest);
  std::vector<Dataset> val_storage;
  for (const std::string& path : config.val_manifests)
    val_storage.push_back(load_and_filter(path));
  std::vector<const Dataset*> validation;
  for (const Dataset& d : val_storage) validation.push_back(&d);

  const TrainResult result = train_run(config.train, config.model_config(), train,
                                       validation, config.out_dir,
                                       config.resume_checkpoint);
  std::cout << "trained " << result.steps_run << " step(s), final loss " << result.final_loss
            << "\n";
  if (result.has_metrics) std::cout << result.final_metrics.summary() << "\n";
  std::cout << "checkpoint: " << result.final_checkpoint << "\n";
  return kExitOk;
}

int run_eval(const RunConfig& config) {
  if (config.checkpoint.empty()) throw ConfigError("eval requires checkpoint");
  if (config.manifest.empty()) throw ConfigError("eval requires manifest");
  print_seed(config.train.seed);

  const Checkpoint ckpt = load_checkpoint(config.checkpoint);
  std::vector<Dataset> storage;
  {
    std::stringstream ss(config.manifest);
    std::string path;
    while (std::getline(ss, path, ',')) storage.push_back(load_and_filter(path));
  }
  std::vector<const Dataset*> sets;
  for (const Dataset& d : storage) sets.push_back(&d);

  const EvalMetrics metrics = evaluate(ckpt.model, sets, config.ensemble_n, config.train.seed);
  std::cout << "checkpoint step " << ckpt.step << ", ensemble " << config.ensemble_n << "\n";
  print_metrics(metrics);
  return kExitOk;
}

int run_predict(const RunConfig& config) {
  if (config.checkpoint.empty()) throw ConfigError("predict requires checkpoint");
  if (config.manifest.empty()) throw ConfigError("predict requires manifest");
  if (config.predictions_out.empty())
    throw ConfigError("predict requires predictions_out (--out)");
  print_seed(config.train.seed);

  const Checkpoint ckpt = load_checkpoint(config.checkpoint);
  const Dataset dataset = load_and_filter(config.manifest);

  PredictConfig predict_config;
  predict_config.ensemble = {config.ensemble_n, config.train.seed};
  predict_config.predictions_path = config.predictions_out;
  predict_config.probabilities_path = config.probabilities_out;
  const PredictOutcome outcome = predict_dataset(ckpt.model, dataset, predict_config);

  std::cout << "predictions: " << config.predictions_out << "\n";
  if (!config.probabilities_out.empty())
    std::cout << "probabilities: " << config.probabilities_out << "\n";
  if (outcome.has_metrics)
    print_metrics(outcome.metrics);
  else
    std::cout << "no labels in dataset; metrics omitted\n";
  return kExitOk;
}

int run_gradcheck(const RunConfig& config, bool have_config, bool inject_fault,
                  std::uint64_t seed) {
  print_seed(seed);
  ModelConfig model_config = have_config ? config.model_config() : ModelConfig::tiny();
  // Spot-check big models; probe every element of desk-size ones.
  const long coords = model_config.input_length > 50 ? 8 : 0;
  GradCheckReport report = run_layer_gradient_checks(seed);
  const GradCheckReport model_report =
      run_model_gradient_check(model_config, seed, coords, inject_fault);
  report.blocks.insert(report.blocks.end(), model_report.blocks.begin(),
                       model_report.blocks.end());
  std::cout << report.to_string();
  return report.passed() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal activity recognition: training, evaluation and prediction"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  SynthConfig synth_config;
  std::string synth_out;
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--samples", synth_config.samples, "number of samples")->required();
  synth->add_option("--classes", synth_config.classes, "class count (must be 8)");
  synth->add_option("--noise", synth_config.noise, "additive noise sigma");
  synth->add_option("--seed", synth_config.seed, "generator seed");
  synth->add_option("--split", synth_config.split, "split name (default train)");
  synth->add_option("--location", synth_config.location, "location tag (default Bag)");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_config_path;
  train->add_option("--config", train_config_path, "run-config file");
  KeyedFlags train_flags;
  train_flags.add(train, "--model-size", "model_size", "base, large or tiny");
  train_flags.add(train, "--fusion", "fusion", "embrace, early, intermediate or late");
  train_flags.add(train, "--input-mode", "input_mode", "raw, fft or raw_and_fft");
  train_flags.add(train, "--modalities", "modalities", "comma-separated sensor subset");
  train_flags.add(train, "--batch-size", "batch_size", "samples per step");
  train_flags.add(train, "--steps", "total_steps", "total training steps");
  train_flags.add(train, "--lr0", "lr0", "initial learning rate");
  train_flags.add(train, "--decay-interval", "decay_interval", "steps between lr halvings");
  train_flags.add(train, "--decay-factor", "decay_factor", "lr decay factor");
  train_flags.add(train, "--seed", "seed", "run seed");
  train_flags.add(train, "--eval-interval", "eval_interval", "steps between evaluations");
  train_flags.add(train, "--checkpoint-interval", "checkpoint_interval",
                  "steps between checkpoints");
  train_flags.add(train, "--trace-interval", "trace_interval", "steps between trace lines");
  train_flags.add(train, "--augment", "augment", "random rotation on/off");
  train_flags.add(train, "--eval-ensemble", "eval_ensemble", "ensemble size for evaluations");
  train_flags.add(train, "--train-manifest", "train_manifest", "training manifest");
  train_flags.add(train, "--val-manifest", "val_manifest", "validation manifest(s), csv");
  train_flags.add(train, "--out-dir", "out_dir", "run output directory");
  train_flags.add(train, "--resume", "resume_checkpoint", "checkpoint to resume from");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled data");
  std::string eval_config_path;
  eval_cmd->add_option("--config", eval_config_path, "run-config file");
  KeyedFlags eval_flags;
  eval_flags.add(eval_cmd, "--checkpoint", "checkpoint", "checkpoint file");
  eval_flags.add(eval_cmd, "--manifest", "manifest", "dataset manifest(s), csv");
  eval_flags.add(eval_cmd, "--ensemble-n", "ensemble_n", "self-ensemble size");
  eval_flags.add(eval_cmd, "--seed", "seed", "prediction seed");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "write predictions for a dataset");
  std::string predict_config_path;
  predict_cmd->add_option("--config", predict_config_path, "run-config file");
  KeyedFlags predict_flags;
  predict_flags.add(predict_cmd, "--checkpoint", "checkpoint", "checkpoint file");
  predict_flags.add(predict_cmd, "--manifest", "manifest", "dataset manifest");
  predict_flags.add(predict_cmd, "--ensemble-n", "ensemble_n", "self-ensemble size");
  predict_flags.add(predict_cmd, "--seed", "seed", "prediction seed");
  predict_flags.add(predict_cmd, "--out", "predictions_out", "prediction file path");
  predict_flags.add(predict_cmd, "--probs-out", "probabilities_out",
                    "optional probabilities file path");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  std::string gradcheck_config_path;
  std::uint64_t gradcheck_seed = 0;
  bool self_test_fault = false;
  gradcheck->add_option("--config", gradcheck_config_path, "run-config file (default tiny)");
  gradcheck->add_option("--seed", gradcheck_seed, "check seed");
  gradcheck->add_flag("--self-test-fault", self_test_fault,
                      "corrupt one gradient to verify the checker fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const bool is_synth = synth->parsed();
  try {
    if (is_synth) return run_synth(synth_config, synth_out);
    if (train->parsed()) return run_train(merged_config(train_config_path, train_flags));
    if (eval_cmd->parsed()) return run_eval(merged_config(eval_config_path, eval_flags));
    if (predict_cmd->parsed())
      return run_predict(merged_config(predict_config_path, predict_flags));
    if (gradcheck->parsed()) {
      RunConfig config;
      if (!gradcheck_config_path.empty()) config = parse_run_config(gradcheck_config_path);
      return run_gradcheck(config, !gradcheck_config_path.empty(), self_test_fault,
                           gradcheck_seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ManifestError& e) {
    std::cerr << "manifest error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    // synth treats an unwritable destination as a usage error
    return is_synth ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
