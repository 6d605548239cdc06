#include "harfuse/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace harfuse {

namespace {

long parse_long(const std::string& value, const std::string& context) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& value, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(context + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& context) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError(context + ": expected on/off, got '" + value + "'");
}

std::vector<std::string> split_csv(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
  }
  return items;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value,
                      const std::string& context) {
  if (key == "model_size") {
    if (value != "base" && value != "large" && value != "tiny")
      throw ConfigError(context + ": model_size must be base, large or tiny");
    model_size = value;
  } else if (key == "fusion") {
    fusion_from_string(value);  // validates
    fusion = value;
  } else if (key == "input_mode") {
    input_mode_from_string(value);  // validates
    input_mode = value;
  } else if (key == "modalities") {
    modalities = split_csv(value);
    for (const std::string& name : modalities)
      if (modality_index(name) < 0)
        throw ConfigError(context + ": unknown modality '" + name + "'");
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(parse_long(value, context));
  } else if (key == "total_steps") {
    train.total_steps = parse_long(value, context);
  } else if (key == "lr0") {
    train.lr0 = parse_double(value, context);
  } else if (key == "decay_interval") {
    train.decay_interval = parse_long(value, context);
  } else if (key == "decay_factor") {
    train.decay_factor = parse_double(value, context);
  } else if (key == "seed") {
    train.seed = static_cast<std::uint64_t>(parse_long(value, context));
  } else if (key == "eval_interval") {
    train.eval_interval = parse_long(value, context);
  } else if (key == "checkpoint_interval") {
    train.checkpoint_interval = parse_long(value, context);
  } else if (key == "trace_interval") {
    train.trace_interval = parse_long(value, context);
  } else if (key == "augment") {
    train.augment = parse_bool(value, context);
  } else if (key == "eval_ensemble") {
    train.eval_ensemble = static_cast<int>(parse_long(value, context));
  } else if (key == "train_manifest") {
    train_manifest = value;
  } else if (key == "val_manifest") {
    val_manifests = split_csv(value);
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "resume_checkpoint") {
    resume_checkpoint = value;
  } else if (key == "checkpoint") {
    checkpoint = value;
  } else if (key == "manifest") {
    manifest = value;
  } else if (key == "ensemble_n") {
    ensemble_n = static_cast<int>(parse_long(value, context));
  } else if (key == "predictions_out") {
    predictions_out = value;
  } else if (key == "probabilities_out") {
    probabilities_out = value;
  } else {
    throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

ModelConfig RunConfig::model_config() const {
  ModelConfig config;
  if (model_size == "base")
    config = ModelConfig::base();
  else if (model_size == "large")
    config = ModelConfig::large();
  else
    config = ModelConfig::tiny();
  config.fusion = fusion_from_string(fusion);
  config.input_mode = input_mode_from_string(input_mode);
  if (!modalities.empty()) {
    std::vector<int> indices;
    for (const std::string& name : modalities) indices.push_back(modality_index(name));
    std::sort(indices.begin(), indices.end());
    config.modalities = indices;
  }
  return config;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  RunConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    auto strip = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t");
      const auto end = s.find_last_not_of(" \t\r");
      return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
    };
    config.apply(strip(line.substr(0, eq)), strip(line.substr(eq + 1)),
                 path + ":" + std::to_string(line_no));
  }
  return config;
}

}  // namespace harfuse
