#include "harfuse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace harfuse {

FusionKind fusion_from_string(const std::string& name) {
  if (name == "embrace") return FusionKind::Embrace;
  if (name == "early") return FusionKind::Early;
  if (name == "intermediate") return FusionKind::Intermediate;
  if (name == "late") return FusionKind::Late;
  throw ConfigError("unknown fusion method '" + name +
                    "' (embrace, early, intermediate, late)");
}

std::string to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::Embrace: return "embrace";
    case FusionKind::Early: return "early";
    case FusionKind::Intermediate: return "intermediate";
    case FusionKind::Late: return "late";
  }
  throw InternalError("unhandled fusion kind");
}

Vector ModelConfig::effective_probs() const {
  if (selection_probs.size() == 0) return uniform_selection_probabilities(branch_count());
  if (selection_probs.size() != branch_count())
    throw ConfigError("selection probabilities must have one entry per modality");
  validate_selection_probabilities(selection_probs);
  return selection_probs;
}

namespace {

std::vector<int> all_modalities() {
  std::vector<int> m(kModalityCount);
  std::iota(m.begin(), m.end(), 0);
  return m;
}

std::string conv_specs_to_string(const std::vector<ConvSpec>& specs) {
  std::string out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(specs[i].filters) + ":" + std::to_string(specs[i].stride) + ":" +
           std::to_string(specs[i].kernel);
  }
  return out;
}

std::vector<ConvSpec> conv_specs_from_string(const std::string& text) {
  std::vector<ConvSpec> specs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConvSpec spec;
    if (std::sscanf(item.c_str(), "%d:%d:%d", &spec.filters, &spec.stride, &spec.kernel) != 3)
      throw ConfigError("bad conv spec '" + item + "', expected filters:stride:kernel");
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

std::string ModelConfig::serialize() const {
  std::ostringstream out;
  out << "fusion = " << to_string(fusion) << "\n";
  out << "input_mode = " << harfuse::to_string(input_mode) << "\n";
  out << "input_length = " << input_length << "\n";
  out << "class_count = " << class_count << "\n";
  out << "docking_width = " << docking_width << "\n";
  out << "modalities = ";
  for (std::size_t i = 0; i < modalities.size(); ++i)
    out << (i ? "," : "") << modality_name(modalities[i]);
  out << "\n";
  out << "preproc = " << conv_specs_to_string(preproc) << "\n";
  out << "postproc = " << conv_specs_to_string(postproc) << "\n";
  if (selection_probs.size() > 0) {
    out << "selection_probs = ";
    char buf[32];
    for (Eigen::Index k = 0; k < selection_probs.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", selection_probs[k]);
      out << (k ? "," : "") << buf;
    }
    out << "\n";
  }
  return out.str();
}

ModelConfig ModelConfig::deserialize(const std::string& text) {
  ModelConfig config;
  config.modalities.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad model config line: " + line);
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "fusion") {
      config.fusion = fusion_from_string(value);
    } else if (key == "input_mode") {
      config.input_mode = input_mode_from_string(value);
    } else if (key == "input_length") {
      config.input_length = std::stoi(value);
    } else if (key == "class_count") {
      config.class_count = std::stoi(value);
    } else if (key == "docking_width") {
      config.docking_width = std::stoi(value);
    } else if (key == "modalities") {
      std::stringstream ss(value);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const int k = modality_index(name);
        if (k < 0) throw ConfigError("unknown modality '" + name + "'");
        config.modalities.push_back(k);
      }
    } else if (key == "preproc") {
      config.preproc = conv_specs_from_string(value);
    } else if (key == "postproc") {
      config.postproc = conv_specs_from_string(value);
    } else if (key == "selection_probs") {
      std::vector<double> probs;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) probs.push_back(std::stod(item));
      config.selection_probs = Eigen::Map<const Vector>(probs.data(),
                                                        static_cast<Eigen::Index>(probs.size()));
    } else {
      throw ConfigError("unknown model config key '" + key + "'");
    }
  }
  return config;
}

ModelConfig ModelConfig::base() {
  ModelConfig config;
  config.modalities = all_modalities();
  config.docking_width = 256;
  config.preproc = {{32, 5, 5}, {64, 5, 5}, {128, 2, 5}, {256, 2, 5}};
  config.postproc = {{256, 1, 5}, {256, 1, 5}, {kClassCount, 1, 1}};
  return config;
}

ModelConfig ModelConfig::large() {
  ModelConfig config;
  config.modalities = all_modalities();
  config.docking_width = 512;
  config.preproc = {{32, 1, 5},  {32, 5, 5},  {64, 1, 5},  {64, 5, 5},  {128, 1, 5},
                    {128, 2, 5}, {256, 1, 5}, {256, 2, 5}, {512, 1, 5}, {512, 1, 5}};
  config.postproc = {{512, 1, 5}, {512, 1, 5}, {256, 1, 5}, {256, 1, 5}, {kClassCount, 1, 1}};
  return config;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig config;
  config.modalities = all_modalities();
  config.input_length = 20;
  config.docking_width = 4;
  config.preproc = {{4, 2, 5}, {4, 2, 5}};
  config.postproc = {{4, 1, 5}, {kClassCount, 1, 1}};
  return config;
}

int ParameterStore::add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw InternalError("duplicate parameter name " + name);
  Entry entry;
  entry.name = name;
  entry.value = Matrix::Zero(rows, cols);
  entry.grad = Matrix::Zero(rows, cols);
  entry.first_moment = Matrix::Zero(rows, cols);
  entry.second_moment = Matrix::Zero(rows, cols);
  entries_.push_back(std::move(entry));
  const int idx = static_cast<int>(entries_.size()) - 1;
  index_[name] = idx;
  return idx;
}

int ParameterStore::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

long ParameterStore::parameter_count() const {
  long count = 0;
  for (const Entry& e : entries_) count += static_cast<long>(e.value.size());
  return count;
}

void ParameterStore::zero_grads() {
  for (Entry& e : entries_) e.grad.setZero();
}

std::vector<AdamParamRef> ParameterStore::adam_refs() {
  std::vector<AdamParamRef> refs;
  refs.reserve(entries_.size());
  for (Entry& e : entries_)
    refs.push_back({e.name, &e.value, &e.grad, &e.first_moment, &e.second_moment});
  return refs;
}

namespace {

void he_uniform_init(Matrix& w, int fan_in, Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-scale, scale);
}

}  // namespace

Pipeline Pipeline::build(const ModelConfig& config, Rng init_rng) {
  if (config.fusion == FusionKind::Late)
    throw InternalError("a single pipeline cannot use late fusion");
  if (config.class_count < 2) throw ConfigError("class count must be at least 2");
  if (config.modalities.empty()) throw ConfigError("at least one modality is required");
  for (int k : config.modalities)
    if (k < 0 || k >= kModalityCount)
      throw ConfigError("modality index " + std::to_string(k) + " out of range");
  if (!std::is_sorted(config.modalities.begin(), config.modalities.end()) ||
      std::adjacent_find(config.modalities.begin(), config.modalities.end()) !=
          config.modalities.end())
    throw ConfigError("modalities must be listed once each, in fixed sensor order");
  if (config.preproc.empty() || config.postproc.empty())
    throw ConfigError("preproc and postproc layer lists must not be empty");

  // Shape propagation: the preproc chain must land on one position per
  // second; postproc keeps that length and ends in the kernel-1 classifier.
  int length = config.input_length;
  for (std::size_t i = 0; i < config.preproc.size(); ++i) {
    const ConvSpec& spec = config.preproc[i];
    if (spec.filters < 1 || spec.stride < 1 || spec.kernel < 1)
      throw ConfigError("preproc conv" + std::to_string(i + 1) + ": invalid spec");
    length = conv1d_output_length(length, spec.stride);
  }
  if (length != kSegmentsPerSample)
    throw ConfigError("preproc chain maps length " + std::to_string(config.input_length) +
                      " to " + std::to_string(length) + " positions, expected " +
                      std::to_string(kSegmentsPerSample));
  for (std::size_t i = 0; i < config.postproc.size(); ++i) {
    const ConvSpec& spec = config.postproc[i];
    if (spec.stride != 1)
      throw ConfigError("postproc conv" + std::to_string(i + 1) +
                        ": stride must be 1 to keep one position per second");
    if (spec.filters < 1 || spec.kernel < 1)
      throw ConfigError("postproc conv" + std::to_string(i + 1) + ": invalid spec");
  }
  const ConvSpec& classifier = config.postproc.back();
  if (classifier.kernel != 1 || classifier.filters != config.class_count)
    throw ConfigError("final postproc layer must be the kernel-1 classifier with " +
                      std::to_string(config.class_count) + " filters");

  Pipeline pipe;
  pipe.config_ = config;

  const bool fused_input = config.fusion == FusionKind::Early;
  const bool has_docking = config.fusion != FusionKind::Intermediate;
  const int factor = input_mode_channel_factor(config.input_mode);

  std::vector<std::pair<std::string, int>> branches;  // name, input channels
  if (fused_input) {
    int channels = 0;
    for (int k : config.modalities) channels += modality_channels(k) * factor;
    branches.emplace_back("fused", channels);
  } else {
    for (int k : config.modalities)
      branches.emplace_back(modality_name(k), modality_channels(k) * factor);
  }

  for (const auto& [name, input_channels] : branches) {
    std::vector<ConvUnit> stack;
    int channels = input_channels;
    for (std::size_t i = 0; i < config.preproc.size(); ++i) {
      const ConvSpec& spec = config.preproc[i];
      ConvUnit unit;
      unit.spec = spec;
      unit.in_channels = channels;
      const std::string base = "enc/" + name + "/conv" + std::to_string(i + 1);
      unit.weights = pipe.store_.add(base + "/weight", spec.kernel * channels, spec.filters);
      unit.bias = pipe.store_.add(base + "/bias", 1, spec.filters);
      he_uniform_init(pipe.store_.entry(unit.weights).value, spec.kernel * channels, init_rng);
      stack.push_back(unit);
      channels = spec.filters;
    }
    pipe.encoders_.push_back(std::move(stack));
    if (has_docking) {
      DenseUnit dock;
      dock.in_features = channels;
      dock.units = config.docking_width;
      const std::string base = "dock/" + name;
      dock.weights = pipe.store_.add(base + "/weight", channels, config.docking_width);
      dock.bias = pipe.store_.add(base + "/bias", 1, config.docking_width);
      he_uniform_init(pipe.store_.entry(dock.weights).value, channels, init_rng);
      pipe.docking_.push_back(dock);
    }
  }

  int post_channels = has_docking
                          ? config.docking_width
                          : config.preproc.back().filters * static_cast<int>(branches.size());
  for (std::size_t i = 0; i < config.postproc.size(); ++i) {
    const ConvSpec& spec = config.postproc[i];
    ConvUnit unit;
    unit.spec = spec;
    unit.in_channels = post_channels;
    const std::string base = "post/conv" + std::to_string(i + 1);
    unit.weights = pipe.store_.add(base + "/weight", spec.kernel * post_channels, spec.filters);
    unit.bias = pipe.store_.add(base + "/bias", 1, spec.filters);
    he_uniform_init(pipe.store_.entry(unit.weights).value, spec.kernel * post_channels,
                    init_rng);
    pipe.post_.push_back(unit);
    post_channels = spec.filters;
  }
  return pipe;
}

std::vector<Matrix> Pipeline::branch_inputs(const SensorSample& sample) const {
  const std::vector<Matrix> transformed = apply_input_mode(sample, config_.input_mode);
  std::vector<Matrix> selected;
  selected.reserve(config_.modalities.size());
  const int factor = input_mode_channel_factor(config_.input_mode);
  for (int k : config_.modalities) {
    const Matrix& block = transformed[static_cast<std::size_t>(k)];
    if (block.rows() != config_.input_length ||
        block.cols() != modality_channels(k) * factor)
      throw InputError("sample modality '" + modality_name(k) + "' has shape " +
                       std::to_string(block.rows()) + "x" + std::to_string(block.cols()) +
                       ", model expects " + std::to_string(config_.input_length) + "x" +
                       std::to_string(modality_channels(k) * factor));
    selected.push_back(block);
  }
  if (config_.fusion == FusionKind::Early) return {early_fuse(selected)};
  return selected;
}

Matrix Pipeline::forward(const SensorSample& sample, Rng& rng, PipelineCache* cache,
                         MaskMode mode) const {
  const std::vector<Matrix> inputs = branch_inputs(sample);
  if (cache) {
    cache->encoders.assign(inputs.size(), {});
    cache->docking.clear();
    cache->docked.clear();
    cache->mask.r.clear();
    cache->post.clear();
  }

  std::vector<Matrix> features;  // h per branch
  features.reserve(inputs.size());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    Matrix x = inputs[b];
    for (const ConvUnit& unit : encoders_[b]) {
      Matrix pre = conv1d_forward(x, store_.entry(unit.weights).value,
                                  store_.entry(unit.bias).value, unit.spec.kernel,
                                  unit.spec.stride);
      if (cache) cache->encoders[b].push_back({std::move(x), pre});
      x = relu(pre);
    }
    features.push_back(std::move(x));
  }

  Matrix fused;
  if (!docking_.empty()) {
    std::vector<Matrix> docked;
    docked.reserve(features.size());
    for (std::size_t b = 0; b < features.size(); ++b) {
      const DenseUnit& dock = docking_[b];
      Matrix pre = dense_forward(features[b], store_.entry(dock.weights).value,
                                 store_.entry(dock.bias).value);
      if (cache) cache->docking.push_back({features[b], pre});
      docked.push_back(relu(pre));
    }
    const Vector probs = config_.fusion == FusionKind::Early
                             ? Vector::Ones(1)
                             : config_.effective_probs();
    if (mode == MaskMode::Sample) {
      FusionMask mask = sample_masks(probs, static_cast<int>(docked[0].rows()),
                                     static_cast<int>(docked[0].cols()), rng);
      fused = embrace_forward(docked, mask);
      if (cache) cache->mask = std::move(mask);
    } else {
      fused = expected_fusion(docked, probs);
    }
    if (cache) cache->docked = std::move(docked);
  } else {
    fused = intermediate_fuse(features);
  }
  if (cache) cache->fused = fused;

  Matrix x = std::move(fused);
  for (std::size_t i = 0; i < post_.size(); ++i) {
    const ConvUnit& unit = post_[i];
    Matrix pre = conv1d_forward(x, store_.entry(unit.weights).value,
                                store_.entry(unit.bias).value, unit.spec.kernel,
                                unit.spec.stride);
    if (cache) cache->post.push_back({std::move(x), pre});
    x = i + 1 < post_.size() ? relu(pre) : std::move(pre);  // classifier stays linear
  }
  Matrix probs = softmax_rows(x);
  if (cache) cache->probs = probs;
  return probs;
}

void Pipeline::backward(const PipelineCache& cache, const Matrix& grad_logits) {
  if (cache.post.size() != post_.size() || cache.encoders.size() != encoders_.size())
    throw InternalError("backward: cache does not match this pipeline");

  Matrix g = grad_logits;
  for (std::size_t i = post_.size(); i-- > 0;) {
    const ConvUnit& unit = post_[i];
    if (i + 1 < post_.size()) g = relu_backward(g, cache.post[i].preact);
    Conv1dGrads grads = conv1d_backward(g, cache.post[i].input,
                                        store_.entry(unit.weights).value, unit.spec.kernel,
                                        unit.spec.stride);
    store_.entry(unit.weights).grad += grads.weights;
    store_.entry(unit.bias).grad += grads.bias;
    g = std::move(grads.input);
  }

  std::vector<Matrix> grad_features(encoders_.size());
  if (!docking_.empty()) {
    std::vector<Matrix> grad_docked;
    if (cache.mask.r.empty()) {
      // Expected-fusion debug mode: e = sum_k p_k d_k.
      const Vector probs = config_.fusion == FusionKind::Early
                               ? Vector::Ones(1)
                               : config_.effective_probs();
      grad_docked.reserve(docking_.size());
      for (std::size_t b = 0; b < docking_.size(); ++b)
        grad_docked.push_back(probs[static_cast<Eigen::Index>(b)] * g);
    } else {
      grad_docked = embrace_backward(g, cache.mask);
    }
    for (std::size_t b = 0; b < docking_.size(); ++b) {
      const DenseUnit& dock = docking_[b];
      const Matrix gated = relu_backward(grad_docked[b], cache.docking[b].preact);
      DenseGrads grads =
          dense_backward(gated, cache.docking[b].input, store_.entry(dock.weights).value);
      store_.entry(dock.weights).grad += grads.weights;
      store_.entry(dock.bias).grad += grads.bias;
      grad_features[b] = std::move(grads.input);
    }
  } else {
    // Undo the feature concatenation.
    const Eigen::Index width = cache.encoders.empty()
                                   ? 0
                                   : g.cols() / static_cast<Eigen::Index>(encoders_.size());
    for (std::size_t b = 0; b < encoders_.size(); ++b)
      grad_features[b] = g.middleCols(static_cast<Eigen::Index>(b) * width, width);
  }

  for (std::size_t b = 0; b < encoders_.size(); ++b) {
    Matrix gb = std::move(grad_features[b]);
    for (std::size_t i = encoders_[b].size(); i-- > 0;) {
      const ConvUnit& unit = encoders_[b][i];
      gb = relu_backward(gb, cache.encoders[b][i].preact);
      Conv1dGrads grads = conv1d_backward(gb, cache.encoders[b][i].input,
                                          store_.entry(unit.weights).value, unit.spec.kernel,
                                          unit.spec.stride);
      store_.entry(unit.weights).grad += grads.weights;
      store_.entry(unit.bias).grad += grads.bias;
      gb = std::move(grads.input);
    }
  }
}

double Pipeline::loss(const SensorSample& sample, const std::vector<int>& labels, Rng rng,
                      MaskMode mode) const {
  return cross_entropy(forward(sample, rng, nullptr, mode), labels);
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
  Model model;
  model.config_ = config;
  if (config.modalities.empty()) model.config_.modalities = all_modalities();
  const Rng root(seed);
  if (config.fusion == FusionKind::Late) {
    for (std::size_t k = 0; k < model.config_.modalities.size(); ++k) {
      ModelConfig member = model.config_;
      member.fusion = FusionKind::Embrace;
      member.modalities = {model.config_.modalities[k]};
      member.selection_probs = Vector();
      model.members_.push_back(
          Pipeline::build(member, root.fork(static_cast<std::uint64_t>(k))));
    }
  } else {
    model.members_.push_back(Pipeline::build(model.config_, root.fork(0)));
  }
  return model;
}

Matrix Model::forward(const SensorSample& sample, Rng& rng, ModelCache* cache,
                      MaskMode mode) const {
  if (cache) {
    cache->members.assign(members_.size(), {});
    cache->member_probs.clear();
  }
  std::vector<Matrix> member_probs;
  member_probs.reserve(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k)
    member_probs.push_back(
        members_[k].forward(sample, rng, cache ? &cache->members[k] : nullptr, mode));
  Matrix probs = members_.size() == 1 ? member_probs[0] : late_fuse(member_probs);
  if (cache) {
    cache->member_probs = std::move(member_probs);
    cache->probs = probs;
  }
  return probs;
}

void Model::backward(const ModelCache& cache, const std::vector<int>& labels) {
  if (cache.members.size() != members_.size())
    throw InternalError("backward: cache does not match this model");
  if (members_.size() == 1) {
    members_[0].backward(cache.members[0],
                         cross_entropy_softmax_backward(cache.probs, labels));
    return;
  }
  // Joint gradient through the averaged probabilities.
  const Matrix& mean_probs = cache.probs;
  if (static_cast<Eigen::Index>(labels.size()) != mean_probs.rows())
    throw InputError("cross_entropy: one label required per row");
  Matrix grad_mean = Matrix::Zero(mean_probs.rows(), mean_probs.cols());
  const double rows = static_cast<double>(mean_probs.rows());
  for (Eigen::Index t = 0; t < mean_probs.rows(); ++t) {
    const int y = labels[static_cast<std::size_t>(t)];
    if (y < 0 || y >= mean_probs.cols())
      throw InputError("cross_entropy: label out of range");
    grad_mean(t, y) = -1.0 / (rows * mean_probs(t, y));
  }
  const Matrix grad_member = grad_mean / static_cast<double>(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k)
    members_[k].backward(cache.members[k],
                         softmax_backward(cache.member_probs[k], grad_member));
}

double Model::loss(const SensorSample& sample, const std::vector<int>& labels, Rng rng,
                   MaskMode mode) const {
  return cross_entropy(forward(sample, rng, nullptr, mode), labels);
}

long Model::parameter_count() const {
  long count = 0;
  for (const Pipeline& p : members_) count += p.store().parameter_count();
  return count;
}

void Model::zero_grads() {
  for (Pipeline& p : members_) p.store().zero_grads();
}

std::vector<int> predict(const Matrix& probs) {
  std::vector<int> classes(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    int best = 0;
    for (Eigen::Index j = 1; j < probs.cols(); ++j)
      if (probs(t, j) > probs(t, best)) best = static_cast<int>(j);
    classes[static_cast<std::size_t>(t)] = best;
  }
  return classes;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
  Matrix out(probs.rows(), probs.cols());
  for (Eigen::Index t = 0; t < probs.rows(); ++t) {
    const double dot = probs.row(t).dot(grad_probs.row(t));
    out.row(t) = (probs.row(t).array() * (grad_probs.row(t).array() - dot)).matrix();
  }
  return out;
}

std::vector<ShapeRow> shape_chain(const ModelConfig& config) {
  std::vector<ShapeRow> rows;
  int length = config.input_length;
  for (std::size_t i = 0; i < config.preproc.size(); ++i) {
    length = conv1d_output_length(length, config.preproc[i].stride);
    rows.push_back({"preproc conv" + std::to_string(i + 1), length, config.preproc[i].filters});
  }
  const int fusion_width = config.fusion == FusionKind::Intermediate
                               ? config.preproc.back().filters * config.branch_count()
                               : config.docking_width;
  rows.push_back({"fusion", length, fusion_width});
  for (std::size_t i = 0; i < config.postproc.size(); ++i)
    rows.push_back(
        {"postproc conv" + std::to_string(i + 1), length, config.postproc[i].filters});
  return rows;
}

// ---------------------------------------------------------------------------
// Checkpoint format (all integers and floats little-endian).

namespace {

constexpr char kMagic[8] = {'H', 'A', 'R', 'F', 'U', 'S', 'E', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

void put_matrix(std::string& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

struct Reader {
  const std::string& buf;
  std::size_t at = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(std::size_t n) const {
    if (at + n > buf.size()) throw FormatError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    at += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = buf.substr(at, n);
    at += n;
    return s;
  }
  void matrix(Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  }
};

}  // namespace

void save_checkpoint(const Model& model, std::uint64_t seed, long step,
                     const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, 1);
  put_u64(out, seed);
  put_u64(out, static_cast<std::uint64_t>(step));
  const std::string config_text = model.config().serialize();
  put_u32(out, static_cast<std::uint32_t>(config_text.size()));
  out += config_text;
  put_u32(out, static_cast<std::uint32_t>(model.members().size()));
  for (const Pipeline& member : model.members()) {
    const ParameterStore& store = member.store();
    put_u64(out, static_cast<std::uint64_t>(store.optimizer.step_count));
    put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (int i = 0; i < store.size(); ++i) {
      const ParameterStore::Entry& e = store.entry(i);
      put_u32(out, static_cast<std::uint32_t>(e.name.size()));
      out += e.name;
      put_u32(out, static_cast<std::uint32_t>(e.value.rows()));
      put_u32(out, static_cast<std::uint32_t>(e.value.cols()));
      put_matrix(out, e.value);
      put_matrix(out, e.first_moment);
      put_matrix(out, e.second_moment);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << file.rdbuf();
  const std::string buf = ss.str();

  Reader reader(buf);
  if (reader.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw FormatError(path + ": not a checkpoint file");
  const std::uint32_t version = reader.u32();
  if (version != 1)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.seed = reader.u64();
  ckpt.step = static_cast<long>(reader.u64());
  const std::uint32_t config_len = reader.u32();
  const ModelConfig config = ModelConfig::deserialize(reader.str(config_len));
  ckpt.model = Model::build(config, ckpt.seed);

  const std::uint32_t member_count = reader.u32();
  if (member_count != ckpt.model.members().size())
    throw ConfigError(path + ": checkpoint and config disagree on member count");
  for (Pipeline& member : ckpt.model.members()) {
    ParameterStore& store = member.store();
    store.optimizer.step_count = static_cast<long>(reader.u64());
    const std::uint32_t entries = reader.u32();
    if (static_cast<int>(entries) != store.size())
      throw ConfigError(path + ": checkpoint and config disagree on parameter count");
    for (std::uint32_t i = 0; i < entries; ++i) {
      const std::uint32_t name_len = reader.u32();
      const std::string name = reader.str(name_len);
      const int idx = store.find(name);
      if (idx < 0) throw ConfigError(path + ": unknown parameter '" + name + "'");
      ParameterStore::Entry& e = store.entry(idx);
      const std::uint32_t rows = reader.u32();
      const std::uint32_t cols = reader.u32();
      if (static_cast<Eigen::Index>(rows) != e.value.rows() ||
          static_cast<Eigen::Index>(cols) != e.value.cols())
        throw ConfigError(path + ": parameter '" + name + "' has unexpected shape");
      reader.matrix(e.value);
      reader.matrix(e.first_moment);
      reader.matrix(e.second_moment);
    }
  }
  if (reader.at != buf.size()) throw FormatError(path + ": trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace harfuse
