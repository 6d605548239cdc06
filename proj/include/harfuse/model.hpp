#pragma once

#include "harfuse/adam.hpp"
#include "harfuse/dataset.hpp"
#include "harfuse/fusion.hpp"
#include "harfuse/nn.hpp"
#include "harfuse/rng.hpp"
#include "harfuse/transforms.hpp"
#include "harfuse/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace harfuse {

enum class FusionKind { Embrace, Early, Intermediate, Late };

FusionKind fusion_from_string(const std::string& name);
std::string to_string(FusionKind kind);

struct ConvSpec {
  int filters = 0;
  int stride = 1;
  int kernel = 5;
};

/// Architecture description. preproc is the shared per-branch encoder stack;
/// postproc includes the final kernel-1 classifier as its last entry.
struct ModelConfig {
  FusionKind fusion = FusionKind::Embrace;
  InputMode input_mode = InputMode::Raw;
  int input_length = kWindowLength;
  int class_count = kClassCount;
  int docking_width = 256;
  std::vector<int> modalities;  // sensor indices consumed, in fixed order
  std::vector<ConvSpec> preproc;
  std::vector<ConvSpec> postproc;
  Vector selection_probs;  // size 0 means uniform

  int branch_count() const { return static_cast<int>(modalities.size()); }
  Vector effective_probs() const;

  std::string serialize() const;
  static ModelConfig deserialize(const std::string& text);

  static ModelConfig base();
  static ModelConfig large();
  /// Desk-size variant for gradient checking: length-20 windows, width-4
  /// layers, same topology.
  static ModelConfig tiny();
};

class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix first_moment;
    Matrix second_moment;
  };

  int add(const std::string& name, int rows, int cols);
  int find(const std::string& name) const;  // -1 when absent
  Entry& entry(int idx) { return entries_[static_cast<std::size_t>(idx)]; }
  const Entry& entry(int idx) const { return entries_[static_cast<std::size_t>(idx)]; }
  int size() const { return static_cast<int>(entries_.size()); }
  long parameter_count() const;
  void zero_grads();
  std::vector<AdamParamRef> adam_refs();

  OptimizerState optimizer;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

enum class MaskMode {
  Sample,    ///< draw fresh fusion masks from the rng (training and inference)
  Expected,  ///< debug only: replace fusion by its expectation sum_k p_k d_k
};

struct LayerCache {
  Matrix input;
  Matrix preact;
};

struct PipelineCache {
  std::vector<std::vector<LayerCache>> encoders;
  std::vector<LayerCache> docking;
  std::vector<Matrix> docked;
  FusionMask mask;
  Matrix fused;
  std::vector<LayerCache> post;
  Matrix probs;
};

/// One network with a single ParameterStore: the embrace model, or the early
/// or intermediate fusion variant. Late fusion composes several of these.
class Pipeline {
 public:
  static Pipeline build(const ModelConfig& config, Rng init_rng);

  /// Returns 5 x class_count probabilities; fills `cache` when given. In
  /// MaskMode::Sample one mask draw is consumed from `rng` (embrace/early
  /// only); Expected mode leaves the rng untouched.
  Matrix forward(const SensorSample& sample, Rng& rng, PipelineCache* cache = nullptr,
                 MaskMode mode = MaskMode::Sample) const;

  /// Accumulates gradients into the store. Masks are constants.
  void backward(const PipelineCache& cache, const Matrix& grad_logits);

  double loss(const SensorSample& sample, const std::vector<int>& labels, Rng rng,
              MaskMode mode = MaskMode::Sample) const;

  const ModelConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }

 private:
  struct ConvUnit {
    ConvSpec spec;
    int in_channels = 0;
    int weights = -1;
    int bias = -1;
  };
  struct DenseUnit {
    int in_features = 0;
    int units = 0;
    int weights = -1;
    int bias = -1;
  };

  std::vector<Matrix> branch_inputs(const SensorSample& sample) const;

  ModelConfig config_;
  std::vector<std::vector<ConvUnit>> encoders_;  // one stack per branch
  std::vector<DenseUnit> docking_;               // embrace/early only
  std::vector<ConvUnit> post_;
  ParameterStore store_;

  friend class Model;
};

struct ModelCache {
  std::vector<PipelineCache> members;
  std::vector<Matrix> member_probs;
  Matrix probs;
};

/// The trained entity: one pipeline, or one per sensor for late fusion.
class Model {
 public:
  static Model build(const ModelConfig& config, std::uint64_t seed);

  /// Combined class probabilities (late fusion averages member outputs).
  Matrix forward(const SensorSample& sample, Rng& rng, ModelCache* cache = nullptr,
                 MaskMode mode = MaskMode::Sample) const;

  /// Joint backward through the combined head; for late fusion the gradient
  /// flows through the averaged probabilities.
  void backward(const ModelCache& cache, const std::vector<int>& labels);

  double loss(const SensorSample& sample, const std::vector<int>& labels, Rng rng,
              MaskMode mode = MaskMode::Sample) const;

  const ModelConfig& config() const { return config_; }
  std::vector<Pipeline>& members() { return members_; }
  const std::vector<Pipeline>& members() const { return members_; }
  long parameter_count() const;
  void zero_grads();

 private:
  ModelConfig config_;
  std::vector<Pipeline> members_;
};

/// Per-row argmax; ties break toward the lowest class index.
std::vector<int> predict(const Matrix& probs);

struct ShapeRow {
  std::string layer;
  int length = 0;
  int width = 0;
};

/// Output size after every stage: each preproc conv (per branch), the fusion
/// stage, and each postproc conv. Mirrors the model-configuration tables.
std::vector<ShapeRow> shape_chain(const ModelConfig& config);

/// VJP of row-wise softmax: grad_logits from (probs, grad_probs).
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

// Checkpointing. Single binary file: magic, version, seed, step count,
// config echo, then per member a name/shape directory with parameter values
// and Adam moments as little-endian 64-bit floats. Round trips are bit-exact.

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  long step = 0;
};

void save_checkpoint(const Model& model, std::uint64_t seed, long step,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace harfuse
