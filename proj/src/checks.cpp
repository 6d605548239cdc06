#include "harfuse/checks.hpp"

#include "harfuse/fusion.hpp"
#include "harfuse/nn.hpp"

#include <string>
#include <vector>

namespace harfuse {

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

void append(GradCheckReport& into, const GradCheckReport& part) {
  into.blocks.insert(into.blocks.end(), part.blocks.begin(), part.blocks.end());
}

// Quadratic probe loss 0.5*||out||^2; its upstream gradient is out itself.
GradCheckReport check_conv(const std::string& name, int stride, Rng& rng) {
  const int length = 20, channels = 3, filters = 4, kernel = 5;
  Rng init = rng.fork(1);
  Conv1dLayer layer = make_conv1d(channels, filters, kernel, stride, init);
  // Biases start at zero; give them a nonzero point to probe around.
  layer.bias = random_matrix(1, filters, init, 0.5);
  Matrix input = random_matrix(length, channels, init);

  const auto loss = [&]() { return 0.5 * conv1d_forward(input, layer).squaredNorm(); };
  const Matrix out = conv1d_forward(input, layer);
  const Conv1dGrads grads = conv1d_backward(out, input, layer);

  return gradient_check(loss, {{name + "/weight", &layer.weights, &grads.weights},
                               {name + "/bias", &layer.bias, &grads.bias},
                               {name + "/input", &input, &grads.input}});
}

GradCheckReport check_dense(Rng& rng) {
  Rng init = rng.fork(2);
  DenseLayer layer = make_dense(6, 5, init);
  layer.bias = random_matrix(1, 5, init, 0.5);
  Matrix input = random_matrix(4, 6, init);

  const auto loss = [&]() { return 0.5 * dense_forward(input, layer).squaredNorm(); };
  const Matrix out = dense_forward(input, layer);
  const DenseGrads grads = dense_backward(out, input, layer);

  return gradient_check(loss, {{"dense/weight", &layer.weights, &grads.weights},
                               {"dense/bias", &layer.bias, &grads.bias},
                               {"dense/input", &input, &grads.input}});
}

GradCheckReport check_chain(Rng& rng) {
  // conv -> relu -> dense -> softmax -> cross-entropy, the in-network layer
  // sequence in miniature.
  Rng init = rng.fork(3);
  Conv1dLayer conv = make_conv1d(2, 3, 5, 4, init);
  DenseLayer dense = make_dense(3, 4, init);
  Matrix input = random_matrix(20, 2, init);
  const std::vector<int> labels{0, 2, 1, 3, 0};

  const auto loss = [&]() {
    const Matrix h = relu(conv1d_forward(input, conv));
    const Matrix logits = dense_forward(h, dense);
    return cross_entropy(softmax_rows(logits), labels);
  };

  const Matrix pre = conv1d_forward(input, conv);
  const Matrix h = relu(pre);
  const Matrix logits = dense_forward(h, dense);
  const Matrix probs = softmax_rows(logits);
  const Matrix grad_logits = cross_entropy_softmax_backward(probs, labels);
  const DenseGrads dense_grads = dense_backward(grad_logits, h, dense);
  const Matrix grad_pre = relu_backward(dense_grads.input, pre);
  const Conv1dGrads conv_grads = conv1d_backward(grad_pre, input, conv);

  return gradient_check(loss, {{"chain/conv/weight", &conv.weights, &conv_grads.weights},
                               {"chain/conv/bias", &conv.bias, &conv_grads.bias},
                               {"chain/dense/weight", &dense.weights, &dense_grads.weights},
                               {"chain/dense/bias", &dense.bias, &dense_grads.bias},
                               {"chain/input", &input, &conv_grads.input}});
}

GradCheckReport check_softmax_ce(Rng& rng) {
  Rng init = rng.fork(4);
  Matrix logits = random_matrix(5, kClassCount, init, 2.0);
  const std::vector<int> labels{3, 1, 7, 0, 4};

  const auto loss = [&]() { return cross_entropy(softmax_rows(logits), labels); };
  const Matrix analytic = cross_entropy_softmax_backward(softmax_rows(logits), labels);
  return gradient_check(loss, {{"softmax_ce/logits", &logits, &analytic}});
}

GradCheckReport check_fusion(Rng& rng) {
  Rng init = rng.fork(5);
  const int branches = 3, rows = 5, cols = 6;
  std::vector<Matrix> docked;
  for (int k = 0; k < branches; ++k) docked.push_back(random_matrix(rows, cols, init));
  Rng mask_rng = rng.fork(6);
  const FusionMask mask =
      sample_masks(uniform_selection_probabilities(branches), rows, cols, mask_rng);

  const auto loss = [&]() { return 0.5 * embrace_forward(docked, mask).squaredNorm(); };
  const Matrix fused = embrace_forward(docked, mask);
  const std::vector<Matrix> grads = embrace_backward(fused, mask);

  std::vector<GradCheckBlock> blocks;
  for (int k = 0; k < branches; ++k)
    blocks.push_back({"fusion/docked" + std::to_string(k), &docked[static_cast<std::size_t>(k)],
                      &grads[static_cast<std::size_t>(k)]});
  return gradient_check(loss, blocks);
}

SensorSample random_sample(const ModelConfig& config, Rng& rng) {
  SensorSample sample;
  for (int k = 0; k < kModalityCount; ++k)
    sample.modalities[static_cast<std::size_t>(k)] =
        random_matrix(config.input_length, modality_channels(k), rng);
  for (int t = 0; t < kSegmentsPerSample; ++t)
    sample.labels[static_cast<std::size_t>(t)] =
        static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(config.class_count));
  sample.has_labels = true;
  return sample;
}

GradCheckReport model_check(const ModelConfig& config, std::uint64_t seed,
                            long coords_per_block, bool inject_fault) {
  Rng rng(seed);
  Model model = Model::build(config, seed);
  Rng data_rng = rng.fork(7);
  const SensorSample sample = random_sample(config, data_rng);
  const std::vector<int> labels(sample.labels.begin(), sample.labels.end());
  const Rng frozen = rng.fork(8);  // every loss call replays the same masks

  const auto loss = [&]() { return model.loss(sample, labels, frozen); };

  model.zero_grads();
  ModelCache cache;
  Rng forward_rng = frozen;
  model.forward(sample, forward_rng, &cache);
  model.backward(cache, labels);

  if (inject_fault) {
    // Negative control: a corrupted analytic gradient must trip the check.
    model.members()[0].store().entry(0).grad(0, 0) += 1.0;
  }

  std::vector<GradCheckBlock> blocks;
  const bool multi = model.members().size() > 1;
  for (std::size_t m = 0; m < model.members().size(); ++m) {
    ParameterStore& store = model.members()[m].store();
    for (int i = 0; i < store.size(); ++i) {
      ParameterStore::Entry& entry = store.entry(i);
      const std::string prefix = multi ? "member" + std::to_string(m) + "/" : "";
      blocks.push_back({prefix + entry.name, &entry.value, &entry.grad});
    }
  }
  GradCheckOptions options;
  options.coords_per_block = coords_per_block;
  options.coord_seed = seed;
  return gradient_check(loss, blocks, options);
}

}  // namespace

GradCheckReport run_layer_gradient_checks(std::uint64_t seed) {
  Rng rng(seed);
  GradCheckReport report;
  report.tolerance = 1e-4;
  append(report, check_conv("conv1d_s1", 1, rng));
  append(report, check_conv("conv1d_s2", 2, rng));
  append(report, check_conv("conv1d_s5", 5, rng));
  append(report, check_dense(rng));
  append(report, check_chain(rng));
  append(report, check_softmax_ce(rng));
  append(report, check_fusion(rng));
  return report;
}

GradCheckReport run_model_gradient_check(const ModelConfig& config, std::uint64_t seed,
                                         long coords_per_block, bool inject_fault) {
  return model_check(config, seed, coords_per_block, inject_fault);
}

GradCheckReport run_gradcheck_suite(const ModelConfig& config, std::uint64_t seed,
                                    bool inject_fault) {
  GradCheckReport report = run_layer_gradient_checks(seed);
  append(report, model_check(config, seed, 0, inject_fault));
  return report;
}

}  // namespace harfuse
