#include "harfuse/nn.hpp"

#include <cmath>
#include <string>

namespace harfuse {

namespace {

// He-style uniform init: U[-s, s] with s = sqrt(2 / fan_in). Biases start at
// zero.
Matrix init_weights(int rows, int cols, int fan_in, Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-scale, scale);
  return w;
}

// Patch matrix for the same-padded convolution: row o holds the flattened
// input window feeding output position o, zeros where the window hangs past
// the input.
Matrix gather_patches(const Matrix& input, int kernel_size, int stride) {
  const int length = static_cast<int>(input.rows());
  const int channels = static_cast<int>(input.cols());
  const int out_length = conv1d_output_length(length, stride);
  const int pad_left = conv1d_pad_left(kernel_size);
  Matrix patches = Matrix::Zero(out_length, kernel_size * channels);
  for (int o = 0; o < out_length; ++o) {
    const int start = o * stride - pad_left;
    for (int u = 0; u < kernel_size; ++u) {
      const int i = start + u;
      if (i >= 0 && i < length) patches.block(o, u * channels, 1, channels) = input.row(i);
    }
  }
  return patches;
}

}  // namespace

int conv1d_output_length(int input_length, int stride) {
  return (input_length + stride - 1) / stride;
}

Conv1dLayer make_conv1d(int in_channels, int filters, int kernel_size, int stride, Rng& rng) {
  if (in_channels < 1 || filters < 1 || kernel_size < 1 || stride < 1)
    throw ConfigError("conv1d: channel, filter, kernel and stride counts must be positive");
  Conv1dLayer layer;
  layer.in_channels = in_channels;
  layer.filters = filters;
  layer.kernel_size = kernel_size;
  layer.stride = stride;
  layer.weights = init_weights(kernel_size * in_channels, filters, kernel_size * in_channels, rng);
  layer.bias = Matrix::Zero(1, filters);
  return layer;
}

DenseLayer make_dense(int in_features, int units, Rng& rng) {
  if (in_features < 1 || units < 1)
    throw ConfigError("dense: feature and unit counts must be positive");
  DenseLayer layer;
  layer.in_features = in_features;
  layer.units = units;
  layer.weights = init_weights(in_features, units, in_features, rng);
  layer.bias = Matrix::Zero(1, units);
  return layer;
}

Matrix conv1d_forward(const Matrix& input, const Matrix& weights, const Matrix& bias,
                      int kernel_size, int stride) {
  if (weights.rows() != static_cast<Eigen::Index>(kernel_size) * input.cols())
    throw ConfigError("conv1d: input has " + std::to_string(input.cols()) +
                      " channels, weights expect " +
                      std::to_string(weights.rows() / kernel_size));
  Matrix out = gather_patches(input, kernel_size, stride) * weights;
  out.rowwise() += bias.row(0);
  return out;
}

Conv1dGrads conv1d_backward(const Matrix& grad_out, const Matrix& input, const Matrix& weights,
                            int kernel_size, int stride) {
  const int length = static_cast<int>(input.rows());
  const int channels = static_cast<int>(input.cols());
  const int out_length = conv1d_output_length(length, stride);
  if (grad_out.rows() != out_length || grad_out.cols() != weights.cols())
    throw InternalError("conv1d_backward: gradient shape does not match forward output");

  const Matrix patches = gather_patches(input, kernel_size, stride);

  Conv1dGrads grads;
  grads.bias = grad_out.colwise().sum();
  grads.weights = patches.transpose() * grad_out;

  const Matrix grad_patches = grad_out * weights.transpose();
  grads.input = Matrix::Zero(length, channels);
  const int pad_left = conv1d_pad_left(kernel_size);
  for (int o = 0; o < out_length; ++o) {
    const int start = o * stride - pad_left;
    for (int u = 0; u < kernel_size; ++u) {
      const int i = start + u;
      if (i >= 0 && i < length)
        grads.input.row(i) += grad_patches.block(o, u * channels, 1, channels);
    }
  }
  return grads;
}

Matrix dense_forward(const Matrix& input, const Matrix& weights, const Matrix& bias) {
  if (input.cols() != weights.rows())
    throw ConfigError("dense: input has " + std::to_string(input.cols()) +
                      " features, weights expect " + std::to_string(weights.rows()));
  Matrix out = input * weights;
  out.rowwise() += bias.row(0);
  return out;
}

DenseGrads dense_backward(const Matrix& grad_out, const Matrix& input, const Matrix& weights) {
  if (grad_out.rows() != input.rows() || grad_out.cols() != weights.cols())
    throw InternalError("dense_backward: gradient shape does not match forward output");
  DenseGrads grads;
  grads.bias = grad_out.colwise().sum();
  grads.weights = input.transpose() * grad_out;
  grads.input = grad_out * weights.transpose();
  return grads;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw InputError("cross_entropy: one label required per row");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs.cols())
      throw InputError("cross_entropy: label " + std::to_string(y) + " out of range at row " +
                       std::to_string(i));
    loss -= std::log(probs(i, y));
  }
  return loss / static_cast<double>(probs.rows());
}

Matrix cross_entropy_softmax_backward(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw InputError("cross_entropy: one label required per row");
  Matrix grad = probs;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= probs.cols())
      throw InputError("cross_entropy: label " + std::to_string(y) + " out of range at row " +
                       std::to_string(i));
    grad(i, y) -= 1.0;
  }
  return grad / static_cast<double>(probs.rows());
}

}  // namespace harfuse
