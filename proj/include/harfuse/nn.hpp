#pragma once

#include "harfuse/rng.hpp"
#include "harfuse/types.hpp"

#include <vector>

namespace harfuse {

/// 1D convolution over a [length x channels] block, applied along the time
/// axis with zero-padded same semantics: output length is always
/// ceil(length / stride), with floor((kernel - 1) / 2) virtual zeros on the
/// left and as many as needed on the right.
///
/// Weights are stored as a (kernel * in_channels) x filters matrix, row index
/// u * in_channels + c for tap u and input channel c, so the forward pass is
/// one patch-gather and one GEMM.
struct Conv1dLayer {
  int in_channels = 0;
  int filters = 0;
  int kernel_size = 5;
  int stride = 1;
  Matrix weights;  // (kernel_size * in_channels) x filters
  Matrix bias;     // 1 x filters
};

/// Position-wise dense layer: each time row is mapped independently.
struct DenseLayer {
  int in_features = 0;
  int units = 0;
  Matrix weights;  // in_features x units
  Matrix bias;     // 1 x units
};

int conv1d_output_length(int input_length, int stride);
inline int conv1d_pad_left(int kernel_size) { return (kernel_size - 1) / 2; }

Conv1dLayer make_conv1d(int in_channels, int filters, int kernel_size, int stride, Rng& rng);
DenseLayer make_dense(int in_features, int units, Rng& rng);

Matrix conv1d_forward(const Matrix& input, const Matrix& weights, const Matrix& bias,
                      int kernel_size, int stride);
inline Matrix conv1d_forward(const Matrix& input, const Conv1dLayer& layer) {
  return conv1d_forward(input, layer.weights, layer.bias, layer.kernel_size, layer.stride);
}

struct Conv1dGrads {
  Matrix input;
  Matrix weights;
  Matrix bias;
};

Conv1dGrads conv1d_backward(const Matrix& grad_out, const Matrix& input, const Matrix& weights,
                            int kernel_size, int stride);
inline Conv1dGrads conv1d_backward(const Matrix& grad_out, const Matrix& input,
                                   const Conv1dLayer& layer) {
  return conv1d_backward(grad_out, input, layer.weights, layer.kernel_size, layer.stride);
}

Matrix dense_forward(const Matrix& input, const Matrix& weights, const Matrix& bias);
inline Matrix dense_forward(const Matrix& input, const DenseLayer& layer) {
  return dense_forward(input, layer.weights, layer.bias);
}

struct DenseGrads {
  Matrix input;
  Matrix weights;
  Matrix bias;
};

DenseGrads dense_backward(const Matrix& grad_out, const Matrix& input, const Matrix& weights);
inline DenseGrads dense_backward(const Matrix& grad_out, const Matrix& input,
                                 const DenseLayer& layer) {
  return dense_backward(grad_out, input, layer.weights);
}

template <typename Derived>
Matrix relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(0.0);
}

/// Gradient gate is 1 where the forward input was strictly positive.
template <typename DerivedG, typename DerivedX>
Matrix relu_backward(const Eigen::MatrixBase<DerivedG>& grad_out,
                     const Eigen::MatrixBase<DerivedX>& input) {
  return (input.array() > 0.0).select(grad_out.derived(), Matrix::Zero(grad_out.rows(), grad_out.cols()));
}

/// Row-wise softmax with max subtraction; every row sums to 1.
Matrix softmax_rows(const Matrix& logits);

/// Mean of -log(probs[t, labels[t]]) over rows. Labels are 0-based.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

/// Gradient of cross_entropy(softmax_rows(logits), labels) with respect to
/// the logits: (probs - onehot) / T.
Matrix cross_entropy_softmax_backward(const Matrix& probs, const std::vector<int>& labels);

}  // namespace harfuse
