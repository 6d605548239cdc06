#include "harfuse/nn.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace harfuse;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

// Hand-rolled central differences, independent of the library's checker.
double central_diff(double& slot, const std::function<double()>& loss, double h = 1e-5) {
  const double saved = slot;
  slot = saved + h;
  const double up = loss();
  slot = saved - h;
  const double down = loss();
  slot = saved;
  return (up - down) / (2.0 * h);
}

double max_fd_error(Matrix& params, const Matrix& analytic,
                    const std::function<double()>& loss) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double numeric = central_diff(params.data()[i], loss);
    worst = std::max(worst, rel_err(analytic.data()[i], numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("conv1d: identity kernel reproduces the input") {
  Conv1dLayer layer;
  layer.in_channels = 1;
  layer.filters = 1;
  layer.kernel_size = 1;
  layer.stride = 1;
  layer.weights = Matrix::Constant(1, 1, 1.0);
  layer.bias = Matrix::Zero(1, 1);

  Rng rng(3);
  const Matrix input = random_matrix(17, 1, rng);
  CHECK(conv1d_forward(input, layer) == input);
}

TEST_CASE("conv1d: hand-evaluated zero-padded window sum") {
  Conv1dLayer layer;
  layer.in_channels = 1;
  layer.filters = 1;
  layer.kernel_size = 3;
  layer.stride = 1;
  layer.weights = Matrix::Constant(3, 1, 1.0);
  layer.bias = Matrix::Zero(1, 1);

  Matrix input(3, 1);
  input << 1, 2, 3;
  const Matrix out = conv1d_forward(input, layer);
  REQUIRE(out.rows() == 3);
  CHECK(out(0, 0) == doctest::Approx(3.0));
  CHECK(out(1, 0) == doctest::Approx(6.0));
  CHECK(out(2, 0) == doctest::Approx(5.0));
}

TEST_CASE("conv1d: 500x3 input with 32 filters and stride 5 gives 100x32") {
  Rng rng(4);
  const Conv1dLayer layer = make_conv1d(3, 32, 5, 5, rng);
  const Matrix input = random_matrix(500, 3, rng);
  const Matrix out = conv1d_forward(input, layer);
  CHECK(out.rows() == 100);
  CHECK(out.cols() == 32);
}

TEST_CASE("conv1d: same-padding length law over L in [1,600]") {
  Rng rng(5);
  for (const int stride : {1, 2, 5}) {
    const Conv1dLayer layer = make_conv1d(1, 1, 5, stride, rng);
    for (int length = 1; length <= 600; ++length) {
      const Matrix input = Matrix::Ones(length, 1);
      const Matrix out = conv1d_forward(input, layer);
      CHECK(out.rows() == (length + stride - 1) / stride);
    }
  }
}

TEST_CASE("conv1d: linear in the input when bias is zero") {
  Rng rng(6);
  Conv1dLayer layer = make_conv1d(3, 4, 5, 2, rng);
  layer.bias.setZero();
  const Matrix x = random_matrix(23, 3, rng);
  const Matrix y = random_matrix(23, 3, rng);
  const double a = 1.7, b = -0.4;
  const Matrix lhs = conv1d_forward(a * x + b * y, layer);
  const Matrix rhs = a * conv1d_forward(x, layer) + b * conv1d_forward(y, layer);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conv1d: channel mismatch raises a configuration error") {
  Rng rng(7);
  const Conv1dLayer layer = make_conv1d(3, 4, 5, 1, rng);
  const Matrix input = random_matrix(10, 2, rng);
  CHECK_THROWS_AS(conv1d_forward(input, layer), ConfigError);
}

TEST_CASE("conv1d backward: zero upstream gives zero gradients") {
  Rng rng(8);
  const Conv1dLayer layer = make_conv1d(3, 4, 5, 2, rng);
  const Matrix input = random_matrix(20, 3, rng);
  const Matrix grad_out = Matrix::Zero(10, 4);
  const Conv1dGrads grads = conv1d_backward(grad_out, input, layer);
  CHECK(grads.input.isZero(0.0));
  CHECK(grads.weights.isZero(0.0));
  CHECK(grads.bias.isZero(0.0));
}

TEST_CASE("conv1d backward: identity kernel passes the gradient through") {
  Conv1dLayer layer;
  layer.in_channels = 1;
  layer.filters = 1;
  layer.kernel_size = 1;
  layer.stride = 1;
  layer.weights = Matrix::Constant(1, 1, 1.0);
  layer.bias = Matrix::Zero(1, 1);
  Rng rng(9);
  const Matrix input = random_matrix(12, 1, rng);
  const Matrix grad_out = random_matrix(12, 1, rng);
  const Conv1dGrads grads = conv1d_backward(grad_out, input, layer);
  CHECK(grads.input == grad_out);
}

TEST_CASE("conv1d backward: finite differences at stride 2") {
  Rng rng(10);
  Conv1dLayer layer = make_conv1d(3, 4, 5, 2, rng);
  layer.bias = random_matrix(1, 4, rng, 0.3);
  Matrix input = random_matrix(20, 3, rng);
  const Matrix projection = random_matrix(10, 4, rng);

  const auto loss = [&]() {
    return conv1d_forward(input, layer).cwiseProduct(projection).sum();
  };
  const Conv1dGrads grads = conv1d_backward(projection, input, layer);

  CHECK(max_fd_error(layer.weights, grads.weights, loss) < 1e-6);
  CHECK(max_fd_error(layer.bias, grads.bias, loss) < 1e-6);
  CHECK(max_fd_error(input, grads.input, loss) < 1e-6);
}

TEST_CASE("dense: identity map and the documented shapes") {
  Rng rng(11);
  DenseLayer identity;
  identity.in_features = 6;
  identity.units = 6;
  identity.weights = Matrix::Identity(6, 6);
  identity.bias = Matrix::Zero(1, 6);
  const Matrix input = random_matrix(4, 6, rng);
  CHECK(dense_forward(input, identity) == input);

  const DenseLayer wide = make_dense(256, 256, rng);
  CHECK(dense_forward(random_matrix(5, 256, rng), wide).rows() == 5);
  CHECK(dense_forward(random_matrix(5, 256, rng), wide).cols() == 256);
}

TEST_CASE("dense: hand matrix product") {
  DenseLayer layer;
  layer.in_features = 2;
  layer.units = 2;
  layer.weights = Matrix(2, 2);
  layer.weights << 1, 2, 3, 4;
  layer.bias = Matrix::Zero(1, 2);
  Matrix input(1, 2);
  input << 1, 1;
  const Matrix out = dense_forward(input, layer);
  CHECK(out(0, 0) == doctest::Approx(4.0));
  CHECK(out(0, 1) == doctest::Approx(6.0));
}

TEST_CASE("dense backward: finite differences") {
  Rng rng(12);
  DenseLayer layer = make_dense(6, 5, rng);
  layer.bias = random_matrix(1, 5, rng, 0.3);
  Matrix input = random_matrix(4, 6, rng);
  const Matrix projection = random_matrix(4, 5, rng);

  const auto loss = [&]() {
    return dense_forward(input, layer).cwiseProduct(projection).sum();
  };
  const DenseGrads grads = dense_backward(projection, input, layer);
  CHECK(max_fd_error(layer.weights, grads.weights, loss) < 1e-6);
  CHECK(max_fd_error(layer.bias, grads.bias, loss) < 1e-6);
  CHECK(max_fd_error(input, grads.input, loss) < 1e-6);
}

TEST_CASE("relu: values and gradient gate") {
  Matrix x(1, 2);
  x << -1.0, 2.5;
  const Matrix y = relu(x);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 2.5);

  Matrix upstream = Matrix::Ones(1, 2);
  Matrix target(1, 2);
  target << 3.0, -3.0;
  const Matrix gate = relu_backward(upstream, target);
  CHECK(gate(0, 0) == 1.0);
  CHECK(gate(0, 1) == 0.0);
}

TEST_CASE("softmax: uniform logits, closed form, and huge inputs") {
  const Matrix equal = softmax_rows(Matrix::Constant(1, 8, 3.25));
  for (int j = 0; j < 8; ++j) CHECK(equal(0, j) == doctest::Approx(0.125).epsilon(1e-12));

  Matrix two(1, 2);
  two << 0.0, std::log(2.0);
  const Matrix p = softmax_rows(two);
  CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Matrix big(1, 2);
  big << 1000.0, 0.0;
  const Matrix q = softmax_rows(big);
  CHECK(q.allFinite());
  CHECK(q(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax: rows sum to one within 1e-12 across extreme ranges") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix logits = random_matrix(5, 8, rng, 1000.0);
    const Matrix probs = softmax_rows(logits);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      CHECK(std::abs(probs.row(i).sum() - 1.0) < 1e-12);
      CHECK(probs.row(i).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("cross entropy: documented values and label validation") {
  const Matrix uniform = Matrix::Constant(5, 8, 0.125);
  CHECK(cross_entropy(uniform, {0, 1, 2, 3, 4}) == doctest::Approx(std::log(8.0)));

  Matrix exact = Matrix::Zero(3, 4);
  exact(0, 2) = 1.0;
  exact(1, 0) = 1.0;
  exact(2, 3) = 1.0;
  CHECK(cross_entropy(exact, {2, 0, 3}) == doctest::Approx(0.0));

  Matrix probs(1, 3);
  probs << 0.5, 0.25, 0.25;
  CHECK(cross_entropy(probs, {1}) == doctest::Approx(std::log(4.0)));

  CHECK_THROWS_AS(cross_entropy(probs, {3}), InputError);
  CHECK_THROWS_AS(cross_entropy(probs, {-1}), InputError);
}

TEST_CASE("cross entropy: combined softmax backward matches finite differences") {
  Rng rng(14);
  Matrix logits = random_matrix(5, 8, rng, 2.0);
  const std::vector<int> labels{1, 7, 0, 3, 3};
  const auto loss = [&]() { return cross_entropy(softmax_rows(logits), labels); };
  const Matrix analytic = cross_entropy_softmax_backward(softmax_rows(logits), labels);
  CHECK(max_fd_error(logits, analytic, loss) < 1e-8);
}

TEST_CASE("backward passes survive 20 random shapes and seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    const int length = 6 + static_cast<int>(rng.next_u64() % 20);
    const int channels = 1 + static_cast<int>(rng.next_u64() % 4);
    const int filters = 1 + static_cast<int>(rng.next_u64() % 5);
    const int stride = 1 + static_cast<int>(rng.next_u64() % 3);
    const int kernel = 1 + 2 * static_cast<int>(rng.next_u64() % 3);

    Conv1dLayer conv = make_conv1d(channels, filters, kernel, stride, rng);
    conv.bias = random_matrix(1, filters, rng, 0.2);
    Matrix input = random_matrix(length, channels, rng);
    const int out_length = conv1d_output_length(length, stride);
    const Matrix projection = random_matrix(out_length, filters, rng);

    const auto loss = [&]() {
      return conv1d_forward(input, conv).cwiseProduct(projection).sum();
    };
    const Conv1dGrads grads = conv1d_backward(projection, input, conv);
    CHECK(max_fd_error(conv.weights, grads.weights, loss) < 1e-4);
    CHECK(max_fd_error(input, grads.input, loss) < 1e-4);
  }
}
