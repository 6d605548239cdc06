#include "harfuse/fusion.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace harfuse;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("sample_masks: degenerate distribution selects one modality") {
  Rng rng(1);
  Vector p(2);
  p << 1.0, 0.0;
  const FusionMask mask = sample_masks(p, 5, 16, rng);
  CHECK(mask.r[0] == Matrix::Ones(5, 16));
  CHECK(mask.r[1] == Matrix::Zero(5, 16));
}

TEST_CASE("sample_masks: exactly one modality per coordinate, m=7 at 5x256") {
  Rng rng(2);
  const Vector p = uniform_selection_probabilities(7);
  const FusionMask mask = sample_masks(p, 5, 256, rng);
  Matrix sum = Matrix::Zero(5, 256);
  for (const Matrix& r : mask.r) {
    for (Eigen::Index i = 0; i < r.size(); ++i)
      CHECK((r.data()[i] == 0.0 || r.data()[i] == 1.0));
    sum += r;
  }
  CHECK(sum == Matrix::Ones(5, 256));
}

TEST_CASE("sample_masks: empirical frequencies within 0.01 of p over 1e5 draws") {
  Rng rng(3);
  Vector p(3);
  p << 0.5, 0.3, 0.2;
  // 100 masks of 20x50 = 1e5 coordinate draws.
  std::vector<double> counts(3, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const FusionMask mask = sample_masks(p, 20, 50, rng);
    for (int k = 0; k < 3; ++k) counts[static_cast<std::size_t>(k)] += mask.r[static_cast<std::size_t>(k)].sum();
  }
  const double total = counts[0] + counts[1] + counts[2];
  CHECK(total == doctest::Approx(1e5));
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(counts[static_cast<std::size_t>(k)] / total - p[k]) < 0.01);
}

TEST_CASE("sample_masks: invalid probabilities rejected") {
  Rng rng(4);
  Vector bad(2);
  bad << 0.6, 0.6;
  CHECK_THROWS_AS(sample_masks(bad, 2, 2, rng), ConfigError);
  bad << -0.5, 1.5;
  CHECK_THROWS_AS(sample_masks(bad, 2, 2, rng), ConfigError);
}

TEST_CASE("embrace_forward: identical features pass through unchanged") {
  Rng rng(5);
  const Matrix d = random_matrix(5, 8, rng);
  const std::vector<Matrix> docked{d, d, d};
  Rng mask_rng(6);
  const FusionMask mask =
      sample_masks(uniform_selection_probabilities(3), 5, 8, mask_rng);
  CHECK(embrace_forward(docked, mask) == d);
}

TEST_CASE("embrace_forward: one-hot p copies the selected modality bit-exactly") {
  Rng rng(7);
  const std::vector<Matrix> docked{random_matrix(5, 8, rng), random_matrix(5, 8, rng)};
  Vector p(2);
  p << 1.0, 0.0;
  Rng mask_rng(8);
  const FusionMask mask = sample_masks(p, 5, 8, mask_rng);
  CHECK(embrace_forward(docked, mask) == docked[0]);
}

TEST_CASE("embrace_forward: mask average converges to the feature mean") {
  // d1 all ones, d2 all zeros, uniform p: each fused entry is Bernoulli(1/2),
  // so the average over 1e4 draws concentrates near 0.5.
  const std::vector<Matrix> docked{Matrix::Ones(2, 5), Matrix::Zero(2, 5)};
  const Vector p = uniform_selection_probabilities(2);
  Rng rng(9);
  Matrix mean = Matrix::Zero(2, 5);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    mean += embrace_forward(docked, sample_masks(p, 2, 5, rng));
  mean /= draws;
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    CHECK(std::abs(mean.data()[i] - 0.5) < 0.02);
}

TEST_CASE("embrace_forward: sample-mean error shrinks like 1/sqrt(N)") {
  const std::vector<Matrix> docked{Matrix::Ones(1, 64), Matrix::Zero(1, 64)};
  const Vector p = uniform_selection_probabilities(2);
  Rng rng(10);
  const auto mean_abs_dev = [&](int draws) {
    Matrix mean = Matrix::Zero(1, 64);
    for (int i = 0; i < draws; ++i)
      mean += embrace_forward(docked, sample_masks(p, 1, 64, rng));
    mean /= draws;
    return (mean.array() - 0.5).abs().mean();
  };
  const double dev_small = mean_abs_dev(100);
  const double dev_large = mean_abs_dev(10000);
  // Expected ratio is 10; allow a factor-of-2 band.
  CHECK(dev_large < dev_small / 5.0);
}

TEST_CASE("embrace_backward: partition property and degenerate cases") {
  Rng rng(11);
  const Vector p = uniform_selection_probabilities(3);
  Rng mask_rng(12);
  const FusionMask mask = sample_masks(p, 4, 6, mask_rng);

  const std::vector<Matrix> zero = embrace_backward(Matrix::Zero(4, 6), mask);
  for (const Matrix& g : zero) CHECK(g.isZero(0.0));

  const Matrix grad = random_matrix(4, 6, rng);
  const std::vector<Matrix> grads = embrace_backward(grad, mask);
  Matrix sum = Matrix::Zero(4, 6);
  for (const Matrix& g : grads) sum += g;
  CHECK(sum == grad);

  Vector onehot(2);
  onehot << 1.0, 0.0;
  Rng mask_rng2(13);
  const FusionMask mask2 = sample_masks(onehot, 4, 6, mask_rng2);
  const std::vector<Matrix> grads2 = embrace_backward(grad, mask2);
  CHECK(grads2[0] == grad);
  CHECK(grads2[1].isZero(0.0));
}

TEST_CASE("embrace: frozen-mask forward is linear; directional derivative matches") {
  Rng rng(14);
  Rng mask_rng(15);
  const FusionMask mask =
      sample_masks(uniform_selection_probabilities(3), 3, 4, mask_rng);
  std::vector<Matrix> docked{random_matrix(3, 4, rng), random_matrix(3, 4, rng),
                             random_matrix(3, 4, rng)};
  const std::vector<Matrix> direction{random_matrix(3, 4, rng), random_matrix(3, 4, rng),
                                      random_matrix(3, 4, rng)};
  const double h = 1e-6;
  std::vector<Matrix> up = docked, down = docked;
  for (int k = 0; k < 3; ++k) {
    up[static_cast<std::size_t>(k)] += h * direction[static_cast<std::size_t>(k)];
    down[static_cast<std::size_t>(k)] -= h * direction[static_cast<std::size_t>(k)];
  }
  const Matrix jvp_numeric =
      (embrace_forward(up, mask) - embrace_forward(down, mask)) / (2.0 * h);
  Matrix jvp_exact = Matrix::Zero(3, 4);
  for (int k = 0; k < 3; ++k)
    jvp_exact += mask.r[static_cast<std::size_t>(k)].cwiseProduct(
        direction[static_cast<std::size_t>(k)]);
  CHECK((jvp_numeric - jvp_exact).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("early_fuse: full sensor set gives 500x20 in fixed order") {
  SensorSample sample;
  for (int k = 0; k < kModalityCount; ++k)
    sample.modalities[static_cast<std::size_t>(k)] =
        Matrix::Constant(kWindowLength, modality_channels(k), static_cast<double>(k));
  const Matrix fused = early_fuse(sample);
  CHECK(fused.rows() == 500);
  CHECK(fused.cols() == 20);
  // Channel blocks appear in sensor order: 3+3+3+3+3+4+1.
  CHECK(fused(0, 0) == 0.0);
  CHECK(fused(0, 3) == 1.0);
  CHECK(fused(10, 14) == 4.0);
  CHECK(fused(10, 15) == 5.0);
  CHECK(fused(499, 19) == 6.0);
}

TEST_CASE("early_fuse: degenerate single modality and constant columns") {
  const std::vector<Matrix> pressure_only{Matrix::Constant(kWindowLength, 1, 2.5)};
  const Matrix fused = early_fuse(pressure_only);
  CHECK(fused.rows() == 500);
  CHECK(fused.cols() == 1);
  CHECK(fused == pressure_only[0]);

  const std::vector<Matrix> two{Matrix::Constant(500, 3, 1.0), Matrix::Constant(500, 3, 2.0)};
  const Matrix both = early_fuse(two);
  CHECK(both.leftCols(3) == Matrix::Constant(500, 3, 1.0));
  CHECK(both.rightCols(3) == Matrix::Constant(500, 3, 2.0));

  CHECK_THROWS_AS(early_fuse(std::vector<Matrix>{}), InputError);
  CHECK_THROWS_AS(early_fuse(std::vector<Matrix>{Matrix()}), InputError);
}

TEST_CASE("intermediate_fuse: widths add up; single input is the identity") {
  Rng rng(16);
  std::vector<Matrix> features;
  for (int k = 0; k < 7; ++k) features.push_back(random_matrix(5, 256, rng));
  const Matrix fused = intermediate_fuse(features);
  CHECK(fused.rows() == 5);
  CHECK(fused.cols() == 1792);

  const std::vector<Matrix> one{features[0]};
  CHECK(intermediate_fuse(one) == features[0]);

  Matrix a = random_matrix(5, 2, rng), b = random_matrix(5, 2, rng);
  const Matrix ab = intermediate_fuse({a, b});
  CHECK(ab.leftCols(2) == a);
  CHECK(ab.rightCols(2) == b);
}

TEST_CASE("late_fuse: averaging preserves distributions") {
  Matrix p1 = Matrix::Zero(2, 8);
  p1(0, 0) = 1.0;
  p1(1, 0) = 1.0;
  Matrix p2 = Matrix::Zero(2, 8);
  p2(0, 1) = 1.0;
  p2(1, 1) = 1.0;
  const Matrix mean = late_fuse({p1, p2});
  CHECK(mean(0, 0) == doctest::Approx(0.5));
  CHECK(mean(0, 1) == doctest::Approx(0.5));
  CHECK(mean(0, 2) == doctest::Approx(0.0));

  CHECK(late_fuse({p1, p1, p1}) == p1);
  CHECK_THROWS_AS(late_fuse({}), InputError);

  Rng rng(17);
  std::vector<Matrix> random_rows;
  for (int k = 0; k < 7; ++k) {
    Matrix logits = random_matrix(5, 8, rng);
    random_rows.push_back(Matrix((logits.array().exp()).matrix()));
    for (Eigen::Index i = 0; i < 5; ++i)
      random_rows.back().row(i) /= random_rows.back().row(i).sum();
  }
  const Matrix avg = late_fuse(random_rows);
  for (Eigen::Index i = 0; i < avg.rows(); ++i)
    CHECK(std::abs(avg.row(i).sum() - 1.0) < 1e-12);
}
