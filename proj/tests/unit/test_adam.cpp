#include "harfuse/adam.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace harfuse;

namespace {

struct Param {
  Matrix value, grad, m, v;
  Param(int rows, int cols)
      : value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        m(Matrix::Zero(rows, cols)),
        v(Matrix::Zero(rows, cols)) {}
  AdamParamRef ref(const std::string& name) { return {name, &value, &grad, &m, &v}; }
};

}  // namespace

TEST_CASE("adam: zero gradients are a parameter fixed point") {
  Param p(3, 4);
  p.value.setConstant(0.7);
  OptimizerState state;
  const Matrix before = p.value;
  for (int i = 0; i < 5; ++i) adam_step({p.ref("w")}, state, 1e-3);
  CHECK(p.value == before);
  CHECK(state.step_count == 5);
}

TEST_CASE("adam: first step matches the closed form -lr*g/(|g|+eps)") {
  Param p(2, 2);
  p.value.setZero();
  p.grad << 1.0, -2.0, 0.5, 10.0;
  OptimizerState state;
  const double lr = 1e-4;
  adam_step({p.ref("w")}, state, lr);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    const double g = p.grad.data()[i];
    const double expected = -lr * g / (std::abs(g) + state.epsilon_hat);
    CHECK(p.value.data()[i] == doctest::Approx(expected).epsilon(1e-12));
    // For |g| >> eps_hat this is one signed learning-rate step.
    if (std::abs(g) >= 1.0)
      CHECK(std::abs(p.value.data()[i] + lr * (g > 0 ? 1.0 : -1.0)) < lr * 1e-3);
  }
}

TEST_CASE("adam: constant positive gradient decreases the parameter monotonically") {
  Param p(1, 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 1.0;
  OptimizerState state;
  double previous = p.value(0, 0);
  for (int i = 0; i < 2; ++i) {
    adam_step({p.ref("w")}, state, 1e-4);
    CHECK(p.value(0, 0) < previous);
    previous = p.value(0, 0);
  }
}

TEST_CASE("adam: non-finite gradient aborts naming the parameter") {
  Param p(2, 2);
  p.grad(1, 1) = std::nan("");
  OptimizerState state;
  try {
    adam_step({p.ref("broken/weight")}, state, 1e-4);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    CHECK(std::string(e.what()).find("broken/weight") != std::string::npos);
  }
}
