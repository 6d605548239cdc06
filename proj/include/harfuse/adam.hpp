#pragma once

#include "harfuse/types.hpp"

#include <string>
#include <vector>

namespace harfuse {

/// Adam hyperparameters and step counter. epsilon_hat sits outside the square
/// root: the update denominator is sqrt(v_hat) + epsilon_hat with
/// bias-corrected moments.
struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-4;
  long step_count = 0;
};

/// One parameter tensor with its gradient and moment buffers.
struct AdamParamRef {
  std::string name;
  Matrix* value = nullptr;
  const Matrix* grad = nullptr;
  Matrix* first_moment = nullptr;
  Matrix* second_moment = nullptr;
};

/// One Adam update over all listed parameters; increments state.step_count
/// once. Throws TrainError naming the parameter if its gradient is not
/// finite.
void adam_step(const std::vector<AdamParamRef>& params, OptimizerState& state, double lr);

}  // namespace harfuse
