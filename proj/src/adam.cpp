#include "harfuse/adam.hpp"

#include <cmath>

namespace harfuse {

void adam_step(const std::vector<AdamParamRef>& params, OptimizerState& state, double lr) {
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double m_corr = 1.0 - std::pow(state.beta1, t);
  const double v_corr = 1.0 - std::pow(state.beta2, t);

  for (const AdamParamRef& p : params) {
    Matrix& value = *p.value;
    const Matrix& grad = *p.grad;
    Matrix& m = *p.first_moment;
    Matrix& v = *p.second_moment;
    if (grad.rows() != value.rows() || grad.cols() != value.cols() ||
        m.rows() != value.rows() || m.cols() != value.cols() ||
        v.rows() != value.rows() || v.cols() != value.cols())
      throw InternalError("adam_step: buffer shapes disagree for parameter " + p.name);
    if (!grad.allFinite())
      throw TrainError("non-finite gradient for parameter " + p.name);

    m = state.beta1 * m + (1.0 - state.beta1) * grad;
    v = state.beta2 * v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    value.array() -=
        lr * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + state.epsilon_hat);
  }
}

}  // namespace harfuse
