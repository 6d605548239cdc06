#pragma once

#include "harfuse/dataset.hpp"
#include "harfuse/rng.hpp"
#include "harfuse/types.hpp"

#include <vector>

namespace harfuse {

/// Checks the selection-probability invariants: every entry nonnegative and
/// the sum equal to 1 within 1e-12. Throws ConfigError otherwise.
void validate_selection_probabilities(const Vector& p);

Vector uniform_selection_probabilities(int modality_count);

/// Binary selection tensors r[k], one per modality. At every coordinate
/// exactly one modality bit is set.
struct FusionMask {
  std::vector<Matrix> r;
  int modality_count() const { return static_cast<int>(r.size()); }
};

/// Draws one modality index per coordinate from the selection distribution.
FusionMask sample_masks(const Vector& p, int rows, int cols, Rng& rng);

/// e = sum_k r[k] o d[k]; with the mask partition this copies, per
/// coordinate, the value of the selected modality.
Matrix embrace_forward(const std::vector<Matrix>& docked, const FusionMask& mask);

/// Masks are constants during backward: grad_d[k] = r[k] o grad_e.
std::vector<Matrix> embrace_backward(const Matrix& grad_fused, const FusionMask& mask);

/// Deterministic stand-in for debugging only: e = sum_k p[k] * d[k], the
/// expectation of embrace_forward over mask draws.
Matrix expected_fusion(const std::vector<Matrix>& docked, const Vector& p);

/// Channel-axis concatenation in fixed sensor order.
Matrix early_fuse(const std::vector<Matrix>& modalities);
Matrix early_fuse(const SensorSample& sample);

/// Last-axis concatenation of equal-shaped encoder features.
Matrix intermediate_fuse(const std::vector<Matrix>& features);

/// Elementwise arithmetic mean of per-model probability rows.
Matrix late_fuse(const std::vector<Matrix>& per_model_probs);

}  // namespace harfuse
