#include "harfuse/fusion.hpp"

#include <cmath>
#include <string>

namespace harfuse {

void validate_selection_probabilities(const Vector& p) {
  if (p.size() < 1) throw ConfigError("selection probabilities must have at least one entry");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (!(p[k] >= 0.0))
      throw ConfigError("selection probability " + std::to_string(k) + " is negative or NaN");
    sum += p[k];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("selection probabilities sum to " + std::to_string(sum) + ", expected 1");
}

Vector uniform_selection_probabilities(int modality_count) {
  return Vector::Constant(modality_count, 1.0 / modality_count);
}

FusionMask sample_masks(const Vector& p, int rows, int cols, Rng& rng) {
  validate_selection_probabilities(p);
  FusionMask mask;
  mask.r.assign(static_cast<std::size_t>(p.size()), Matrix::Zero(rows, cols));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int k = rng.categorical(p);
      mask.r[static_cast<std::size_t>(k)](i, j) = 1.0;
    }
  }
  return mask;
}

Matrix embrace_forward(const std::vector<Matrix>& docked, const FusionMask& mask) {
  if (docked.empty() || docked.size() != mask.r.size())
    throw InternalError("embrace_forward: docked feature and mask counts disagree");
  Matrix fused = Matrix::Zero(docked[0].rows(), docked[0].cols());
  for (std::size_t k = 0; k < docked.size(); ++k) {
    if (docked[k].rows() != fused.rows() || docked[k].cols() != fused.cols() ||
        mask.r[k].rows() != fused.rows() || mask.r[k].cols() != fused.cols())
      throw InternalError("embrace_forward: shape mismatch at modality " + std::to_string(k));
    fused += mask.r[k].cwiseProduct(docked[k]);
  }
  return fused;
}

std::vector<Matrix> embrace_backward(const Matrix& grad_fused, const FusionMask& mask) {
  std::vector<Matrix> grads;
  grads.reserve(mask.r.size());
  for (const Matrix& r : mask.r) {
    if (r.rows() != grad_fused.rows() || r.cols() != grad_fused.cols())
      throw InternalError("embrace_backward: mask and gradient shapes disagree");
    grads.push_back(r.cwiseProduct(grad_fused));
  }
  return grads;
}

Matrix expected_fusion(const std::vector<Matrix>& docked, const Vector& p) {
  validate_selection_probabilities(p);
  if (static_cast<Eigen::Index>(docked.size()) != p.size())
    throw InternalError("expected_fusion: docked feature and probability counts disagree");
  Matrix fused = Matrix::Zero(docked[0].rows(), docked[0].cols());
  for (std::size_t k = 0; k < docked.size(); ++k)
    fused += p[static_cast<Eigen::Index>(k)] * docked[k];
  return fused;
}

Matrix early_fuse(const std::vector<Matrix>& modalities) {
  if (modalities.empty()) throw InputError("early_fuse: no modalities given");
  Eigen::Index rows = -1, total_cols = 0;
  for (const Matrix& m : modalities) {
    if (m.size() == 0) throw InputError("early_fuse: missing modality data");
    if (rows < 0) rows = m.rows();
    if (m.rows() != rows) throw InputError("early_fuse: modalities disagree on row count");
    total_cols += m.cols();
  }
  Matrix fused(rows, total_cols);
  Eigen::Index at = 0;
  for (const Matrix& m : modalities) {
    fused.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  return fused;
}

Matrix early_fuse(const SensorSample& sample) {
  return early_fuse(std::vector<Matrix>(sample.modalities.begin(), sample.modalities.end()));
}

Matrix intermediate_fuse(const std::vector<Matrix>& features) {
  if (features.empty()) throw InternalError("intermediate_fuse: no features given");
  const Eigen::Index rows = features[0].rows();
  const Eigen::Index cols = features[0].cols();
  for (const Matrix& f : features)
    if (f.rows() != rows || f.cols() != cols)
      throw InternalError("intermediate_fuse: features must share one shape");
  Matrix fused(rows, cols * static_cast<Eigen::Index>(features.size()));
  for (std::size_t k = 0; k < features.size(); ++k)
    fused.middleCols(static_cast<Eigen::Index>(k) * cols, cols) = features[k];
  return fused;
}

Matrix late_fuse(const std::vector<Matrix>& per_model_probs) {
  if (per_model_probs.empty()) throw InputError("late_fuse: empty probability list");
  Matrix mean = Matrix::Zero(per_model_probs[0].rows(), per_model_probs[0].cols());
  for (const Matrix& p : per_model_probs) {
    if (p.rows() != mean.rows() || p.cols() != mean.cols())
      throw InternalError("late_fuse: probability shapes disagree");
    mean += p;
  }
  return mean / static_cast<double>(per_model_probs.size());
}

}  // namespace harfuse
