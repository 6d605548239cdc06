#pragma once

#include "harfuse/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace harfuse {

/// One named parameter block under check: the live tensor the loss closure
/// reads, plus the analytic gradient produced for it.
struct GradCheckBlock {
  std::string name;
  Matrix* value = nullptr;
  const Matrix* analytic = nullptr;
};

struct GradCheckBlockResult {
  std::string name;
  double max_rel_error = 0.0;
  long coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckBlockResult> blocks;
  double tolerance = 0.0;
  double max_rel_error() const;
  bool passed() const;
  /// One line per block plus a verdict line.
  std::string to_string() const;
};

struct GradCheckOptions {
  double step = 1e-5;        // central-difference h
  double tolerance = 1e-4;
  /// Elements probed per block; 0 checks every element. Large models are
  /// spot-checked on a deterministic pseudo-random subset.
  long coords_per_block = 0;
  std::uint64_t coord_seed = 0;
};

/// Central finite differences against analytic gradients.
///
/// `loss` must be a pure function of the block values (any internal
/// randomness frozen by the caller). The analytic gradients must already be
/// populated before the call; block values are restored bit-exactly after
/// probing. Errors are reported relative to max(|analytic|, |numeric|, 1), so
/// tiny gradients are judged on absolute error.
GradCheckReport gradient_check(const std::function<double()>& loss,
                               const std::vector<GradCheckBlock>& blocks,
                               const GradCheckOptions& options = {});

}  // namespace harfuse
