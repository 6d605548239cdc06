#pragma once

#include "harfuse/gradcheck.hpp"
#include "harfuse/model.hpp"

#include <cstdint>

namespace harfuse {

/// Finite-difference checks for every layer type in isolation: conv1d at
/// strides 1/2/5, the dense layer, a conv-relu-dense chain, softmax plus
/// cross-entropy, and the mask fusion block.
GradCheckReport run_layer_gradient_checks(std::uint64_t seed);

/// Whole-model check with frozen masks; every parameter block appears once.
/// coords_per_block = 0 probes every element (use only on small configs).
/// inject_fault corrupts one analytic entry first (negative control).
GradCheckReport run_model_gradient_check(const ModelConfig& config, std::uint64_t seed,
                                         long coords_per_block = 0,
                                         bool inject_fault = false);

/// Layer checks plus a full check of `config`. When inject_fault is set, one
/// analytic gradient entry is corrupted first; the suite must then fail
/// (negative control for the checker itself).
GradCheckReport run_gradcheck_suite(const ModelConfig& config, std::uint64_t seed,
                                    bool inject_fault = false);

}  // namespace harfuse
