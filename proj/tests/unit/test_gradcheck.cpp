#include "harfuse/checks.hpp"

#include <doctest.h>

#include <string>

using namespace harfuse;

TEST_CASE("gradcheck: every layer type passes finite differences") {
  const GradCheckReport report = run_layer_gradient_checks(202);
  CHECK(report.passed());
  for (const auto& block : report.blocks) {
    INFO(block.name);
    if (block.name.rfind("dense/", 0) == 0) CHECK(block.max_rel_error < 1e-6);
    if (block.name.rfind("chain/", 0) == 0) CHECK(block.max_rel_error < 1e-4);
  }
}

TEST_CASE("gradcheck: full tiny model with frozen masks") {
  const GradCheckReport report = run_model_gradient_check(ModelConfig::tiny(), 7);
  CHECK(report.passed());
  CHECK(report.max_rel_error() < 1e-4);
  // Every parameter block appears exactly once.
  const Model model = Model::build(ModelConfig::tiny(), 7);
  long expected_blocks = 0;
  for (const auto& member : model.members()) expected_blocks += member.store().size();
  CHECK(static_cast<long>(report.blocks.size()) == expected_blocks);
}

TEST_CASE("gradcheck: full base model, spot-checked coordinates") {
  const GradCheckReport report = run_model_gradient_check(ModelConfig::base(), 7, 4);
  CHECK(report.passed());
  CHECK(report.max_rel_error() < 1e-4);
}

TEST_CASE("gradcheck: corrupted analytic gradient is caught") {
  const GradCheckReport report =
      run_model_gradient_check(ModelConfig::tiny(), 7, 0, /*inject_fault=*/true);
  CHECK_FALSE(report.passed());
}
