#include "harfuse/gradcheck.hpp"

#include "harfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace harfuse {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

bool GradCheckReport::passed() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [&](const auto& b) { return b.max_rel_error < tolerance; });
}

std::string GradCheckReport::to_string() const {
  std::string out;
  char line[160];
  for (const auto& b : blocks) {
    std::snprintf(line, sizeof(line), "%-40s max_rel_err %.3e over %ld coords  %s\n",
                  b.name.c_str(), b.max_rel_error, b.coords_checked,
                  b.max_rel_error < tolerance ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof(line), "gradient check %s (tolerance %.1e)\n",
                passed() ? "passed" : "FAILED", tolerance);
  out += line;
  return out;
}

GradCheckReport gradient_check(const std::function<double()>& loss,
                               const std::vector<GradCheckBlock>& blocks,
                               const GradCheckOptions& options) {
  GradCheckReport report;
  report.tolerance = options.tolerance;

  Rng coord_rng(options.coord_seed);
  for (const GradCheckBlock& block : blocks) {
    Matrix& value = *block.value;
    const Matrix analytic = *block.analytic;
    if (analytic.rows() != value.rows() || analytic.cols() != value.cols())
      throw InternalError("gradient_check: analytic gradient shape mismatch for " + block.name);

    const long total = static_cast<long>(value.size());
    std::vector<long> coords(static_cast<std::size_t>(total));
    std::iota(coords.begin(), coords.end(), 0L);
    if (options.coords_per_block > 0 && options.coords_per_block < total) {
      // Deterministic subset: partial Fisher-Yates driven by coord_seed.
      Rng r = coord_rng.fork(static_cast<std::uint64_t>(report.blocks.size()));
      for (long i = 0; i < options.coords_per_block; ++i) {
        const long j = i + static_cast<long>(r.next_u64() % static_cast<std::uint64_t>(total - i));
        std::swap(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)]);
      }
      coords.resize(static_cast<std::size_t>(options.coords_per_block));
    }

    GradCheckBlockResult result;
    result.name = block.name;
    result.coords_checked = static_cast<long>(coords.size());
    double* data = value.data();
    for (long idx : coords) {
      const double saved = data[idx];
      data[idx] = saved + options.step;
      const double up = loss();
      data[idx] = saved - options.step;
      const double down = loss();
      data[idx] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic.data()[idx];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
      result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    report.blocks.push_back(std::move(result));
  }
  return report;
}

}  // namespace harfuse
