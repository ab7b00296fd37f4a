#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace dualabsa {

/// Evaluation order for an n x n recurrence whose cell (a, b) depends on
/// (a-1, b) and (a, b-1), in scan-canonical coordinates. Cells within one
/// stage are independent.
struct WavefrontPlan {
  int n = 0;
  int workers = 1;
  std::vector<std::vector<std::pair<int, int>>> stages;

  std::vector<std::size_t> stage_sizes() const;
  std::size_t cell_count() const;
};

/// workers == 1: one stage in row-major order. Otherwise one stage per
/// anti-diagonal a + b = k, ordered by a.
WavefrontPlan wavefront_schedule(int n, int workers);

/// Runs `cell` on every cell of the plan. Stages run in order; within a
/// stage cells are split into contiguous chunks across the workers, with a
/// barrier between stages.
void run_plan(const WavefrontPlan& plan, const std::function<void(int a, int b)>& cell);

}  // namespace dualabsa
