#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/data.hpp"
#include "dualabsa/numerics/grad_check.hpp"

namespace dualabsa {

/// Outcome of encode -> decode over a corpus. Conflicts are listed, never
/// silently dropped.
struct RoundTripSummary {
  std::size_t examples = 0;
  std::size_t exact = 0;
  std::vector<std::string> mismatches;  // example ids
  std::vector<std::string> conflicts;   // "id: reason"
};

RoundTripSummary grid_round_trip(const std::vector<Example>& examples, Task task);

bool same_annotation(const Decoded& a, const Decoded& b);

/// Six tokens, d=8, 2 heads, 2 layers, pair hidden 4, quad scans, no dropout.
ModelConfig micro_model_config();
Example micro_example();

/// Central-difference check of the full joint loss on the micro model.
GradCheckReport micro_gradcheck(double h = 1e-5, double tol = 1e-4, double floor = 1e-5);

/// Largest elementwise gap between the scheduled scan (1 and 3 workers) and
/// the naive loop over n = 1..max_n, every direction, with and without a
/// previous layer, for `seeds` random parameter draws.
double mdgru_equivalence(int max_n, int seeds, std::uint64_t base_seed = 1);

struct BenchRow {
  int n = 0;
  DirectionMode mode = DirectionMode::Quad;
  int workers = 1;
  double sequential_seconds = 0.0;
  double wavefront_seconds = 0.0;
  double speedup = 1.0;
  double max_deviation = 0.0;
};

/// Times one pair-encoder layer sequentially and on the wavefront schedule.
/// Best of `repeats` runs each. Deviation compares the two outputs.
BenchRow bench_mdgru(int n, int workers, DirectionMode mode, int repeats = 3, int d_pair = 16, int hidden = 16, std::uint64_t seed = 1);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

}  // namespace dualabsa
