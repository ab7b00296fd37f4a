#include "dualabsa/wavefront.hpp"

#include <algorithm>
#include <barrier>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace dualabsa {

std::vector<std::size_t> WavefrontPlan::stage_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& s : stages) sizes.push_back(s.size());
  return sizes;
}

std::size_t WavefrontPlan::cell_count() const {
  std::size_t total = 0;
  for (const auto& s : stages) total += s.size();
  return total;
}

WavefrontPlan wavefront_schedule(int n, int workers) {
  if (n < 1) throw std::invalid_argument("wavefront_schedule: n must be at least 1, got " + std::to_string(n));
  if (workers < 1) throw std::invalid_argument("wavefront_schedule: workers must be at least 1, got " + std::to_string(workers));
  WavefrontPlan plan;
  plan.n = n;
  plan.workers = workers;
  if (workers == 1) {
    auto& only = plan.stages.emplace_back();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) only.emplace_back(a, b);
    return plan;
  }
  for (int k = 0; k <= 2 * (n - 1); ++k) {
    auto& stage = plan.stages.emplace_back();
    for (int a = std::max(0, k - (n - 1)); a <= std::min(k, n - 1); ++a) stage.emplace_back(a, k - a);
  }
  return plan;
}

void run_plan(const WavefrontPlan& plan, const std::function<void(int, int)>& cell) {
  if (plan.workers == 1) {
    for (const auto& stage : plan.stages)
      for (auto [a, b] : stage) cell(a, b);
    return;
  }
  const int workers = plan.workers;
  std::barrier sync(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](int w) {
    for (const auto& stage : plan.stages) {
      const std::size_t size = stage.size();
      const std::size_t begin = size * w / workers;
      const std::size_t end = size * (w + 1) / workers;
      try {
        for (std::size_t c = begin; c < end; ++c) cell(stage[c].first, stage[c].second);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
      sync.arrive_and_wait();
    }
  };
  {
    std::vector<std::jthread> threads;
    for (int w = 1; w < workers; ++w) threads.emplace_back(work, w);
    work(0);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace dualabsa
