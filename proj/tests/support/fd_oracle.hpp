#pragma once

// Finite-difference oracle for op-level gradient tests. It re-runs the forward
// computation only; it never reads a backward rule.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "dualabsa/numerics.hpp"

namespace dualabsa::testing {

struct FdResult {
  double max_rel_error = 0.0;
  std::string worst;
};

/// `build` must produce a scalar from parameters in `store`. The analytic
/// gradient comes from one backward pass; the numeric one from central
/// differences of repeated forward passes.
inline FdResult fd_compare(const std::function<Var<double>(Graph<double>&)>& build, ParamStore<double>& store,
                           double h = 1e-6, double floor = 1e-8) {
  store.zero_grad();
  {
    Graph<double> g;
    g.backward(build(g));
  }
  FdResult result;
  for (auto& e : store.entries()) {
    if (!e.trainable) continue;
    auto v = e.value.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + h;
      double up;
      {
        Graph<double> g;
        up = build(g).value().item();
      }
      v[i] = saved - h;
      double down;
      {
        Graph<double> g;
        down = build(g).value().item();
      }
      v[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = e.grad.values()[i];
      if (std::getenv("FD_TRACE")) std::fprintf(stderr, "%s[%zu] num=%.10g ana=%.10g\n", e.name.c_str(), i, numeric, analytic);
      const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), floor});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = e.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

/// Contracts an arbitrary output with a fixed random weighting so every output
/// element contributes to the scalar.
inline Var<double> random_projection(Var<double> out, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> w(out.shape());
  for (double& x : w.values()) x = rng.uniform(-1.0, 1.0);
  return sum(mul(out, out.graph->constant(std::move(w))));
}

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (double& x : t.values()) x = rng.uniform(-scale, scale);
  return t;
}

}  // namespace dualabsa::testing
