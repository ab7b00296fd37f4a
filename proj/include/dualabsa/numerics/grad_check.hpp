#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "dualabsa/numerics/graph.hpp"

namespace dualabsa {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  Index elements_checked = 0;
  /// Elements whose stencil [t-h, t+h] straddles a kink (ReLU, max): the
  /// central difference misses but a one-sided difference matches.
  Index kink_elements = 0;
  bool passed = false;
};

/// Builds a scalar loss on the given graph from parameters in a store.
using LossBuilder = std::function<Var<double>(Graph<double>&)>;

/// Compares analytic gradients with central differences (f(t+h) - f(t-h)) / 2h
/// for every element of every trainable parameter. The relative error of an
/// element is |a - n| / max(|a|, |n|, denominator_floor); the floor keeps
/// roundoff on near-zero gradients from reading as a large relative error.
///
/// Piecewise-linear ops make the loss non-smooth. When a kink lies within h
/// of t the central difference averages two slopes; such an element is then
/// judged against the better of the one-sided differences (f(t) - f(t-h)) / h
/// and (f(t+h) - f(t)) / h, one of which sees no kink, and counted in
/// kink_elements.
/// The loss must be deterministic: graphs that drew dropout masks are rejected.
inline GradCheckReport grad_check(const LossBuilder& f, ParamStore<double>& params, double h, double tol,
                                  double denominator_floor = 1e-6) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step h must be positive");

  auto evaluate = [&](bool with_backward) {
    Graph<double> g(false);
    Var<double> loss = f(g);
    if (g.stochastic()) throw std::invalid_argument("grad_check: loss uses stochastic ops; run in deterministic eval mode");
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw NumericError("grad_check: loss is not finite");
    if (with_backward) g.backward(loss);
    return value;
  };

  params.zero_grad();
  const double base = evaluate(true);

  GradCheckReport report;
  for (auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    auto values = entry.value.values();
    auto grads = entry.grad.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = evaluate(false);
      values[i] = saved - h;
      const double down = evaluate(false);
      values[i] = saved;
      const double analytic = grads[i];
      auto rel_to = [&](double numeric) {
        return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), denominator_floor});
      };
      double numeric = (up - down) / (2.0 * h);
      double rel = rel_to(numeric);
      if (rel > tol) {
        for (const double one_sided : {(base - down) / h, (up - base) / h})
          if (rel_to(one_sided) < rel) {
            rel = rel_to(one_sided);
            numeric = one_sided;
          }
        if (rel <= tol) ++report.kink_elements;
      }
      ++report.elements_checked;
      if (rel > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = rel;
        report.worst_param = entry.name;
        report.worst_index = static_cast<Index>(i);
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace dualabsa
