#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualabsa/tagging.hpp"

namespace dualabsa {

/// Exact-match precision/recall/F1 with the underlying counts.
struct MetricReport {
  std::string name;
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = tp/pred, R = tp/gold (0 when the denominator is 0); F1 = 0 when P+R = 0.
MetricReport report_from_counts(std::string name, std::size_t tp, std::size_t predicted, std::size_t gold);

/// Micro-averaged exact match over per-example prediction/gold sets.
template <class T>
MetricReport score_sets(std::string name, const std::vector<std::set<T>>& predicted, const std::vector<std::set<T>>& gold) {
  if (predicted.size() != gold.size())
    throw std::invalid_argument("score: " + std::to_string(predicted.size()) + " predictions for " + std::to_string(gold.size()) +
                                " gold examples");
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t e = 0; e < gold.size(); ++e) {
    n_pred += predicted[e].size();
    n_gold += gold[e].size();
    for (const T& item : predicted[e]) tp += gold[e].count(item);
  }
  return report_from_counts(std::move(name), tp, n_pred, n_gold);
}

enum class ScoreMode { Aste, Aesc, AspectExtraction, OpinionExtraction };

std::string_view to_string(ScoreMode mode);

MetricReport score(const std::vector<Decoded>& predicted, const std::vector<Decoded>& gold, ScoreMode mode);

/// Task metric first, followed by the AE and OE breakdown.
struct EvaluationReport {
  Task task = Task::Aste;
  std::vector<MetricReport> rows;

  const MetricReport& main() const { return rows.front(); }
  std::string to_csv() const;
  std::string to_table() const;
};

EvaluationReport evaluate(const std::vector<Decoded>& predicted, const std::vector<Decoded>& gold, Task task);

}  // namespace dualabsa
