#include "dualabsa/metrics.hpp"

#include <cstdio>

namespace dualabsa {

MetricReport report_from_counts(std::string name, std::size_t tp, std::size_t predicted, std::size_t gold) {
  if (tp > predicted || tp > gold) throw std::invalid_argument("true positives exceed predicted or gold count");
  MetricReport r;
  r.name = std::move(name);
  r.tp = tp;
  r.predicted = predicted;
  r.gold = gold;
  r.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  r.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

std::string_view to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::Aste: return "ASTE";
    case ScoreMode::Aesc: return "AESC";
    case ScoreMode::AspectExtraction: return "AE";
    case ScoreMode::OpinionExtraction: return "OE";
  }
  return "?";
}

namespace {

template <class T, class Member>
std::vector<std::set<T>> column(const std::vector<Decoded>& decoded, Member member) {
  std::vector<std::set<T>> out;
  out.reserve(decoded.size());
  for (const auto& d : decoded) out.push_back(d.*member);
  return out;
}

}  // namespace

MetricReport score(const std::vector<Decoded>& predicted, const std::vector<Decoded>& gold, ScoreMode mode) {
  const std::string name(to_string(mode));
  switch (mode) {
    case ScoreMode::Aste:
      return score_sets(name, column<Triplet>(predicted, &Decoded::triplets), column<Triplet>(gold, &Decoded::triplets));
    case ScoreMode::Aesc:
      return score_sets(name, column<AspectSentiment>(predicted, &Decoded::aspect_sentiments),
                        column<AspectSentiment>(gold, &Decoded::aspect_sentiments));
    case ScoreMode::AspectExtraction:
      return score_sets(name, column<Span>(predicted, &Decoded::aspects), column<Span>(gold, &Decoded::aspects));
    case ScoreMode::OpinionExtraction:
      return score_sets(name, column<Span>(predicted, &Decoded::opinions), column<Span>(gold, &Decoded::opinions));
  }
  throw std::invalid_argument("unknown score mode");
}

EvaluationReport evaluate(const std::vector<Decoded>& predicted, const std::vector<Decoded>& gold, Task task) {
  EvaluationReport report;
  report.task = task;
  report.rows.push_back(score(predicted, gold, task == Task::Aste ? ScoreMode::Aste : ScoreMode::Aesc));
  report.rows.push_back(score(predicted, gold, ScoreMode::AspectExtraction));
  report.rows.push_back(score(predicted, gold, ScoreMode::OpinionExtraction));
  return report;
}

std::string EvaluationReport::to_csv() const {
  std::string out = "metric,tp,pred,gold,precision,recall,f1\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", r.name.c_str(), r.tp, r.predicted, r.gold, r.precision,
                  r.recall, r.f1);
    out += line;
  }
  return out;
}

std::string EvaluationReport::to_table() const {
  std::string out = "metric      tp    pred    gold       P       R      F1\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %7zu %7zu %7zu %7.2f %7.2f %7.2f\n", r.name.c_str(), r.tp, r.predicted, r.gold,
                  100.0 * r.precision, 100.0 * r.recall, 100.0 * r.f1);
    out += line;
  }
  return out;
}

}  // namespace dualabsa
