#include "dualabsa/tagging.hpp"

#include <map>
#include <optional>
#include <stdexcept>

#include "dualabsa/errors.hpp"

namespace dualabsa {

Task parse_task(std::string_view text) {
  if (text == "aste" || text == "ASTE") return Task::Aste;
  if (text == "aesc" || text == "AESC") return Task::Aesc;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected aste or aesc)");
}

std::string_view to_string(Task task) { return task == Task::Aste ? "aste" : "aesc"; }

Polarity parse_polarity(std::string_view text) {
  if (text == "POS") return Polarity::Pos;
  if (text == "NEU") return Polarity::Neu;
  if (text == "NEG") return Polarity::Neg;
  throw std::invalid_argument("unknown polarity '" + std::string(text) + "'");
}

std::string_view to_string(Polarity polarity) {
  switch (polarity) {
    case Polarity::Pos: return "POS";
    case Polarity::Neu: return "NEU";
    case Polarity::Neg: return "NEG";
  }
  return "?";
}

std::string_view to_string(DiagLabel label) {
  switch (label) {
    case DiagLabel::O: return "O";
    case DiagLabel::BeginAspect: return "B-A";
    case DiagLabel::InsideAspect: return "I-A";
    case DiagLabel::BeginOpinion: return "B-O";
    case DiagLabel::InsideOpinion: return "I-O";
  }
  return "?";
}

std::string_view to_string(PairLabel label) {
  switch (label) {
    case PairLabel::None: return "NONE";
    case PairLabel::Pos: return "POS";
    case PairLabel::Neu: return "NEU";
    case PairLabel::Neg: return "NEG";
  }
  return "?";
}

std::string to_string(const Span& span) {
  return std::string(span.kind == SpanKind::Aspect ? "A" : "O") + "[" + std::to_string(span.start) + "," +
         std::to_string(span.end) + "]";
}

std::string to_string(const Triplet& t) {
  return "(" + to_string(t.aspect) + ", " + to_string(t.opinion) + ", " + std::string(to_string(t.polarity)) + ")";
}

std::string to_string(const AspectSentiment& p) {
  return "(" + to_string(p.aspect) + ", " + std::string(to_string(p.polarity)) + ")";
}

TagGrid::TagGrid(int n)
    : n_(n),
      diag_(static_cast<std::size_t>(n), DiagLabel::O),
      cells_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), PairLabel::None),
      diag_polarity_(static_cast<std::size_t>(n), PairLabel::None) {
  if (n < 0) throw std::invalid_argument("TagGrid size must be non-negative");
}

void TagGrid::check_cell(int i, int j) const {
  if (i < 0 || j >= n_ || j <= i)
    throw std::out_of_range("pair cell (" + std::to_string(i) + "," + std::to_string(j) + ") is not strictly above the diagonal of a " +
                            std::to_string(n_) + "x" + std::to_string(n_) + " grid");
}

PairLabel TagGrid::pair(int i, int j) const {
  check_cell(i, j);
  return cells_[static_cast<std::size_t>(i) * n_ + j];
}

void TagGrid::set_pair(int i, int j, PairLabel label) {
  check_cell(i, j);
  cells_[static_cast<std::size_t>(i) * n_ + j] = label;
}

std::pair<int, int> pair_cell(const Span& aspect, const Span& opinion) {
  return aspect.start < opinion.start ? std::pair{aspect.start, opinion.start} : std::pair{opinion.start, aspect.start};
}

namespace {

void check_bounds(int n, const Span& span) {
  if (span.start < 0 || span.end < span.start || span.end >= n)
    throw std::out_of_range("span " + to_string(span) + " outside sentence of length " + std::to_string(n));
}

/// Writes BIO labels for a span, refusing to overwrite a different span.
class DiagonalWriter {
 public:
  explicit DiagonalWriter(TagGrid& grid) : grid_(grid), owner_(static_cast<std::size_t>(grid.size())) {}

  void write(const Span& span) {
    check_bounds(grid_.size(), span);
    for (int i = span.start; i <= span.end; ++i) {
      const auto& existing = owner_[i];
      if (existing && *existing != span)
        throw EncodingConflict("spans " + to_string(*existing) + " and " + to_string(span) + " share token " + std::to_string(i));
    }
    const bool aspect = span.kind == SpanKind::Aspect;
    for (int i = span.start; i <= span.end; ++i) {
      owner_[i] = span;
      const bool begin = i == span.start;
      grid_.set_diag(i, aspect ? (begin ? DiagLabel::BeginAspect : DiagLabel::InsideAspect)
                               : (begin ? DiagLabel::BeginOpinion : DiagLabel::InsideOpinion));
    }
  }

 private:
  TagGrid& grid_;
  std::vector<std::optional<Span>> owner_;
};

}  // namespace

TagGrid encode_grid(int n, const std::vector<Triplet>& gold) {
  TagGrid grid(n);
  DiagonalWriter writer(grid);
  std::map<std::pair<int, int>, Triplet> claimed;
  for (const Triplet& t : gold) {
    if (t.aspect.kind != SpanKind::Aspect || t.opinion.kind != SpanKind::Opinion)
      throw std::invalid_argument("triplet " + to_string(t) + " has mislabelled span kinds");
    writer.write(t.aspect);
    writer.write(t.opinion);
    const auto cell = pair_cell(t.aspect, t.opinion);
    const PairLabel label = to_pair_label(t.polarity);
    if (auto it = claimed.find(cell); it != claimed.end()) {
      if (it->second.polarity != t.polarity)
        throw EncodingConflict("triplets " + to_string(it->second) + " and " + to_string(t) + " need different polarities at cell (" +
                               std::to_string(cell.first) + "," + std::to_string(cell.second) + ")");
      continue;
    }
    claimed.emplace(cell, t);
    grid.set_pair(cell.first, cell.second, label);
  }
  return grid;
}

TagGrid encode_grid(int n, const std::vector<AspectSentiment>& gold, const std::vector<Span>& opinions) {
  TagGrid grid(n);
  DiagonalWriter writer(grid);
  for (const Span& o : opinions) {
    if (o.kind != SpanKind::Opinion) throw std::invalid_argument("opinion list holds " + to_string(o));
    writer.write(o);
  }
  std::map<Span, AspectSentiment> claimed;
  for (const AspectSentiment& p : gold) {
    if (p.aspect.kind != SpanKind::Aspect) throw std::invalid_argument("aspect pair holds " + to_string(p.aspect));
    writer.write(p.aspect);
    if (auto it = claimed.find(p.aspect); it != claimed.end()) {
      if (it->second.polarity != p.polarity)
        throw EncodingConflict("pairs " + to_string(it->second) + " and " + to_string(p) + " give one aspect two polarities");
      continue;
    }
    claimed.emplace(p.aspect, p);
    if (p.aspect.length() == 1)
      grid.set_diag_polarity(p.aspect.start, to_pair_label(p.polarity));
    else
      grid.set_pair(p.aspect.start, p.aspect.end, to_pair_label(p.polarity));
  }
  return grid;
}

std::vector<Span> decode_spans(const std::vector<DiagLabel>& diag, BioRepair repair) {
  std::vector<Span> spans;
  std::optional<Span> open;
  auto close = [&] {
    if (open) spans.push_back(*open);
    open.reset();
  };
  for (int i = 0; i < static_cast<int>(diag.size()); ++i) {
    const DiagLabel label = diag[i];
    if (label == DiagLabel::O) {
      close();
      continue;
    }
    const SpanKind kind =
        (label == DiagLabel::BeginAspect || label == DiagLabel::InsideAspect) ? SpanKind::Aspect : SpanKind::Opinion;
    const bool begin = label == DiagLabel::BeginAspect || label == DiagLabel::BeginOpinion;
    if (!begin && open && open->kind == kind) {
      open->end = i;
      continue;
    }
    close();
    if (begin || repair == BioRepair::OrphanToBegin) open = Span{i, i, kind};
  }
  close();
  return spans;
}

Decoded decode_grid(const TagGrid& grid, Task task, BioRepair repair) {
  Decoded out;
  for (const Span& s : decode_spans(grid.diag_labels(), repair))
    (s.kind == SpanKind::Aspect ? out.aspects : out.opinions).insert(s);

  if (task == Task::Aste) {
    for (const Span& a : out.aspects)
      for (const Span& o : out.opinions) {
        const auto [r, c] = pair_cell(a, o);
        const PairLabel label = grid.pair(r, c);
        if (label != PairLabel::None) out.triplets.insert(Triplet{a, o, to_polarity(label)});
      }
  } else {
    for (const Span& a : out.aspects) {
      const PairLabel label = a.length() == 1 ? grid.diag_polarity(a.start) : grid.pair(a.start, a.end);
      if (label != PairLabel::None) out.aspect_sentiments.insert(AspectSentiment{a, to_polarity(label)});
    }
  }
  return out;
}

}  // namespace dualabsa
