#pragma once

#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dualabsa {

enum class Task { Aste, Aesc };

enum class SpanKind { Aspect, Opinion };

enum class Polarity { Pos, Neu, Neg };

/// Labels of the main diagonal.
enum class DiagLabel : int { O = 0, BeginAspect = 1, InsideAspect = 2, BeginOpinion = 3, InsideOpinion = 4 };

/// Labels of cells above the diagonal; class 0 is the trained "no pair" class.
enum class PairLabel : int { None = 0, Pos = 1, Neu = 2, Neg = 3 };

inline constexpr int kDiagLabelCount = 5;
inline constexpr int kPairLabelCount = 4;

/// What to do with an I-x tag that does not continue an x span.
enum class BioRepair { OrphanToBegin, DropOrphan };

/// Inclusive token range [start, end].
struct Span {
  int start = 0;
  int end = 0;
  SpanKind kind = SpanKind::Aspect;

  int length() const { return end - start + 1; }
  bool overlaps(const Span& other) const { return start <= other.end && other.start <= end; }
  auto operator<=>(const Span&) const = default;
};

struct Triplet {
  Span aspect;
  Span opinion;
  Polarity polarity = Polarity::Pos;
  auto operator<=>(const Triplet&) const = default;
};

struct AspectSentiment {
  Span aspect;
  Polarity polarity = Polarity::Pos;
  auto operator<=>(const AspectSentiment&) const = default;
};

Task parse_task(std::string_view text);
std::string_view to_string(Task task);
Polarity parse_polarity(std::string_view text);
std::string_view to_string(Polarity polarity);
std::string_view to_string(DiagLabel label);
std::string_view to_string(PairLabel label);
std::string to_string(const Span& span);
std::string to_string(const Triplet& triplet);
std::string to_string(const AspectSentiment& pair);

inline PairLabel to_pair_label(Polarity p) { return static_cast<PairLabel>(static_cast<int>(p) + 1); }
inline Polarity to_polarity(PairLabel label) { return static_cast<Polarity>(static_cast<int>(label) - 1); }

/// n x n label matrix: BIO/type labels on the diagonal and polarity labels
/// strictly above it. In AESC mode single-token aspects carry their polarity
/// in `diag_polarity`, since the diagonal itself holds BIO labels.
class TagGrid {
 public:
  explicit TagGrid(int n = 0);

  int size() const { return n_; }

  DiagLabel diag(int i) const { return diag_.at(i); }
  void set_diag(int i, DiagLabel label) { diag_.at(i) = label; }
  const std::vector<DiagLabel>& diag_labels() const { return diag_; }

  /// Cell (i, j), j > i.
  PairLabel pair(int i, int j) const;
  void set_pair(int i, int j, PairLabel label);

  PairLabel diag_polarity(int i) const { return diag_polarity_.at(i); }
  void set_diag_polarity(int i, PairLabel label) { diag_polarity_.at(i) = label; }

  bool operator==(const TagGrid&) const = default;

 private:
  void check_cell(int i, int j) const;

  int n_;
  std::vector<DiagLabel> diag_;
  std::vector<PairLabel> cells_;  // row-major n*n; only j > i is meaningful
  std::vector<PairLabel> diag_polarity_;
};

/// Cell that carries the polarity of an aspect/opinion pair: row is the
/// start of the earlier-starting span, column the start of the later one.
std::pair<int, int> pair_cell(const Span& aspect, const Span& opinion);

/// Gold ASTE triplets to a grid. Throws EncodingConflict when two spans of
/// different identity share a token or two triplets need different
/// polarities in one cell.
TagGrid encode_grid(int n, const std::vector<Triplet>& gold);

/// Gold AESC pairs (plus opinion spans for the diagonal) to a grid.
TagGrid encode_grid(int n, const std::vector<AspectSentiment>& gold, const std::vector<Span>& opinions);

/// BIO decoding of the diagonal into aspect and opinion spans.
std::vector<Span> decode_spans(const std::vector<DiagLabel>& diag, BioRepair repair = BioRepair::OrphanToBegin);

struct Decoded {
  std::set<Span> aspects;
  std::set<Span> opinions;
  std::set<Triplet> triplets;
  std::set<AspectSentiment> aspect_sentiments;
};

/// Inverse of encode_grid. ASTE emits a triplet for every (aspect, opinion)
/// span pair whose cell is not NONE; AESC reads each aspect's cell.
Decoded decode_grid(const TagGrid& grid, Task task, BioRepair repair = BioRepair::OrphanToBegin);

}  // namespace dualabsa
