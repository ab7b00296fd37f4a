#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualabsa/numerics/tensor.hpp"
#include "dualabsa/tagging.hpp"

namespace dualabsa {

/// One annotated sentence. ASTE gold lives in `triplets`; AESC gold in
/// `aspects` plus the unpaired `opinions` used for the diagonal.
struct Example {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Triplet> triplets;
  std::vector<AspectSentiment> aspects;
  std::vector<Span> opinions;
  std::optional<MatrixX<double>> contextual;  // n x p, precomputed per token

  int size() const { return static_cast<int>(tokens.size()); }
};

/// Parses `tokens ####[([a...], [o...], 'POL'), ...]` lines. Example ids are
/// 1-based line numbers; blank lines are skipped.
std::vector<Example> parse_dataset(const std::filesystem::path& path, Task task);
std::vector<Example> parse_dataset_text(std::string_view text, Task task);
Example parse_line(std::string_view line, Task task, std::size_t line_number);

/// Writes an example back in the dataset line format.
std::string format_line(const Example& example, Task task);

std::vector<std::string> split_tokens(std::string_view sentence);

TagGrid encode_example(const Example& example, Task task);

/// Gold annotation viewed the same way decode_grid presents predictions.
Decoded gold_view(const Example& example, Task task);

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t triplets = 0;  // ASTE triplets or AESC aspect-sentiment pairs
  std::size_t aspects = 0;
  std::size_t opinions = 0;
};

CorpusStats corpus_stats(const std::vector<Example>& examples, Task task);

}  // namespace dualabsa
