#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualabsa/data.hpp"
#include "dualabsa/numerics/tensor.hpp"
#include "dualabsa/rng.hpp"
#include "dualabsa/vocab.hpp"

namespace dualabsa {

/// Vectors read from a `token v1 ... v_dim` text file, keyed by lowercased token.
struct WordVectors {
  int dim = 0;
  std::unordered_map<std::string, std::vector<double>> rows;
};

/// Parses the word-vector text format. A first line with the wrong number of
/// values is a ConfigError (the file has another dimension); a later one is a
/// ParseError with its line number. Repeated tokens keep the first row.
WordVectors read_word_vectors(const std::filesystem::path& path, int dim);

struct WordTable {
  MatrixX<double> table;      // |V| x dim
  std::size_t from_file = 0;  // rows copied from the file
};

/// |V| x dim table: file rows where present, PAD row zero, others uniform in
/// [-oov_range, oov_range].
WordTable build_word_table(const WordVectors& vectors, const Vocab& vocab, Rng& rng, double oov_range = 0.1);

WordTable load_word_embeddings(const std::filesystem::path& path, int dim, const Vocab& vocab, Rng& rng);

/// Contextual vectors keyed by example id. Record format:
/// `id<TAB>n<TAB>p` followed by n lines of p values.
using ContextualVectors = std::map<std::string, MatrixX<double>>;

ContextualVectors load_contextual(const std::filesystem::path& path);

/// Attaches a matrix to every example; a missing id or row-count mismatch is
/// an AlignmentError naming the example. Returns the shared dimension p.
int attach_contextual(std::vector<Example>& examples, const ContextualVectors& vectors);

void write_contextual(const std::filesystem::path& path, const std::vector<Example>& examples);

}  // namespace dualabsa
