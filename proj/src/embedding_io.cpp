#include "dualabsa/embedding_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dualabsa/errors.hpp"
#include "dualabsa/log.hpp"

namespace dualabsa {
namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t begin = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > begin) out.push_back(line.substr(begin, i - begin));
  }
  return out;
}

double parse_double(std::string_view text, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError("'" + std::string(text) + "' is not a number", line);
  return value;
}

std::ifstream open(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + " " + path.string());
  return in;
}

}  // namespace

WordVectors read_word_vectors(const std::filesystem::path& path, int dim) {
  if (dim <= 0) throw ConfigError("word embedding dim must be positive");
  WordVectors out;
  out.dim = dim;
  auto in = open(path, "word embeddings");
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_lines = 0;
  std::size_t repeats = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto parts = fields(line);
    if (parts.empty()) continue;
    const auto values = static_cast<int>(parts.size()) - 1;
    if (values != dim) {
      if (data_lines == 0)
        throw ConfigError("embedding file " + path.string() + " has dimension " + std::to_string(values) + ", configured " +
                          std::to_string(dim));
      throw ParseError("expected " + std::to_string(dim) + " values after the token, found " + std::to_string(values), line_no);
    }
    ++data_lines;
    std::string key = lowercase(parts[0]);
    if (out.rows.contains(key)) {
      ++repeats;
      continue;
    }
    std::vector<double> row(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) row[k] = parse_double(parts[k + 1], line_no);
    out.rows.emplace(std::move(key), std::move(row));
  }
  if (data_lines == 0) log::warn("embedding file " + path.string() + " is empty; all word vectors are randomly initialized");
  if (repeats > 0) log::warn(std::to_string(repeats) + " repeated token(s) in " + path.string() + "; first occurrence kept");
  return out;
}

WordTable build_word_table(const WordVectors& vectors, const Vocab& vocab, Rng& rng, double oov_range) {
  WordTable out;
  const auto rows = static_cast<Index>(vocab.word_count());
  out.table = MatrixX<double>::Zero(rows, vectors.dim);
  for (Index r = 0; r < rows; ++r) {
    if (r == Vocab::kPad) continue;
    if (auto it = vectors.rows.find(vocab.words()[r]); it != vectors.rows.end()) {
      for (int k = 0; k < vectors.dim; ++k) out.table(r, k) = it->second[k];
      ++out.from_file;
    } else {
      for (int k = 0; k < vectors.dim; ++k) out.table(r, k) = rng.uniform(-oov_range, oov_range);
    }
  }
  return out;
}

WordTable load_word_embeddings(const std::filesystem::path& path, int dim, const Vocab& vocab, Rng& rng) {
  return build_word_table(read_word_vectors(path, dim), vocab, rng);
}

ContextualVectors load_contextual(const std::filesystem::path& path) {
  auto in = open(path, "contextual vectors");
  ContextualVectors out;
  std::string line;
  std::size_t line_no = 0;
  Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto header = fields(line);
    if (header.empty()) continue;
    if (header.size() != 3) throw ParseError("expected header 'id<TAB>n<TAB>p'", line_no);
    const std::string id(header[0]);
    const auto n = static_cast<Index>(parse_double(header[1], line_no));
    const auto p = static_cast<Index>(parse_double(header[2], line_no));
    if (n <= 0 || p <= 0) throw ParseError("record sizes must be positive", line_no);
    if (width >= 0 && p != width)
      throw ParseError("record '" + id + "' has dimension " + std::to_string(p) + ", earlier records " + std::to_string(width), line_no);
    width = p;
    if (out.contains(id)) throw ParseError("duplicate record id '" + id + "'", line_no);
    MatrixX<double> m(n, p);
    for (Index r = 0; r < n; ++r) {
      if (!std::getline(in, line)) throw ParseError("record '" + id + "' ends after " + std::to_string(r) + " of " + std::to_string(n) + " rows", line_no);
      ++line_no;
      const auto values = fields(line);
      if (static_cast<Index>(values.size()) != p)
        throw ParseError("expected " + std::to_string(p) + " values, found " + std::to_string(values.size()), line_no);
      for (Index k = 0; k < p; ++k) m(r, k) = parse_double(values[k], line_no);
    }
    out.emplace(id, std::move(m));
  }
  return out;
}

int attach_contextual(std::vector<Example>& examples, const ContextualVectors& vectors) {
  int width = 0;
  for (auto& ex : examples) {
    auto it = vectors.find(ex.id);
    if (it == vectors.end()) throw AlignmentError("example " + ex.id + " has no contextual vectors");
    if (it->second.rows() != ex.size())
      throw AlignmentError("example " + ex.id + " has " + std::to_string(ex.size()) + " tokens but " +
                           std::to_string(it->second.rows()) + " contextual vectors");
    width = static_cast<int>(it->second.cols());
    ex.contextual = it->second;
  }
  return width;
}

void write_contextual(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[40];
  for (const auto& ex : examples) {
    if (!ex.contextual) continue;
    const auto& m = *ex.contextual;
    out << ex.id << '\t' << m.rows() << '\t' << m.cols() << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index k = 0; k < m.cols(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, k));
        out << (k ? " " : "") << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace dualabsa
