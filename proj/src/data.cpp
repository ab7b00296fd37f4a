#include "dualabsa/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "dualabsa/errors.hpp"
#include "dualabsa/log.hpp"

namespace dualabsa {
namespace {

constexpr std::string_view kSeparator = "####";

/// Recursive-descent reader for the bracketed triplet list.
class TupleReader {
 public:
  TupleReader(std::string_view text, std::size_t line, std::size_t column_offset)
      : text_(text), line_(line), offset_(column_offset) {}

  struct RawTuple {
    std::vector<int> aspect;
    std::vector<int> opinion;
    std::string polarity;
    std::size_t column;
  };

  std::vector<RawTuple> read_list() {
    std::vector<RawTuple> tuples;
    expect('[');
    skip_space();
    if (peek() == ']') {
      ++pos_;
      finish();
      return tuples;
    }
    while (true) {
      tuples.push_back(read_tuple());
      skip_space();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      break;
    }
    finish();
    return tuples;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, offset_ + pos_ + 1); }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'" + (pos_ < text_.size() ? std::string(", found '") + peek() + "'" : ", found end of line"));
    ++pos_;
  }

  void finish() {
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters after triplet list");
  }

  RawTuple read_tuple() {
    skip_space();
    RawTuple t;
    t.column = offset_ + pos_ + 1;
    expect('(');
    t.aspect = read_indices();
    expect(',');
    t.opinion = read_indices();
    expect(',');
    t.polarity = read_quoted();
    expect(')');
    return t;
  }

  std::vector<int> read_indices() {
    std::vector<int> out;
    expect('[');
    skip_space();
    if (peek() == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      skip_space();
      const std::size_t begin = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (begin == pos_) fail("expected a token index");
      out.push_back(std::stoi(std::string(text_.substr(begin, pos_ - begin))));
      skip_space();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      return out;
    }
  }

  std::string read_quoted() {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected a quoted polarity");
    ++pos_;
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && text_[pos_] != quote) ++pos_;
    if (pos_ == text_.size()) fail("unterminated polarity string");
    std::string value(text_.substr(begin, pos_ - begin));
    ++pos_;
    return value;
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t offset_;
  std::size_t pos_ = 0;
};

Span make_span(const std::vector<int>& indices, SpanKind kind, int n, std::size_t line, std::size_t column) {
  const char* what = kind == SpanKind::Aspect ? "aspect" : "opinion";
  if (indices.empty()) throw ParseError(std::string("empty ") + what + " index list", line, column);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n)
      throw ParseError(std::string(what) + " index " + std::to_string(indices[i]) + " out of range for " + std::to_string(n) + " tokens",
                       line, column);
    if (i > 0 && indices[i] != indices[i - 1] + 1)
      throw ParseError(std::string("non-contiguous ") + what + " indices", line, column);
  }
  return Span{indices.front(), indices.back(), kind};
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view sentence) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(sentence)};
  for (std::string token; in >> token;) tokens.push_back(token);
  return tokens;
}

Example parse_line(std::string_view line, Task task, std::size_t line_number) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const std::size_t sep = line.find(kSeparator);
  if (sep == std::string_view::npos) throw ParseError("missing '####' separator", line_number);

  Example ex;
  ex.id = std::to_string(line_number);
  ex.tokens = split_tokens(line.substr(0, sep));
  if (ex.tokens.empty()) throw ParseError("empty sentence", line_number, 1);
  const int n = ex.size();

  const std::size_t list_offset = sep + kSeparator.size();
  TupleReader reader(line.substr(list_offset), line_number, list_offset);
  std::set<Triplet> seen_triplets;
  std::set<AspectSentiment> seen_aspects;
  std::set<Span> seen_opinions;
  for (const auto& raw : reader.read_list()) {
    Polarity polarity;
    try {
      polarity = parse_polarity(raw.polarity);
    } catch (const std::invalid_argument&) {
      throw ParseError("unknown polarity '" + raw.polarity + "'", line_number, raw.column);
    }
    const Span aspect = make_span(raw.aspect, SpanKind::Aspect, n, line_number, raw.column);
    if (task == Task::Aste) {
      const Span opinion = make_span(raw.opinion, SpanKind::Opinion, n, line_number, raw.column);
      const Triplet t{aspect, opinion, polarity};
      if (!seen_triplets.insert(t).second) {
        log::warn("line " + std::to_string(line_number) + ": duplicate triplet " + to_string(t) + " dropped");
        continue;
      }
      ex.triplets.push_back(t);
    } else {
      if (!raw.opinion.empty()) {
        const Span opinion = make_span(raw.opinion, SpanKind::Opinion, n, line_number, raw.column);
        if (seen_opinions.insert(opinion).second) ex.opinions.push_back(opinion);
      }
      const AspectSentiment p{aspect, polarity};
      if (seen_aspects.insert(p).second) ex.aspects.push_back(p);
    }
  }
  return ex;
}

std::vector<Example> parse_dataset_text(std::string_view text, Task task) {
  std::vector<Example> examples;
  std::size_t line_number = 0;
  while (!text.empty()) {
    ++line_number;
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    examples.push_back(parse_line(line, task, line_number));
  }
  return examples;
}

std::vector<Example> parse_dataset(const std::filesystem::path& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset_text(buffer.str(), task);
}

namespace {

std::string format_indices(const Span& s) {
  std::string out = "[";
  for (int i = s.start; i <= s.end; ++i) out += (i > s.start ? ", " : "") + std::to_string(i);
  return out + "]";
}

}  // namespace

std::string format_line(const Example& example, Task task) {
  std::string out;
  for (std::size_t i = 0; i < example.tokens.size(); ++i) out += (i ? " " : "") + example.tokens[i];
  out += kSeparator;
  out += "[";
  bool first = true;
  auto emit = [&](const std::string& aspect, const std::string& opinion, Polarity p) {
    out += (first ? "" : ", ") + std::string("(") + aspect + ", " + opinion + ", '" + std::string(to_string(p)) + "')";
    first = false;
  };
  if (task == Task::Aste) {
    for (const auto& t : example.triplets) emit(format_indices(t.aspect), format_indices(t.opinion), t.polarity);
  } else {
    for (const auto& a : example.aspects) emit(format_indices(a.aspect), "[]", a.polarity);
  }
  return out + "]";
}

TagGrid encode_example(const Example& example, Task task) {
  return task == Task::Aste ? encode_grid(example.size(), example.triplets)
                            : encode_grid(example.size(), example.aspects, example.opinions);
}

Decoded gold_view(const Example& example, Task task) {
  Decoded d;
  if (task == Task::Aste) {
    for (const auto& t : example.triplets) {
      d.aspects.insert(t.aspect);
      d.opinions.insert(t.opinion);
      d.triplets.insert(t);
    }
  } else {
    for (const auto& a : example.aspects) {
      d.aspects.insert(a.aspect);
      d.aspect_sentiments.insert(a);
    }
    d.opinions.insert(example.opinions.begin(), example.opinions.end());
  }
  return d;
}

CorpusStats corpus_stats(const std::vector<Example>& examples, Task task) {
  CorpusStats stats;
  stats.sentences = examples.size();
  for (const auto& ex : examples) {
    const Decoded d = gold_view(ex, task);
    stats.triplets += task == Task::Aste ? ex.triplets.size() : ex.aspects.size();
    stats.aspects += d.aspects.size();
    stats.opinions += d.opinions.size();
  }
  return stats;
}

}  // namespace dualabsa
