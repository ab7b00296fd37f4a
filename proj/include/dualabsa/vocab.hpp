#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualabsa/data.hpp"

namespace dualabsa {

/// UTF-8 to codepoints; malformed bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// ASCII lowercasing; multi-byte sequences pass through unchanged.
std::string lowercase(std::string_view text);

/// Dense word and character indices. Word lookup is case-insensitive;
/// characters keep their case.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();

  /// Every token and character of the given corpora.
  static Vocab build(const std::vector<const std::vector<Example>*>& corpora);

  /// Rebuilds a vocabulary from its ordered entries (as saved in a checkpoint).
  /// Throws std::invalid_argument on duplicates or missing reserved entries.
  static Vocab from_lists(const std::vector<std::string>& words, const std::u32string& chars);

  int add_word(std::string_view token);
  int add_char(char32_t c);

  int word_index(std::string_view token) const;
  int char_index(char32_t c) const;

  std::vector<int> word_indices(const std::vector<std::string>& tokens) const;
  /// Char ids per token; an empty token becomes a single PAD.
  std::vector<std::vector<int>> char_indices(const std::vector<std::string>& tokens) const;

  std::size_t word_count() const { return words_.size(); }
  std::size_t char_count() const { return chars_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::u32string& chars() const { return chars_; }

  bool operator==(const Vocab& other) const { return words_ == other.words_ && chars_ == other.chars_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> word_ids_;
  std::u32string chars_;
  std::unordered_map<char32_t, int> char_ids_;
};

}  // namespace dualabsa
