#include "dualabsa/vocab.hpp"

#include <cctype>
#include <stdexcept>

namespace dualabsa {

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= text.size()) {
      out.push_back(U'�');
      break;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto byte = static_cast<unsigned char>(text[i + k]);
      if ((byte & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (byte & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Vocab::Vocab() {
  add_word("<pad>");
  add_word("<unk>");
  add_char(U'\0');
  add_char(U'￿');
}

Vocab Vocab::build(const std::vector<const std::vector<Example>*>& corpora) {
  Vocab v;
  for (const auto* corpus : corpora)
    for (const auto& ex : *corpus)
      for (const auto& token : ex.tokens) {
        v.add_word(token);
        for (char32_t c : decode_utf8(token)) v.add_char(c);
      }
  return v;
}

Vocab Vocab::from_lists(const std::vector<std::string>& words, const std::u32string& chars) {
  Vocab v;
  if (words.size() < 2 || words[0] != v.words_[0] || words[1] != v.words_[1] || chars.size() < 2 || chars.substr(0, 2) != v.chars_)
    throw std::invalid_argument("vocabulary lists lack the reserved PAD/UNK entries");
  for (std::size_t i = 2; i < words.size(); ++i)
    if (v.add_word(words[i]) != static_cast<int>(i)) throw std::invalid_argument("duplicate or non-lowercase word '" + words[i] + "'");
  for (std::size_t i = 2; i < chars.size(); ++i)
    if (v.add_char(chars[i]) != static_cast<int>(i)) throw std::invalid_argument("duplicate character in vocabulary");
  return v;
}

int Vocab::add_word(std::string_view token) {
  std::string key = lowercase(token);
  if (auto it = word_ids_.find(key); it != word_ids_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.push_back(key);
  word_ids_.emplace(std::move(key), id);
  return id;
}

int Vocab::add_char(char32_t c) {
  if (auto it = char_ids_.find(c); it != char_ids_.end()) return it->second;
  const int id = static_cast<int>(chars_.size());
  chars_.push_back(c);
  char_ids_.emplace(c, id);
  return id;
}

int Vocab::word_index(std::string_view token) const {
  auto it = word_ids_.find(lowercase(token));
  return it == word_ids_.end() ? kUnk : it->second;
}

int Vocab::char_index(char32_t c) const {
  auto it = char_ids_.find(c);
  return it == char_ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::word_indices(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(word_index(t));
  return ids;
}

std::vector<std::vector<int>> Vocab::char_indices(const std::vector<std::string>& tokens) const {
  std::vector<std::vector<int>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    std::vector<int> ids;
    for (char32_t c : decode_utf8(t)) ids.push_back(char_index(c));
    if (ids.empty()) ids.push_back(kPad);
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace dualabsa
