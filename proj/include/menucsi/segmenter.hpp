#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace menucsi {

struct Token {
  std::string surface;
  std::size_t start = 0;   // scalar offset into the segmented text
  std::size_t length = 0;  // in scalars

  std::size_t end() const { return start + length; }
  bool operator==(const Token&) const = default;
};

using TokenList = std::vector<Token>;

// Word -> corpus frequency. Immutable once built.
class SegDictionary {
 public:
  SegDictionary() = default;

  // Throws std::invalid_argument on a non-positive frequency or empty word.
  void add(std::string_view word, std::uint64_t frequency);

  // TSV `word<TAB>frequency`, UTF-8. '#' starts a comment line.
  static SegDictionary load_tsv(const std::filesystem::path& path);

  std::uint64_t frequency(std::string_view word) const;  // 0 if absent
  bool contains(std::string_view word) const { return frequency(word) > 0; }
  std::uint64_t total_tokens() const { return total_; }
  std::size_t max_word_length() const { return max_len_; }
  std::size_t size() const { return freq_.size(); }
  const std::unordered_map<std::string, std::uint64_t>& entries() const { return freq_; }

 private:
  std::unordered_map<std::string, std::uint64_t> freq_;
  std::uint64_t total_ = 0;
  std::size_t max_len_ = 0;
};

// Abstract word segmenter; identification and retrieval only see this contract.
class Segmenter {
 public:
  virtual ~Segmenter() = default;

  // Tokens tile the input exactly.
  virtual TokenList precise_cut(std::string_view text) const = 0;

  // Precise tokens plus every dictionary word inside a multi-character
  // precise token, ordered by (start, length).
  virtual TokenList search_cut(std::string_view text) const = 0;
};

// Maximum-probability path over the dictionary word lattice. Each candidate
// word w scores log(freq(w) / total); characters outside the dictionary fall
// back to single-character tokens with frequency 1. Ties prefer fewer tokens,
// then the longest first word.
class DictSegmenter final : public Segmenter {
 public:
  explicit DictSegmenter(std::shared_ptr<const SegDictionary> dict);

  TokenList precise_cut(std::string_view text) const override;
  TokenList search_cut(std::string_view text) const override;

  const SegDictionary& dictionary() const { return *dict_; }

  // Score of a single lattice edge; exposed so test oracles score identically.
  double word_log_prob(std::string_view word, std::size_t scalar_length) const;

 private:
  std::shared_ptr<const SegDictionary> dict_;
  double log_total_;
};

// Tokens that carry a letter or digit (drops whitespace and punctuation).
TokenList word_tokens(const TokenList& tokens);

std::vector<std::string> surfaces(const TokenList& tokens);

}  // namespace menucsi
