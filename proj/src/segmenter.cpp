#include "menucsi/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "menucsi/text.hpp"

namespace menucsi {

void SegDictionary::add(std::string_view word, std::uint64_t frequency) {
  if (word.empty()) throw std::invalid_argument("dictionary word is empty");
  if (frequency == 0) throw std::invalid_argument("dictionary frequency must be >= 1: " + std::string(word));
  std::string key = text::nfc(word);
  auto& slot = freq_[key];
  total_ -= slot;
  slot = frequency;
  total_ += frequency;
  max_len_ = std::max(max_len_, text::length(key));
}

SegDictionary SegDictionary::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dictionary " + path.string());
  SegDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected word<TAB>frequency");
    }
    std::string word = line.substr(0, tab);
    std::uint64_t freq = 0;
    try {
      std::size_t used = 0;
      freq = std::stoull(line.substr(tab + 1), &used);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad frequency");
    }
    try {
      dict.add(word, freq);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dict;
}

std::uint64_t SegDictionary::frequency(std::string_view word) const {
  auto it = freq_.find(std::string(word));
  return it == freq_.end() ? 0 : it->second;
}

DictSegmenter::DictSegmenter(std::shared_ptr<const SegDictionary> dict)
    : dict_(std::move(dict)),
      log_total_(std::log(static_cast<double>(std::max<std::uint64_t>(dict_->total_tokens(), 1)))) {}

double DictSegmenter::word_log_prob(std::string_view word, std::size_t scalar_length) const {
  std::uint64_t f = dict_->frequency(word);
  if (f == 0) {
    if (scalar_length != 1) return -std::numeric_limits<double>::infinity();
    f = 1;
  }
  return std::log(static_cast<double>(f)) - log_total_;
}

TokenList DictSegmenter::precise_cut(std::string_view input) const {
  const std::u32string s = text::decode(input);
  const std::size_t n = s.size();
  if (n == 0) return {};

  // best[i]: optimum over s[i..n). Filled right to left so that each path
  // score is logp(first word) + best[rest].
  struct Cell {
    double score = 0.0;
    std::size_t tokens = 0;
    std::size_t next = 0;
  };
  std::vector<Cell> best(n + 1);
  best[n] = {0.0, 0, n};
  const std::size_t max_len = std::max<std::size_t>(dict_->max_word_length(), 1);

  for (std::size_t i = n; i-- > 0;) {
    Cell chosen{-std::numeric_limits<double>::infinity(), 0, i + 1};
    bool have = false;
    const std::size_t limit = std::min(n, i + max_len);
    // Longest candidate first so that on a full tie the longest first word is kept.
    for (std::size_t j = limit; j > i; --j) {
      const std::size_t len = j - i;
      std::string word = text::encode(std::u32string_view(s).substr(i, len));
      double lp = word_log_prob(word, len);
      if (std::isinf(lp)) continue;
      double score = lp + best[j].score;
      std::size_t tokens = best[j].tokens + 1;
      bool better = !have || score > chosen.score ||
                    (score == chosen.score && tokens < chosen.tokens);
      if (better) {
        chosen = {score, tokens, j};
        have = true;
      }
    }
    best[i] = chosen;
  }

  TokenList out;
  for (std::size_t i = 0; i < n; i = best[i].next) {
    const std::size_t len = best[i].next - i;
    out.push_back({text::encode(std::u32string_view(s).substr(i, len)), i, len});
  }
  return out;
}

TokenList DictSegmenter::search_cut(std::string_view input) const {
  const std::u32string s = text::decode(input);
  TokenList out = precise_cut(input);
  const std::size_t precise_count = out.size();
  for (std::size_t t = 0; t < precise_count; ++t) {
    const Token tok = out[t];
    if (tok.length < 2) continue;
    for (std::size_t i = tok.start; i < tok.end(); ++i) {
      for (std::size_t j = i + 1; j <= tok.end(); ++j) {
        const std::size_t len = j - i;
        if (len == tok.length) continue;  // the precise token itself
        std::string word = text::encode(std::u32string_view(s).substr(i, len));
        if (dict_->contains(word)) out.push_back({std::move(word), i, len});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Token& a, const Token& b) {
    return a.start != b.start ? a.start < b.start : a.length < b.length;
  });
  return out;
}

TokenList word_tokens(const TokenList& tokens) {
  TokenList out;
  for (const auto& t : tokens) {
    if (text::has_word_char(t.surface)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> surfaces(const TokenList& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace menucsi
