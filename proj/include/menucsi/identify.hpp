#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "menucsi/backends.hpp"
#include "menucsi/corpus.hpp"
#include "menucsi/segmenter.hpp"

namespace menucsi {

// Linear interpolation at rank pct/100 * (n - 1) of the sorted values.
double percentile_linear(std::vector<double> values, double pct);

// Word frequencies over a menu corpus and the cultural-uniqueness cutoff.
class FreqTable {
 public:
  static FreqTable from_counts(std::unordered_map<std::string, std::uint64_t> counts, double percentile = 95.0);

  std::uint64_t count(const std::string& word) const;
  // 1/frequency; words never seen in the corpus get 1.
  double inverse_frequency(const std::string& word) const;
  double cutoff() const { return cutoff_; }
  double percentile() const { return percentile_; }
  const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  double cutoff_ = 1.0;
  double percentile_ = 95.0;
};

// Counts precise-cut word tokens (tokens with a letter or digit) of every
// dish name. Throws std::invalid_argument on an empty corpus.
FreqTable build_freq_table(std::span<const MenuEntry> corpus, const Segmenter& segmenter,
                           double percentile = 95.0);

// flag = inverse_frequency(word) > cutoff (>= when `inclusive`).
std::vector<bool> cu_check(const std::vector<std::string>& words, const FreqTable& table, bool inclusive = false);

// Round-trip subtraction over search-cut tokens. A token survives when it is
// absent from the round-trip words and so is every search token nested inside
// its span. Returns one flag per search token.
std::vector<bool> rtt_survivors(const TokenList& search_tokens, const std::unordered_set<std::string>& rtt_words);

struct RttResult {
  std::string forward;      // zh -> en
  std::string round_trip;   // en -> zh
  std::vector<bool> flags;  // one per precise token of the dish name
  bool empty_round_trip = false;
};

// Forward and reverse clients should be distinct vendors.
RttResult rtt_check(const MenuEntry& entry, MtClient& forward, MtClient& reverse, const Segmenter& segmenter);

struct HsVote {
  bool flag = false;
  bool generic = false;
  WikiStatus status = WikiStatus::unknown;  // meaningless when generic

  std::string status_name() const;
};

// Words with a corpus count >= threshold are generic and never flagged.
// Otherwise a word is flagged if its own page, or the dish name's page, has a
// history section. Network failures vote false with status unknown.
std::vector<HsVote> hs_check(const std::vector<std::string>& words, std::string_view dish_name, WikiClient& wiki,
                             const FreqTable& generic_counts, std::uint64_t threshold = 30);

struct CheckSet {
  bool rtt = true;
  bool cu = true;
  bool hs = true;

  int enabled() const { return int(rtt) + int(cu) + int(hs); }
  bool operator==(const CheckSet&) const = default;
};

// Parses "rtt,cu,hs" (any non-empty subset). Throws std::invalid_argument.
CheckSet parse_checks(std::string_view list);
std::string format_checks(const CheckSet& checks);

// Strict majority of the enabled checks: 2 of 3, 2 of 2, 1 of 1.
bool combine_votes(bool rtt, bool cu, bool hs, const CheckSet& checks);

struct WordFlags {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  bool is_word = true;  // false for whitespace/punctuation tokens, which never vote
  bool rtt = false;
  bool cu = false;
  bool hs = false;
  // Wiki status name, "generic" for excluded words, "skipped" when not queried.
  std::string hs_status = "skipped";
  bool combined = false;

  bool operator==(const WordFlags&) const = default;
};

struct CsiPrediction {
  std::string entry_id;
  CheckSet checks;
  std::vector<WordFlags> words;
  std::vector<CsiSpan> spans;
  bool is_csi = false;
  std::string rtt_forward;
  std::string rtt_round_trip;
  std::vector<std::string> errors;

  bool operator==(const CsiPrediction&) const = default;
};

enum class FlagSource { combined, rtt, cu, hs };
std::string_view flag_source_name(FlagSource s);
bool flag_of(const WordFlags& w, FlagSource source);

// Maximal runs of consecutive words flagged under `source`, as character spans.
std::vector<CsiSpan> assemble_spans(const std::vector<WordFlags>& words, FlagSource source = FlagSource::combined);

struct IdentifyConfig {
  CheckSet checks;
  std::uint64_t generic_threshold = 30;
  bool inclusive_cutoff = false;
};

struct IdentifyContext {
  const Segmenter& segmenter;
  const FreqTable& table;
  MtClient* forward = nullptr;   // required when checks.rtt
  MtClient* reverse = nullptr;   // required when checks.rtt
  WikiClient* wiki = nullptr;    // required when checks.hs
  IdentifyConfig config;
};

// Runs the enabled checks per precise-cut word and votes. A check that throws
// contributes false votes and is recorded in `errors`.
CsiPrediction combined_identify(const MenuEntry& entry, IdentifyContext& ctx);

ojson to_json(const CsiPrediction& p);
CsiPrediction prediction_from_json(const ojson& j);
std::vector<CsiPrediction> load_predictions(const std::filesystem::path& path);
void save_predictions(std::span<const CsiPrediction> predictions, const std::filesystem::path& path);

}  // namespace menucsi
