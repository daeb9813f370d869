#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "menucsi/corpus.hpp"
#include "menucsi/identify.hpp"
#include "menucsi/jsonl.hpp"

namespace menucsi {

// Harmonic mean of two percentages; 0 when both are 0.
double f1(double precision, double recall);

struct Prf {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;  // percentages

  static Prf from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

enum class MatchMode { token, exact_span };
std::string_view match_mode_name(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

// Consensus of several annotators over one entry. Unlike CsiAnnotation, a
// positive label may carry no consensus span.
struct GoldEntry {
  std::string entry_id;
  CsiLabel label = CsiLabel::NonCsi;
  std::vector<CsiSpan> spans;
};

// Per entry: the label chosen by a strict majority of its annotators, and the
// characters covered by a strict majority of them, merged into runs. Entries
// without a majority label are left out.
std::vector<GoldEntry> consensus_gold(std::span<const CsiAnnotation> annotations);

struct SpanEvalResult {
  std::array<Prf, 3> by_category;  // CSI-1, CSI-2, CSI-3
  Prf overall;                     // micro over the three categories
  MatchMode mode = MatchMode::token;
};

// Words are the precise-cut tokens stored on each prediction. Token mode counts
// words overlapping a predicted vs a gold span; exact-span mode counts spans
// with identical boundaries. Non-CSI gold entries are not counted. Throws
// std::invalid_argument for a prediction whose entry has no gold.
SpanEvalResult span_prf(std::span<const CsiPrediction> predicted, std::span<const GoldEntry> gold,
                        FlagSource source = FlagSource::combined, MatchMode mode = MatchMode::token);

enum class AgreementKind { cohen, fleiss };

struct AgreementResult {
  double kappa = 0;
  AgreementKind kind = AgreementKind::cohen;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
};

// Throws std::invalid_argument on unequal lengths or empty input. When the
// expected agreement is 1, kappa is 1 for identical sequences and 0 otherwise.
AgreementResult cohen_kappa(std::span<const int> a, std::span<const int> b);

// items x categories count matrix; every row must sum to the same n >= 2.
AgreementResult fleiss_kappa(const std::vector<std::vector<int>>& counts);

enum class AgreementLevel { category, binary };

// Count matrix over entries rated by every annotator present in the file.
// Columns are labels 0..3 (category) or {non-CSI, CSI} (binary).
std::vector<std::vector<int>> rating_matrix(std::span<const CsiAnnotation> annotations, AgreementLevel level,
                                            std::vector<std::string>* entry_ids = nullptr);

struct PairwiseKappa {
  std::string annotator_a;
  std::string annotator_b;
  AgreementResult result;
};

// Cohen's kappa for every annotator pair over the entries both labelled.
std::vector<PairwiseKappa> pairwise_cohen(std::span<const CsiAnnotation> annotations, AgreementLevel level);

struct ScoreRecord {
  std::string entry_id;
  std::string strategy;
  double score = 0;
  int category = 1;

  bool operator==(const ScoreRecord&) const = default;
};

ojson to_json(const ScoreRecord& r);
std::vector<ScoreRecord> load_scores(const std::filesystem::path& path);
void save_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path);

struct ScoreRow {
  std::string strategy;
  std::array<double, 3> mean{};
  std::array<std::size_t, 3> n{};
  double overall = 0;
  std::array<double, 3> delta{};
  double delta_overall = 0;
};

struct ScoreTable {
  std::string baseline;
  std::vector<ScoreRow> rows;  // baseline first, then known strategies in enum order, then others by id
};

// Arithmetic mean of the three category means.
double overall_of(const std::array<double, 3>& category_means);

// Throws std::invalid_argument when the baseline is missing, a category is
// outside 1..3, or a strategy has no score in some category.
ScoreTable aggregate_scores(std::span<const ScoreRecord> scores, const std::string& baseline_strategy);

std::string render_text(const ScoreTable& table);
std::string render_text(std::span<const std::pair<std::string, SpanEvalResult>> rows);

// Long-format CSV: table,row,column,metric,value
struct CsvReport {
  std::vector<std::array<std::string, 5>> rows;

  void add(const ScoreTable& table);
  void add(const std::string& method, const SpanEvalResult& result);
  std::string str() const;
};

}  // namespace menucsi
