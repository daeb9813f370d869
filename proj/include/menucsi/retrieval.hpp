#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "menucsi/corpus.hpp"
#include "menucsi/segmenter.hpp"

namespace menucsi {

// Name and instructions concatenated and cut into words.
struct RecipeDoc {
  std::string recipe_id;
  std::vector<std::string> tokens;
  std::size_t length = 0;
};

struct IndexStats {
  std::size_t doc_count = 0;
  double avg_len = 0.0;
  std::unordered_map<std::string, std::size_t> df;
  double k1 = 1.5;
  double b = 0.75;
};

struct DishQuery {
  std::vector<std::string> dish_tokens;
  std::vector<std::string> span_tokens;
};

struct RetrievalConfig {
  double w_dish = 5.0;
  double w_span = 3.0;
  double dish_multiplier = 3.0;
  double alpha = 0.1;  // length-penalty strength
  double k1 = 1.5;
  double b = 0.75;
};

// Throws std::invalid_argument unless every weight is positive.
void validate(const RetrievalConfig& config);

// Words of the dish name, and the words overlapping any CSI span.
DishQuery make_query(const std::string& dish_name, std::span<const CsiSpan> spans, const Segmenter& segmenter);

// 1 / (1 + alpha * |length - avg_len| / avg_len).
double length_penalty(std::size_t length, double avg_len, double alpha);

// Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t doc_count, std::size_t df);

class RecipeIndex {
 public:
  // Throws std::invalid_argument on an empty corpus.
  static RecipeIndex build(std::span<const Recipe> recipes, const Segmenter& segmenter,
                           const RetrievalConfig& config = {});

  const std::vector<RecipeDoc>& docs() const { return docs_; }
  const IndexStats& stats() const { return stats_; }
  const RetrievalConfig& config() const { return config_; }
  const Recipe* recipe(const std::string& id) const;

  // Sums the weighted BM25 contribution of each distinct document word that
  // matches the query. A document holding every dish word is scored against
  // the dish name (weight w_dish * dish_multiplier, span-only words w_span);
  // otherwise only span words count, at w_span. The sum is scaled by the
  // length penalty.
  double score(const DishQuery& query, const RecipeDoc& doc) const;

  struct Hit {
    std::string recipe_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
  };
  struct Ranking {
    std::vector<Hit> hits;
    bool no_match = false;  // every document scored 0
  };

  // Descending score, ties by recipe id.
  Ranking retrieve_top(const DishQuery& query, std::size_t k = 1) const;

 private:
  double score_terms(const DishQuery& query, std::size_t length,
                     const std::unordered_map<std::string, std::size_t>& tf) const;

  std::vector<RecipeDoc> docs_;
  std::vector<Recipe> recipes_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::unordered_map<std::string, std::size_t>> tf_;
  IndexStats stats_;
  RetrievalConfig config_;
};

struct RetrievalRecord {
  std::string entry_id;
  std::string recipe_id;
  double score = 0.0;
  std::size_t rank = 1;
  bool no_match = false;

  bool operator==(const RetrievalRecord&) const = default;
};

ojson to_json(const RetrievalRecord& r);
std::vector<RetrievalRecord> load_retrievals(const std::filesystem::path& path);
void save_retrievals(std::span<const RetrievalRecord> records, const std::filesystem::path& path);

}  // namespace menucsi
