#include "menucsi/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json_fields.hpp"

namespace menucsi {

void validate(const RetrievalConfig& c) {
  if (!(c.w_dish > 0 && c.w_span > 0 && c.dish_multiplier > 0)) {
    throw std::invalid_argument("retrieval weights must be positive");
  }
  if (!(c.alpha >= 0 && c.k1 > 0 && c.b >= 0 && c.b <= 1)) {
    throw std::invalid_argument("retrieval parameters out of range (alpha >= 0, k1 > 0, 0 <= b <= 1)");
  }
}

DishQuery make_query(const std::string& dish_name, std::span<const CsiSpan> spans, const Segmenter& segmenter) {
  DishQuery q;
  for (const auto& t : word_tokens(segmenter.precise_cut(dish_name))) {
    q.dish_tokens.push_back(t.surface);
    for (const auto& s : spans) {
      if (t.start < s.end && s.start < t.end()) {
        q.span_tokens.push_back(t.surface);
        break;
      }
    }
  }
  return q;
}

double length_penalty(std::size_t length, double avg_len, double alpha) {
  const double deviation = std::abs(static_cast<double>(length) - avg_len) / avg_len;
  return 1.0 / (1.0 + alpha * deviation);
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

RecipeIndex RecipeIndex::build(std::span<const Recipe> recipes, const Segmenter& segmenter,
                               const RetrievalConfig& config) {
  if (recipes.empty()) throw std::invalid_argument("cannot index an empty recipe corpus");
  validate(config);
  RecipeIndex idx;
  idx.config_ = config;
  idx.stats_.k1 = config.k1;
  idx.stats_.b = config.b;
  std::size_t total = 0;
  for (const auto& r : recipes) {
    RecipeDoc doc;
    doc.recipe_id = r.id;
    for (const auto& t : word_tokens(segmenter.precise_cut(r.name + "\n" + r.instructions))) {
      doc.tokens.push_back(t.surface);
    }
    doc.length = doc.tokens.size();
    total += doc.length;

    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& w : doc.tokens) ++tf[w];
    for (const auto& [w, _] : tf) ++idx.stats_.df[w];

    if (!idx.by_id_.emplace(r.id, idx.docs_.size()).second) {
      throw std::invalid_argument("duplicate recipe id " + r.id);
    }
    idx.tf_.push_back(std::move(tf));
    idx.docs_.push_back(std::move(doc));
    idx.recipes_.push_back(r);
  }
  idx.stats_.doc_count = idx.docs_.size();
  idx.stats_.avg_len = static_cast<double>(total) / static_cast<double>(idx.docs_.size());
  return idx;
}

const Recipe* RecipeIndex::recipe(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &recipes_[it->second];
}

double RecipeIndex::score(const DishQuery& query, const RecipeDoc& doc) const {
  std::unordered_map<std::string, std::size_t> tf;
  for (const auto& w : doc.tokens) ++tf[w];
  return score_terms(query, doc.length, tf);
}

double RecipeIndex::score_terms(const DishQuery& query, std::size_t length,
                                const std::unordered_map<std::string, std::size_t>& tf) const {
  if (stats_.avg_len <= 0.0) return 0.0;
  const std::unordered_set<std::string> dish(query.dish_tokens.begin(), query.dish_tokens.end());
  const std::unordered_set<std::string> span(query.span_tokens.begin(), query.span_tokens.end());
  const bool dish_match =
      !dish.empty() && std::all_of(dish.begin(), dish.end(), [&](const auto& w) { return tf.contains(w); });

  const double norm = 1.0 - stats_.b + stats_.b * static_cast<double>(length) / stats_.avg_len;
  double total = 0.0;
  // Sorted iteration keeps the floating-point sum independent of hash order.
  std::vector<std::pair<std::string, std::size_t>> terms(tf.begin(), tf.end());
  std::sort(terms.begin(), terms.end());
  for (const auto& [word, count] : terms) {
    double weight = 0.0;
    if (dish_match && dish.contains(word)) {
      weight = config_.w_dish * config_.dish_multiplier;
    } else if (span.contains(word)) {
      weight = config_.w_span;
    }
    if (weight == 0.0) continue;
    auto df_it = stats_.df.find(word);
    const std::size_t df = df_it == stats_.df.end() ? 0 : df_it->second;
    const double c = static_cast<double>(count);
    const double term = bm25_idf(stats_.doc_count, df) * c * (stats_.k1 + 1.0) / (c + stats_.k1 * norm);
    total += weight * term;
  }
  return total * length_penalty(length, stats_.avg_len, config_.alpha);
}

RecipeIndex::Ranking RecipeIndex::retrieve_top(const DishQuery& query, std::size_t k) const {
  if (docs_.empty()) throw std::invalid_argument("recipe index is empty");
  std::vector<Hit> all;
  all.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    all.push_back({docs_[i].recipe_id, score_terms(query, docs_[i].length, tf_[i]), 0});
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.recipe_id < b.recipe_id;
  });
  Ranking r;
  r.no_match = all.front().score == 0.0;
  all.resize(std::min(k, all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = i + 1;
  r.hits = std::move(all);
  return r;
}

ojson to_json(const RetrievalRecord& r) {
  ojson j;
  j["entry_id"] = r.entry_id;
  j["recipe_id"] = r.recipe_id;
  j["score"] = r.score;
  j["rank"] = r.rank;
  j["no_match"] = r.no_match;
  return j;
}

std::vector<RetrievalRecord> load_retrievals(const std::filesystem::path& path) {
  std::vector<RetrievalRecord> out;
  read_jsonl(path, [&](std::size_t line, const ojson& j) {
    try {
      RetrievalRecord r;
      r.entry_id = detail::get_string(j, "entry_id");
      r.recipe_id = detail::get_string(j, "recipe_id");
      r.score = detail::get_number(j, "score");
      r.rank = detail::get_index(j, "rank");
      r.no_match = detail::get_bool(j, "no_match");
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string(), line, j.value("entry_id", ""), e.what());
    }
  });
  return out;
}

void save_retrievals(std::span<const RetrievalRecord> records, const std::filesystem::path& path) {
  std::vector<ojson> rows;
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

}  // namespace menucsi
