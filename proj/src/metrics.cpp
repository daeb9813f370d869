#include "menucsi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "json_fields.hpp"
#include "menucsi/strategy.hpp"
#include "menucsi/text.hpp"

namespace menucsi {
namespace {

std::string fixed(double v, int digits, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", digits, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0000") s.erase(0, 1);
  if (sign && (s == "0.00" || s == "0.0000")) s.insert(0, "+");
  return s;
}

std::string pad_right(std::string s, std::size_t width) {
  std::size_t len = text::length(s);
  if (len < width) s.append(width - len, ' ');
  return s;
}

std::string pad_left(const std::string& s, std::size_t width) {
  std::size_t len = text::length(s);
  return len < width ? std::string(width - len, ' ') + s : s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string row_label(const std::string& strategy) {
  if (auto s = parse_strategy(strategy)) return std::string(strategy_label(*s));
  return strategy;
}

bool overlaps(std::size_t a_start, std::size_t a_end, const CsiSpan& s) {
  return a_start < s.end && s.start < a_end;
}

constexpr std::array<const char*, 3> kCategoryNames = {"CSI-1", "CSI-2", "CSI-3"};

}  // namespace

double f1(double precision, double recall) {
  if (precision + recall <= 0) return 0;
  return 2 * precision * recall / (precision + recall);
}

Prf Prf::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf p;
  p.tp = tp;
  p.fp = fp;
  p.fn = fn;
  p.precision = tp + fp == 0 ? 0 : 100.0 * double(tp) / double(tp + fp);
  p.recall = tp + fn == 0 ? 0 : 100.0 * double(tp) / double(tp + fn);
  p.f1 = menucsi::f1(p.precision, p.recall);
  return p;
}

std::string_view match_mode_name(MatchMode m) { return m == MatchMode::token ? "token" : "exact-span"; }

MatchMode parse_match_mode(std::string_view s) {
  if (s == "token") return MatchMode::token;
  if (s == "exact-span") return MatchMode::exact_span;
  throw std::invalid_argument("unknown match mode '" + std::string(s) + "' (expected token or exact-span)");
}

std::vector<GoldEntry> consensus_gold(std::span<const CsiAnnotation> annotations) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const CsiAnnotation*>> by_entry;
  for (const auto& a : annotations) {
    auto [it, inserted] = by_entry.try_emplace(a.entry_id);
    if (inserted) order.push_back(a.entry_id);
    it->second.push_back(&a);
  }

  std::vector<GoldEntry> out;
  for (const auto& id : order) {
    const auto& group = by_entry.at(id);
    std::size_t n = group.size();
    std::array<std::size_t, 4> votes{};
    for (const CsiAnnotation* a : group) ++votes[static_cast<int>(a->label)];
    auto top = std::max_element(votes.begin(), votes.end());
    if (*top * 2 <= n) continue;

    GoldEntry g;
    g.entry_id = id;
    g.label = static_cast<CsiLabel>(top - votes.begin());
    if (g.label != CsiLabel::NonCsi) {
      std::map<std::size_t, std::size_t> coverage;
      std::map<std::size_t, std::string> chars;
      for (const CsiAnnotation* a : group) {
        for (const auto& s : a->spans) {
          for (std::size_t k = s.start; k < s.end; ++k) {
            ++coverage[k];
            chars.try_emplace(k, text::slice(s.surface, k - s.start, k - s.start + 1));
          }
        }
      }
      std::optional<CsiSpan> run;
      for (const auto& [pos, count] : coverage) {
        bool on = count * 2 > n;
        if (on && run && run->end == pos) {
          run->end = pos + 1;
          run->surface += chars.at(pos);
          continue;
        }
        if (run) g.spans.push_back(*run), run.reset();
        if (on) run = CsiSpan{pos, pos + 1, chars.at(pos)};
      }
      if (run) g.spans.push_back(*run);
    }
    out.push_back(std::move(g));
  }
  return out;
}

SpanEvalResult span_prf(std::span<const CsiPrediction> predicted, std::span<const GoldEntry> gold,
                        FlagSource source, MatchMode mode) {
  std::unordered_map<std::string, const GoldEntry*> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.entry_id, &g);

  std::array<std::array<std::size_t, 3>, 3> counts{};  // [category][tp, fp, fn]
  for (const auto& p : predicted) {
    auto it = gold_by_id.find(p.entry_id);
    if (it == gold_by_id.end()) throw std::invalid_argument("prediction for entry '" + p.entry_id + "' has no gold annotation");
    const GoldEntry& g = *it->second;
    if (g.label == CsiLabel::NonCsi) continue;
    auto& c = counts[static_cast<int>(g.label) - 1];

    if (mode == MatchMode::token) {
      for (const auto& w : p.words) {
        if (!w.is_word) continue;
        bool pred = flag_of(w, source);
        bool gold_hit = std::any_of(g.spans.begin(), g.spans.end(),
                                    [&](const CsiSpan& s) { return overlaps(w.start, w.end, s); });
        if (pred && gold_hit) ++c[0];
        else if (pred) ++c[1];
        else if (gold_hit) ++c[2];
      }
    } else {
      std::set<std::pair<std::size_t, std::size_t>> pred_spans, gold_spans;
      for (const auto& s : assemble_spans(p.words, source)) pred_spans.emplace(s.start, s.end);
      for (const auto& s : g.spans) gold_spans.emplace(s.start, s.end);
      for (const auto& s : pred_spans) ++c[gold_spans.contains(s) ? 0 : 1];
      for (const auto& s : gold_spans) c[2] += pred_spans.contains(s) ? 0 : 1;
    }
  }

  SpanEvalResult r;
  r.mode = mode;
  std::array<std::size_t, 3> total{};
  for (int k = 0; k < 3; ++k) {
    r.by_category[k] = Prf::from_counts(counts[k][0], counts[k][1], counts[k][2]);
    for (int m = 0; m < 3; ++m) total[m] += counts[k][m];
  }
  r.overall = Prf::from_counts(total[0], total[1], total[2]);
  return r;
}

AgreementResult cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cohen_kappa requires equal-length label sequences");
  if (a.empty()) throw std::invalid_argument("cohen_kappa requires at least one item");
  const double n = double(a.size());
  std::map<int, double> ma, mb;
  double agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1;
    mb[b[i]] += 1;
    if (a[i] == b[i]) agree += 1;
  }
  double p_o = agree / n;
  double p_e = 0;
  for (const auto& [label, count] : ma) {
    if (auto it = mb.find(label); it != mb.end()) p_e += (count / n) * (it->second / n);
  }
  AgreementResult r;
  r.kind = AgreementKind::cohen;
  r.n_items = a.size();
  r.n_raters = 2;
  if (p_e >= 1.0) {
    r.kappa = std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
  } else {
    r.kappa = (p_o - p_e) / (1 - p_e);
  }
  return r;
}

AgreementResult fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) throw std::invalid_argument("fleiss_kappa requires at least one item");
  const std::size_t k = counts.front().size();
  if (k == 0) throw std::invalid_argument("fleiss_kappa requires at least one category");
  long long n = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != k) throw std::invalid_argument("ragged rating matrix at item " + std::to_string(i));
    long long row = 0;
    for (int c : counts[i]) {
      if (c < 0) throw std::invalid_argument("negative count at item " + std::to_string(i));
      row += c;
    }
    if (n < 0) n = row;
    if (row != n) throw std::invalid_argument("item " + std::to_string(i) + " has a different number of ratings");
  }
  if (n < 2) throw std::invalid_argument("fleiss_kappa requires at least two raters per item");

  const double N = double(counts.size());
  const double dn = double(n);
  std::vector<double> p(k, 0.0);
  double p_bar = 0;
  for (const auto& row : counts) {
    double sq = 0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] += row[j];
      sq += double(row[j]) * row[j];
    }
    p_bar += (sq - dn) / (dn * (dn - 1));
  }
  p_bar /= N;
  double p_e = 0;
  for (double pj : p) {
    double share = pj / (N * dn);
    p_e += share * share;
  }

  AgreementResult r;
  r.kind = AgreementKind::fleiss;
  r.n_items = counts.size();
  r.n_raters = static_cast<std::size_t>(n);
  r.kappa = p_e >= 1.0 ? 1.0 : (p_bar - p_e) / (1 - p_e);
  return r;
}

std::vector<std::vector<int>> rating_matrix(std::span<const CsiAnnotation> annotations, AgreementLevel level,
                                            std::vector<std::string>* entry_ids) {
  std::set<std::string> annotators;
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const CsiAnnotation*>> by_entry;
  for (const auto& a : annotations) {
    annotators.insert(a.annotator_id);
    auto [it, inserted] = by_entry.try_emplace(a.entry_id);
    if (inserted) order.push_back(a.entry_id);
    it->second.push_back(&a);
  }
  const std::size_t columns = level == AgreementLevel::category ? 4 : 2;
  std::vector<std::vector<int>> out;
  if (entry_ids) entry_ids->clear();
  for (const auto& id : order) {
    const auto& group = by_entry.at(id);
    if (group.size() != annotators.size()) continue;
    std::vector<int> row(columns, 0);
    for (const CsiAnnotation* a : group) {
      int label = static_cast<int>(a->label);
      ++row[level == AgreementLevel::category ? label : (label > 0 ? 1 : 0)];
    }
    out.push_back(std::move(row));
    if (entry_ids) entry_ids->push_back(id);
  }
  return out;
}

std::vector<PairwiseKappa> pairwise_cohen(std::span<const CsiAnnotation> annotations, AgreementLevel level) {
  std::map<std::string, std::map<std::string, int>> by_annotator;  // annotator -> entry -> label
  for (const auto& a : annotations) {
    int label = static_cast<int>(a.label);
    if (level == AgreementLevel::binary) label = label > 0 ? 1 : 0;
    by_annotator[a.annotator_id][a.entry_id] = label;
  }
  std::vector<PairwiseKappa> out;
  for (auto i = by_annotator.begin(); i != by_annotator.end(); ++i) {
    for (auto j = std::next(i); j != by_annotator.end(); ++j) {
      std::vector<int> la, lb;
      for (const auto& [entry, label] : i->second) {
        if (auto it = j->second.find(entry); it != j->second.end()) {
          la.push_back(label);
          lb.push_back(it->second);
        }
      }
      if (la.empty()) continue;
      out.push_back({i->first, j->first, cohen_kappa(la, lb)});
    }
  }
  return out;
}

ojson to_json(const ScoreRecord& r) {
  ojson j;
  j["entry_id"] = r.entry_id;
  j["strategy"] = r.strategy;
  j["score"] = r.score;
  j["category"] = r.category;
  return j;
}

std::vector<ScoreRecord> load_scores(const std::filesystem::path& path) {
  std::vector<ScoreRecord> out;
  read_jsonl(path, [&](std::size_t line, const ojson& j) {
    try {
      ScoreRecord r;
      r.entry_id = detail::get_string(j, "entry_id");
      r.strategy = detail::get_string(j, "strategy");
      r.score = detail::get_number(j, "score");
      long long c = detail::get_integer(j, "category");
      if (c < 1 || c > 3) throw std::invalid_argument("category must be 1, 2 or 3");
      r.category = static_cast<int>(c);
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string(), line, j.value("entry_id", ""), e.what());
    }
  });
  return out;
}

void save_scores(std::span<const ScoreRecord> records, const std::filesystem::path& path) {
  std::vector<ojson> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

double overall_of(const std::array<double, 3>& m) { return (m[0] + m[1] + m[2]) / 3.0; }

ScoreTable aggregate_scores(std::span<const ScoreRecord> scores, const std::string& baseline_strategy) {
  struct Acc {
    std::array<double, 3> sum{};
    std::array<std::size_t, 3> n{};
  };
  std::map<std::string, Acc> acc;
  for (const auto& s : scores) {
    if (s.category < 1 || s.category > 3) {
      throw std::invalid_argument("score for entry '" + s.entry_id + "' has category outside 1..3");
    }
    Acc& a = acc[s.strategy];
    a.sum[s.category - 1] += s.score;
    a.n[s.category - 1] += 1;
  }
  if (!acc.contains(baseline_strategy)) {
    throw std::invalid_argument("baseline strategy '" + baseline_strategy + "' has no scores");
  }

  std::vector<std::string> order{baseline_strategy};
  for (Strategy s : kAllStrategies) {
    std::string id(strategy_id(s));
    if (id != baseline_strategy && acc.contains(id)) order.push_back(id);
  }
  for (const auto& [id, _] : acc) {
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
  }

  ScoreTable table;
  table.baseline = baseline_strategy;
  for (const auto& id : order) {
    const Acc& a = acc.at(id);
    ScoreRow row;
    row.strategy = id;
    for (int k = 0; k < 3; ++k) {
      if (a.n[k] == 0) {
        throw std::invalid_argument("strategy '" + id + "' has no scores in category " + kCategoryNames[k]);
      }
      row.mean[k] = a.sum[k] / double(a.n[k]);
      row.n[k] = a.n[k];
    }
    row.overall = overall_of(row.mean);
    table.rows.push_back(row);
  }
  const ScoreRow base = table.rows.front();
  for (auto& row : table.rows) {
    for (int k = 0; k < 3; ++k) row.delta[k] = row.mean[k] - base.mean[k];
    row.delta_overall = row.overall - base.overall;
  }
  return table;
}

std::string render_text(const ScoreTable& table) {
  std::size_t label_width = 8;
  for (const auto& row : table.rows) label_width = std::max(label_width, text::length(row_label(row.strategy)));
  label_width += 2;

  std::string out;
  auto header = [&](const std::string& title) {
    out += title + "\n";
    out += pad_right("Strategy", label_width);
    for (const char* c : kCategoryNames) out += pad_left(c, 9);
    out += pad_left("Overall", 9) + "\n";
  };
  header("Mean score");
  for (const auto& row : table.rows) {
    out += pad_right(row_label(row.strategy), label_width);
    for (double m : row.mean) out += pad_left(fixed(m, 2), 9);
    out += pad_left(fixed(row.overall, 2), 9) + "\n";
  }
  out += "\n";
  header("Delta vs " + row_label(table.baseline));
  for (const auto& row : table.rows) {
    if (row.strategy == table.baseline) continue;
    out += pad_right(row_label(row.strategy), label_width);
    for (double d : row.delta) out += pad_left(fixed(d, 2, true), 9);
    out += pad_left(fixed(row.delta_overall, 2, true), 9) + "\n";
  }
  return out;
}

std::string render_text(std::span<const std::pair<std::string, SpanEvalResult>> rows) {
  std::string out;
  if (rows.empty()) return out;
  out += "Span identification (" + std::string(match_mode_name(rows.front().second.mode)) + " level)\n";
  out += pad_right("Method", 10);
  for (const char* c : kCategoryNames) out += pad_left(std::string(c) + " P/R/F1", 22);
  out += pad_left("All P/R/F1", 22) + "\n";
  auto cell = [](const Prf& p) {
    return fixed(p.precision, 1) + "/" + fixed(p.recall, 1) + "/" + fixed(p.f1, 1);
  };
  for (const auto& [method, r] : rows) {
    out += pad_right(method, 10);
    for (const auto& p : r.by_category) out += pad_left(cell(p), 22);
    out += pad_left(cell(r.overall), 22) + "\n";
  }
  return out;
}

void CsvReport::add(const ScoreTable& table) {
  for (const auto& row : table.rows) {
    for (int k = 0; k < 3; ++k) {
      rows.push_back({"scores", row.strategy, kCategoryNames[k], "mean", fixed(row.mean[k], 4)});
      rows.push_back({"scores", row.strategy, kCategoryNames[k], "delta", fixed(row.delta[k], 4)});
      rows.push_back({"scores", row.strategy, kCategoryNames[k], "n", std::to_string(row.n[k])});
    }
    rows.push_back({"scores", row.strategy, "Overall", "mean", fixed(row.overall, 4)});
    rows.push_back({"scores", row.strategy, "Overall", "delta", fixed(row.delta_overall, 4)});
  }
}

void CsvReport::add(const std::string& method, const SpanEvalResult& result) {
  std::string table = "span_" + std::string(match_mode_name(result.mode));
  auto emit = [&](const std::string& column, const Prf& p) {
    rows.push_back({table, method, column, "precision", fixed(p.precision, 4)});
    rows.push_back({table, method, column, "recall", fixed(p.recall, 4)});
    rows.push_back({table, method, column, "f1", fixed(p.f1, 4)});
    rows.push_back({table, method, column, "tp", std::to_string(p.tp)});
    rows.push_back({table, method, column, "fp", std::to_string(p.fp)});
    rows.push_back({table, method, column, "fn", std::to_string(p.fn)});
  };
  for (int k = 0; k < 3; ++k) emit(kCategoryNames[k], result.by_category[k]);
  emit("All", result.overall);
}

std::string CsvReport::str() const {
  std::string out = "table,row,column,metric,value\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out.push_back(',');
      out += csv_field(r[i]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace menucsi
