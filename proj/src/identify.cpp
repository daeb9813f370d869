#include "menucsi/identify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "json_fields.hpp"
#include "menucsi/text.hpp"

namespace menucsi {

double percentile_linear(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (pct < 0 || pct > 100) throw std::invalid_argument("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------------------
// Cultural uniqueness

FreqTable FreqTable::from_counts(std::unordered_map<std::string, std::uint64_t> counts, double percentile) {
  if (counts.empty()) throw std::invalid_argument("frequency table needs at least one word");
  FreqTable t;
  t.percentile_ = percentile;
  std::vector<double> inv;
  inv.reserve(counts.size());
  for (const auto& [word, c] : counts) {
    if (c == 0) throw std::invalid_argument("zero count for word " + word);
    inv.push_back(1.0 / static_cast<double>(c));
  }
  t.cutoff_ = percentile_linear(std::move(inv), percentile);
  t.counts_ = std::move(counts);
  return t;
}

std::uint64_t FreqTable::count(const std::string& word) const {
  auto it = counts_.find(word);
  return it == counts_.end() ? 0 : it->second;
}

double FreqTable::inverse_frequency(const std::string& word) const {
  auto c = count(word);
  return c == 0 ? 1.0 : 1.0 / static_cast<double>(c);
}

FreqTable build_freq_table(std::span<const MenuEntry> corpus, const Segmenter& segmenter, double percentile) {
  if (corpus.empty()) throw std::invalid_argument("cannot build a frequency table from an empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& e : corpus) {
    for (const auto& tok : word_tokens(segmenter.precise_cut(e.zh_text))) ++counts[tok.surface];
  }
  if (counts.empty()) throw std::invalid_argument("corpus contains no words");
  return FreqTable::from_counts(std::move(counts), percentile);
}

std::vector<bool> cu_check(const std::vector<std::string>& words, const FreqTable& table, bool inclusive) {
  std::vector<bool> flags;
  flags.reserve(words.size());
  for (const auto& w : words) {
    const double inv = table.inverse_frequency(w);
    flags.push_back(inclusive ? inv >= table.cutoff() : inv > table.cutoff());
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Round-trip translation

std::vector<bool> rtt_survivors(const TokenList& search_tokens, const std::unordered_set<std::string>& rtt_words) {
  // Intervals of tokens that reappear in the round trip, sorted by start.
  std::vector<std::pair<std::size_t, std::size_t>> present;
  for (const auto& t : search_tokens) {
    if (rtt_words.contains(t.surface)) present.emplace_back(t.start, t.end());
  }
  std::sort(present.begin(), present.end());

  std::vector<bool> out;
  out.reserve(search_tokens.size());
  for (const auto& t : search_tokens) {
    bool survives = true;
    auto it = std::lower_bound(present.begin(), present.end(), std::make_pair(t.start, std::size_t{0}));
    for (; it != present.end() && it->first < t.end(); ++it) {
      if (it->second <= t.end()) {
        survives = false;
        break;
      }
    }
    out.push_back(survives);
  }
  return out;
}

RttResult rtt_check(const MenuEntry& entry, MtClient& forward, MtClient& reverse, const Segmenter& segmenter) {
  RttResult r;
  try {
    r.forward = forward.translate(entry.zh_text, "zh", "en").text;
    r.round_trip = reverse.translate(r.forward, "en", "zh").text;
  } catch (const BackendError& e) {
    throw BackendError(e.backend_id(), e.reason(), "entry " + entry.id + ": " + e.what());
  }

  const TokenList precise = segmenter.precise_cut(entry.zh_text);
  std::unordered_set<std::string> rtt_words;
  for (const auto& t : word_tokens(segmenter.precise_cut(text::nfc(r.round_trip)))) rtt_words.insert(t.surface);

  r.flags.assign(precise.size(), false);
  if (rtt_words.empty()) {
    spdlog::warn("entry {}: round trip produced no words; flagging every word", entry.id);
    r.empty_round_trip = true;
    for (std::size_t i = 0; i < precise.size(); ++i) r.flags[i] = text::has_word_char(precise[i].surface);
    return r;
  }

  const TokenList search = segmenter.search_cut(entry.zh_text);
  const std::vector<bool> survived = rtt_survivors(search, rtt_words);
  for (std::size_t i = 0; i < precise.size(); ++i) {
    if (!text::has_word_char(precise[i].surface)) continue;
    for (std::size_t j = 0; j < search.size(); ++j) {
      if (search[j].start == precise[i].start && search[j].length == precise[i].length) {
        r.flags[i] = survived[j];
        break;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Historical significance

std::string HsVote::status_name() const {
  return generic ? "generic" : std::string(wiki_status_name(status));
}

std::vector<HsVote> hs_check(const std::vector<std::string>& words, std::string_view dish_name, WikiClient& wiki,
                             const FreqTable& generic_counts, std::uint64_t threshold) {
  std::optional<HistoryLookup> dish;
  std::vector<HsVote> out;
  out.reserve(words.size());
  for (const auto& w : words) {
    HsVote v;
    if (generic_counts.count(w) >= threshold) {
      v.generic = true;
      out.push_back(v);
      continue;
    }
    HistoryLookup own = wiki.has_history_section(w);
    if (own.has_history) {
      out.push_back({true, false, WikiStatus::found});
      continue;
    }
    if (!dish) dish = wiki.has_history_section(dish_name);
    if (dish->has_history) {
      out.push_back({true, false, WikiStatus::found});
    } else if (own.status == WikiStatus::unknown || dish->status == WikiStatus::unknown) {
      out.push_back({false, false, WikiStatus::unknown});
    } else {
      out.push_back({false, false, own.status});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combined vote

CheckSet parse_checks(std::string_view list) {
  CheckSet c{false, false, false};
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    const std::string name = text::trim(list.substr(pos, comma - pos));
    if (name == "rtt") c.rtt = true;
    else if (name == "cu") c.cu = true;
    else if (name == "hs") c.hs = true;
    else throw std::invalid_argument("unknown check '" + std::string(name) + "' (expected rtt, cu, hs)");
    pos = comma + 1;
  }
  if (c.enabled() == 0) throw std::invalid_argument("no checks selected");
  return c;
}

std::string format_checks(const CheckSet& checks) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(checks.rtt, "rtt");
  add(checks.cu, "cu");
  add(checks.hs, "hs");
  return out;
}

bool combine_votes(bool rtt, bool cu, bool hs, const CheckSet& checks) {
  const int votes = int(checks.rtt && rtt) + int(checks.cu && cu) + int(checks.hs && hs);
  const int needed = checks.enabled() / 2 + 1;
  return checks.enabled() > 0 && votes >= needed;
}

std::string_view flag_source_name(FlagSource s) {
  switch (s) {
    case FlagSource::combined: return "combined";
    case FlagSource::rtt: return "rtt";
    case FlagSource::cu: return "cu";
    case FlagSource::hs: return "hs";
  }
  return "combined";
}

bool flag_of(const WordFlags& w, FlagSource source) {
  switch (source) {
    case FlagSource::combined: return w.combined;
    case FlagSource::rtt: return w.rtt;
    case FlagSource::cu: return w.cu;
    case FlagSource::hs: return w.hs;
  }
  return false;
}

std::vector<CsiSpan> assemble_spans(const std::vector<WordFlags>& words, FlagSource source) {
  std::vector<CsiSpan> spans;
  std::optional<CsiSpan> run;
  for (const auto& w : words) {
    if (w.is_word && flag_of(w, source)) {
      if (!run) run = CsiSpan{w.start, w.end, ""};
      run->end = w.end;
      run->surface += w.surface;
    } else if (run) {
      spans.push_back(std::move(*run));
      run.reset();
    }
  }
  if (run) spans.push_back(std::move(*run));
  return spans;
}

CsiPrediction combined_identify(const MenuEntry& entry, IdentifyContext& ctx) {
  const auto& cfg = ctx.config;
  CsiPrediction p;
  p.entry_id = entry.id;
  p.checks = cfg.checks;

  const TokenList precise = ctx.segmenter.precise_cut(entry.zh_text);
  std::vector<std::string> words;
  std::vector<std::size_t> word_pos;  // index into precise for each voting word
  for (std::size_t i = 0; i < precise.size(); ++i) {
    WordFlags w;
    w.surface = precise[i].surface;
    w.start = precise[i].start;
    w.end = precise[i].end();
    w.is_word = text::has_word_char(w.surface);
    if (w.is_word) {
      words.push_back(w.surface);
      word_pos.push_back(i);
    }
    p.words.push_back(std::move(w));
  }

  if (cfg.checks.rtt) {
    try {
      if (!ctx.forward || !ctx.reverse) throw std::invalid_argument("RTT check needs forward and reverse backends");
      RttResult r = rtt_check(entry, *ctx.forward, *ctx.reverse, ctx.segmenter);
      p.rtt_forward = r.forward;
      p.rtt_round_trip = r.round_trip;
      for (std::size_t i = 0; i < precise.size(); ++i) p.words[i].rtt = r.flags[i];
    } catch (const std::exception& e) {
      spdlog::error("entry {}: rtt check failed: {}", entry.id, e.what());
      p.errors.push_back(std::string("rtt: ") + e.what());
    }
  }

  if (cfg.checks.cu) {
    const auto flags = cu_check(words, ctx.table, cfg.inclusive_cutoff);
    for (std::size_t k = 0; k < words.size(); ++k) p.words[word_pos[k]].cu = flags[k];
  }

  if (cfg.checks.hs) {
    try {
      if (!ctx.wiki) throw std::invalid_argument("HS check needs a wiki backend");
      const auto votes = hs_check(words, entry.zh_text, *ctx.wiki, ctx.table, cfg.generic_threshold);
      for (std::size_t k = 0; k < words.size(); ++k) {
        p.words[word_pos[k]].hs = votes[k].flag;
        p.words[word_pos[k]].hs_status = votes[k].status_name();
      }
    } catch (const std::exception& e) {
      spdlog::error("entry {}: hs check failed: {}", entry.id, e.what());
      p.errors.push_back(std::string("hs: ") + e.what());
    }
  }

  for (auto& w : p.words) {
    w.combined = w.is_word && combine_votes(w.rtt, w.cu, w.hs, cfg.checks);
  }
  p.spans = assemble_spans(p.words, FlagSource::combined);
  p.is_csi = !p.spans.empty();
  return p;
}

// ---------------------------------------------------------------------------
// predictions.jsonl

ojson to_json(const CsiPrediction& p) {
  ojson j;
  j["entry_id"] = p.entry_id;
  j["checks"] = format_checks(p.checks);
  ojson words = ojson::array();
  for (const auto& w : p.words) {
    ojson wj;
    wj["surface"] = w.surface;
    wj["start"] = w.start;
    wj["end"] = w.end;
    wj["is_word"] = w.is_word;
    wj["rtt"] = w.rtt;
    wj["cu"] = w.cu;
    wj["hs"] = w.hs;
    wj["hs_status"] = w.hs_status;
    wj["combined"] = w.combined;
    words.push_back(std::move(wj));
  }
  j["words"] = std::move(words);
  ojson spans = ojson::array();
  for (const auto& s : p.spans) spans.push_back(to_json(s));
  j["spans"] = std::move(spans);
  j["is_csi"] = p.is_csi;
  j["rtt_forward"] = p.rtt_forward;
  j["rtt_round_trip"] = p.rtt_round_trip;
  j["errors"] = p.errors;
  return j;
}

CsiPrediction prediction_from_json(const ojson& j) {
  using namespace detail;
  CsiPrediction p;
  p.entry_id = get_string(j, "entry_id");
  p.checks = parse_checks(get_string(j, "checks"));
  for (const auto& wj : get_array(j, "words")) {
    WordFlags w;
    w.surface = text::nfc(get_string(wj, "surface"));
    w.start = get_index(wj, "start");
    w.end = get_index(wj, "end");
    w.is_word = get_bool(wj, "is_word");
    w.rtt = get_bool(wj, "rtt");
    w.cu = get_bool(wj, "cu");
    w.hs = get_bool(wj, "hs");
    w.hs_status = get_string(wj, "hs_status");
    w.combined = get_bool(wj, "combined");
    if (w.end <= w.start) throw std::invalid_argument("word offsets are empty or reversed");
    p.words.push_back(std::move(w));
  }
  for (const auto& s : get_array(j, "spans")) p.spans.push_back(span_from_json(s));
  if (auto err = validate_spans(p.spans); !err.empty()) throw std::invalid_argument("field 'spans': " + err);
  p.is_csi = get_bool(j, "is_csi");
  if (p.is_csi != !p.spans.empty()) throw std::invalid_argument("field 'is_csi' disagrees with spans");
  p.rtt_forward = get_string(j, "rtt_forward");
  p.rtt_round_trip = get_string(j, "rtt_round_trip");
  for (const auto& e : get_array(j, "errors")) p.errors.push_back(e.get<std::string>());
  return p;
}

std::vector<CsiPrediction> load_predictions(const std::filesystem::path& path) {
  std::vector<CsiPrediction> out;
  std::unordered_set<std::string> seen;
  read_jsonl(path, [&](std::size_t line, const ojson& j) {
    CsiPrediction p;
    try {
      p = prediction_from_json(j);
    } catch (const std::exception& e) {
      throw DataError(path.string(), line, j.value("entry_id", ""), e.what());
    }
    if (!seen.insert(p.entry_id).second) throw DataError(path.string(), line, p.entry_id, "duplicate id");
    out.push_back(std::move(p));
  });
  return out;
}

void save_predictions(std::span<const CsiPrediction> predictions, const std::filesystem::path& path) {
  std::vector<ojson> rows;
  rows.reserve(predictions.size());
  for (const auto& p : predictions) rows.push_back(to_json(p));
  write_jsonl(path, rows);
}

}  // namespace menucsi
