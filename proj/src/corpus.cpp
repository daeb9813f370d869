#include "menucsi/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json_fields.hpp"
#include "menucsi/text.hpp"

namespace menucsi {

using detail::get_array;
using detail::get_index;
using detail::get_integer;
using detail::get_optional_number;
using detail::get_optional_string;
using detail::get_string;

std::string_view source_name(EntrySource s) {
  switch (s) {
    case EntrySource::ocr: return "ocr";
    case EntrySource::manual: return "manual";
    case EntrySource::fixture: return "fixture";
  }
  return "manual";
}

std::string_view status_name(TranslationStatus s) {
  switch (s) {
    case TranslationStatus::ok: return "ok";
    case TranslationStatus::parse_warning: return "parse_warning";
    case TranslationStatus::error: return "error";
  }
  return "error";
}

namespace {

EntrySource parse_source(const std::string& s) {
  if (s == "ocr") return EntrySource::ocr;
  if (s == "manual") return EntrySource::manual;
  if (s == "fixture") return EntrySource::fixture;
  throw std::invalid_argument("field 'source' must be one of ocr, manual, fixture");
}

TranslationStatus parse_status(const std::string& s) {
  if (s == "ok") return TranslationStatus::ok;
  if (s == "parse_warning") return TranslationStatus::parse_warning;
  if (s == "error") return TranslationStatus::error;
  throw std::invalid_argument("field 'status' must be one of ok, parse_warning, error");
}

std::string require_nfc_text(const ojson& j, const char* name) {
  try {
    return text::nfc(get_string(j, name));
  } catch (const std::invalid_argument& e) {
    if (std::string_view(e.what()).starts_with("malformed UTF-8")) {
      throw std::invalid_argument(std::string("field '") + name + "': " + e.what());
    }
    throw;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Record <-> JSON

ojson to_json(const MenuEntry& e) {
  ojson j;
  j["id"] = e.id;
  j["zh_text"] = e.zh_text;
  if (e.en_ref) j["en_ref"] = *e.en_ref;
  if (e.price) j["price"] = *e.price;
  if (e.restaurant_id) j["restaurant_id"] = *e.restaurant_id;
  j["source"] = source_name(e.source);
  return j;
}

ojson to_json(const CsiSpan& s) {
  ojson j;
  j["start"] = s.start;
  j["end"] = s.end;
  j["surface"] = s.surface;
  return j;
}

ojson to_json(const CsiAnnotation& a) {
  ojson j;
  j["entry_id"] = a.entry_id;
  j["label"] = static_cast<int>(a.label);
  ojson spans = ojson::array();
  for (const auto& s : a.spans) spans.push_back(to_json(s));
  j["spans"] = std::move(spans);
  j["annotator_id"] = a.annotator_id;
  return j;
}

ojson to_json(const Recipe& r) {
  ojson j;
  j["id"] = r.id;
  j["name"] = r.name;
  j["instructions"] = r.instructions;
  return j;
}

ojson to_json(const TranslationRecord& t) {
  ojson j;
  j["entry_id"] = t.entry_id;
  j["backend_id"] = t.backend_id;
  j["strategy"] = strategy_id(t.strategy);
  j["prompt_text"] = t.prompt_text;
  j["raw_response"] = t.raw_response;
  j["final_translation"] = t.final_translation;
  j["timestamp"] = t.timestamp;
  j["status"] = status_name(t.status);
  return j;
}

MenuEntry entry_from_json(const ojson& j) {
  MenuEntry e;
  e.id = get_string(j, "id");
  if (e.id.empty()) throw std::invalid_argument("field 'id' must be non-empty");
  e.zh_text = require_nfc_text(j, "zh_text");
  if (text::trim(e.zh_text).empty()) throw std::invalid_argument("field 'zh_text' is empty after trimming");
  e.en_ref = get_optional_string(j, "en_ref");
  e.price = get_optional_number(j, "price");
  if (e.price && *e.price < 0) throw std::invalid_argument("field 'price' must be non-negative");
  e.restaurant_id = get_optional_string(j, "restaurant_id");
  e.source = parse_source(get_string(j, "source"));
  return e;
}

CsiSpan span_from_json(const ojson& j) {
  CsiSpan s;
  s.start = get_index(j, "start");
  s.end = get_index(j, "end");
  s.surface = require_nfc_text(j, "surface");
  return s;
}

std::string validate_spans(const std::vector<CsiSpan>& spans) {
  std::vector<const CsiSpan*> sorted;
  for (const auto& s : spans) {
    if (s.start >= s.end) {
      return "span [" + std::to_string(s.start) + ", " + std::to_string(s.end) + ") is empty or reversed";
    }
    if (text::length(s.surface) != s.end - s.start) {
      return "span surface '" + s.surface + "' does not match its offsets";
    }
    sorted.push_back(&s);
  }
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) return "spans overlap";
  }
  return {};
}

CsiAnnotation annotation_from_json(const ojson& j) {
  CsiAnnotation a;
  a.entry_id = get_string(j, "entry_id");
  if (a.entry_id.empty()) throw std::invalid_argument("field 'entry_id' must be non-empty");
  long long label = get_integer(j, "label");
  if (label < 0 || label > 3) throw std::invalid_argument("field 'label' must be in {0,1,2,3}");
  a.label = static_cast<CsiLabel>(label);
  for (const auto& s : get_array(j, "spans")) a.spans.push_back(span_from_json(s));
  a.annotator_id = get_string(j, "annotator_id");
  if ((a.label == CsiLabel::NonCsi) != a.spans.empty()) {
    throw std::invalid_argument("field 'spans': label " + std::to_string(label) +
                                (a.spans.empty() ? " requires at least one span" : " must have no spans"));
  }
  if (auto err = validate_spans(a.spans); !err.empty()) {
    throw std::invalid_argument("field 'spans': " + err);
  }
  return a;
}

Recipe recipe_from_json(const ojson& j) {
  Recipe r;
  r.id = get_string(j, "id");
  if (r.id.empty()) throw std::invalid_argument("field 'id' must be non-empty");
  r.name = require_nfc_text(j, "name");
  if (text::trim(r.name).empty()) throw std::invalid_argument("field 'name' must be non-empty");
  r.instructions = require_nfc_text(j, "instructions");
  return r;
}

TranslationRecord translation_from_json(const ojson& j) {
  TranslationRecord t;
  t.entry_id = get_string(j, "entry_id");
  t.backend_id = get_string(j, "backend_id");
  auto strategy = parse_strategy(get_string(j, "strategy"));
  if (!strategy) throw std::invalid_argument("field 'strategy' is not a known strategy");
  t.strategy = *strategy;
  t.prompt_text = get_string(j, "prompt_text");
  t.raw_response = get_string(j, "raw_response");
  t.final_translation = get_string(j, "final_translation");
  t.timestamp = get_string(j, "timestamp");
  t.status = parse_status(get_string(j, "status"));
  if (t.status == TranslationStatus::ok && t.final_translation.empty()) {
    throw std::invalid_argument("field 'final_translation' must be non-empty when status is ok");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string id_hint(const ojson& j) {
  for (const char* key : {"id", "entry_id"}) {
    auto it = j.find(key);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

template <typename Record, typename Parse, typename Key>
std::vector<Record> load_records(const std::filesystem::path& path, Parse parse, Key key) {
  std::vector<Record> out;
  std::map<std::string, std::size_t> seen;
  read_jsonl(path, [&](std::size_t line, const ojson& j) {
    Record r;
    try {
      r = parse(j);
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string(), line, id_hint(j), e.what());
    }
    std::string k = key(r);
    auto [it, inserted] = seen.emplace(k, line);
    if (!inserted) {
      throw DataError(path.string(), line, k,
                      "duplicate id (first seen on line " + std::to_string(it->second) + ")");
    }
    out.push_back(std::move(r));
  });
  return out;
}

template <typename Record>
void save_records(std::span<const Record> records, const std::filesystem::path& path) {
  std::vector<ojson> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

}  // namespace

std::vector<MenuEntry> load_entries(const std::filesystem::path& path) {
  return load_records<MenuEntry>(path, entry_from_json, [](const MenuEntry& e) { return e.id; });
}

std::vector<CsiAnnotation> load_annotations(const std::filesystem::path& path) {
  return load_records<CsiAnnotation>(path, annotation_from_json, [](const CsiAnnotation& a) {
    return a.entry_id + "/" + a.annotator_id;
  });
}

std::vector<Recipe> load_recipes(const std::filesystem::path& path) {
  return load_records<Recipe>(path, recipe_from_json, [](const Recipe& r) { return r.id; });
}

std::vector<TranslationRecord> load_translations(const std::filesystem::path& path) {
  return load_records<TranslationRecord>(path, translation_from_json, [](const TranslationRecord& t) {
    return t.entry_id + "/" + t.backend_id + "/" + std::string(strategy_id(t.strategy));
  });
}

Corpus load_corpus(const std::filesystem::path& path, CorpusKind kind) {
  switch (kind) {
    case CorpusKind::entries: return load_entries(path);
    case CorpusKind::annotations: return load_annotations(path);
    case CorpusKind::recipes: return load_recipes(path);
    case CorpusKind::translations: return load_translations(path);
  }
  throw std::invalid_argument("unknown corpus kind");
}

void save_corpus(std::span<const MenuEntry> records, const std::filesystem::path& path) {
  save_records(records, path);
}
void save_corpus(std::span<const CsiAnnotation> records, const std::filesystem::path& path) {
  save_records(records, path);
}
void save_corpus(std::span<const Recipe> records, const std::filesystem::path& path) {
  save_records(records, path);
}
void save_corpus(std::span<const TranslationRecord> records, const std::filesystem::path& path) {
  save_records(records, path);
}

void check_spans_against(std::span<const CsiAnnotation> annotations,
                         std::span<const MenuEntry> entries) {
  std::unordered_map<std::string, const MenuEntry*> by_id;
  for (const auto& e : entries) by_id.emplace(e.id, &e);
  for (const auto& a : annotations) {
    auto it = by_id.find(a.entry_id);
    if (it == by_id.end()) {
      throw DataError("annotations", 0, a.entry_id, "annotation refers to unknown entry");
    }
    const std::size_t len = text::length(it->second->zh_text);
    for (const auto& s : a.spans) {
      if (s.end > len) {
        throw DataError("annotations", 0, a.entry_id,
                        "span end " + std::to_string(s.end) + " exceeds dish name length " + std::to_string(len));
      }
      if (text::slice(it->second->zh_text, s.start, s.end) != s.surface) {
        throw DataError("annotations", 0, a.entry_id,
                        "span surface '" + s.surface + "' does not match dish name slice");
      }
    }
  }
}

}  // namespace menucsi
