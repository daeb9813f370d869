#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "menucsi/jsonl.hpp"
#include "menucsi/strategy.hpp"

namespace menucsi {

enum class EntrySource { ocr, manual, fixture };

struct MenuEntry {
  std::string id;
  std::string zh_text;
  std::optional<std::string> en_ref;
  std::optional<double> price;
  std::optional<std::string> restaurant_id;
  EntrySource source = EntrySource::manual;

  bool operator==(const MenuEntry&) const = default;
};

struct CsiSpan {
  std::size_t start = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive
  std::string surface;

  bool operator==(const CsiSpan&) const = default;
};

// Label column of the taxonomy table.
enum class CsiLabel : int { NonCsi = 0, Concrete = 1, Creative = 2, Abstract = 3 };

struct CsiAnnotation {
  std::string entry_id;
  CsiLabel label = CsiLabel::NonCsi;
  std::vector<CsiSpan> spans;  // empty iff label == NonCsi
  std::string annotator_id;

  bool operator==(const CsiAnnotation&) const = default;
};

struct Recipe {
  std::string id;
  std::string name;
  std::string instructions;

  bool operator==(const Recipe&) const = default;
};

enum class TranslationStatus { ok, parse_warning, error };

struct TranslationRecord {
  std::string entry_id;
  std::string backend_id;
  Strategy strategy = Strategy::Baseline;
  std::string prompt_text;
  std::string raw_response;
  std::string final_translation;
  std::string timestamp;  // creation time of the cached response, ISO-8601 UTC
  TranslationStatus status = TranslationStatus::ok;

  bool operator==(const TranslationRecord&) const = default;
};

enum class CorpusKind { entries, annotations, recipes, translations };

using Corpus = std::variant<std::vector<MenuEntry>, std::vector<CsiAnnotation>,
                            std::vector<Recipe>, std::vector<TranslationRecord>>;

// Loads and validates a JSONL corpus. Text fields holding Chinese are
// NFC-normalized. Throws DataError naming the line and record on any
// malformed line, invariant violation or duplicate id.
Corpus load_corpus(const std::filesystem::path& path, CorpusKind kind);

std::vector<MenuEntry> load_entries(const std::filesystem::path& path);
std::vector<CsiAnnotation> load_annotations(const std::filesystem::path& path);
std::vector<Recipe> load_recipes(const std::filesystem::path& path);
std::vector<TranslationRecord> load_translations(const std::filesystem::path& path);

// Keys are written in declaration order; equal inputs give byte-identical files.
void save_corpus(std::span<const MenuEntry> records, const std::filesystem::path& path);
void save_corpus(std::span<const CsiAnnotation> records, const std::filesystem::path& path);
void save_corpus(std::span<const Recipe> records, const std::filesystem::path& path);
void save_corpus(std::span<const TranslationRecord> records, const std::filesystem::path& path);

// Checks every span's surface against the entry text it indexes. Throws DataError.
void check_spans_against(std::span<const CsiAnnotation> annotations,
                         std::span<const MenuEntry> entries);

// Validation shared with other record types (predictions carry spans too).
// Returns an error message, or empty when the spans are well formed.
std::string validate_spans(const std::vector<CsiSpan>& spans);

ojson to_json(const MenuEntry& e);
ojson to_json(const CsiSpan& s);
ojson to_json(const CsiAnnotation& a);
ojson to_json(const Recipe& r);
ojson to_json(const TranslationRecord& t);

MenuEntry entry_from_json(const ojson& j);
CsiSpan span_from_json(const ojson& j);
CsiAnnotation annotation_from_json(const ojson& j);
Recipe recipe_from_json(const ojson& j);
TranslationRecord translation_from_json(const ojson& j);

std::string_view source_name(EntrySource s);
std::string_view status_name(TranslationStatus s);

}  // namespace menucsi
