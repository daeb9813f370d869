#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "menucsi/corpus.hpp"
#include "menucsi/jsonl.hpp"

namespace menucsi {

class MtClient;

struct BBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double cx() const { return (x_min + x_max) / 2; }
  double cy() const { return (y_min + y_max) / 2; }
  bool operator==(const BBox&) const = default;
};

struct OcrBlock {
  std::string text;
  BBox bbox;
  std::string page_id;

  bool operator==(const OcrBlock&) const = default;
};

// Throws std::invalid_argument for an empty text or a degenerate box.
void validate(const OcrBlock& block);

// ocr.json: array of {text, bbox: [x_min, y_min, x_max, y_max], page_id}.
std::vector<OcrBlock> load_ocr(const std::filesystem::path& path);
std::vector<OcrBlock> parse_ocr(const ojson& doc, const std::string& source_name = "<ocr>");

struct PricePattern {
  std::string id;
  // Full-match regex over the trimmed block text; capture group 1 is the amount.
  std::string regex;
};

std::vector<PricePattern> default_price_patterns();

struct PriceAnchor {
  std::size_t block = 0;  // index into the block list
  double value = 0;
  std::string pattern_id;
};

std::vector<PriceAnchor> detect_prices(std::span<const OcrBlock> blocks,
                                       std::span<const PricePattern> patterns);
std::vector<PriceAnchor> detect_prices(std::span<const OcrBlock> blocks);

enum class Script { chinese, english, mixed, other };

std::string_view script_name(Script s);
Script classify_script(std::string_view text);

// Cross-lingual similarity in [0, 1].
using SimilarityFn = std::function<double(const OcrBlock& zh, const OcrBlock& en)>;

// Always 1, so the score is driven by the gap alone.
SimilarityFn geometry_similarity();
// Cosine over lowercase token multisets of MT(zh) against the English text.
SimilarityFn mt_similarity(MtClient& mt);
double token_cosine(std::string_view a, std::string_view b);

struct AlignConfig {
  double lambda = 0.5;
  // Vertical candidate window around the anchor, in multiples of the page's median block height.
  double radius_factor = 1.5;
};

struct AlignmentCandidate {
  std::size_t anchor = 0;  // index into the anchor list
  std::size_t zh_block = 0;
  std::size_t en_block = 0;
  double similarity = 0;
  double gap_distance = 0;
  double normalized_gap = 0;
  double score = 0;
  bool selected = false;
};

struct SkippedAnchor {
  std::size_t anchor = 0;
  std::string reason;
};

struct AlignResult {
  std::vector<MenuEntry> entries;
  std::vector<AlignmentCandidate> candidates;
  std::vector<SkippedAnchor> skipped;
};

AlignResult align(std::span<const OcrBlock> blocks, std::span<const PriceAnchor> anchors,
                  const SimilarityFn& similarity, const AlignConfig& config = {});

// One row per candidate, for audit.
std::vector<ojson> alignment_report(std::span<const OcrBlock> blocks, std::span<const PriceAnchor> anchors,
                                    const AlignResult& result);

}  // namespace menucsi
