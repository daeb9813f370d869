#include "menucsi/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <stdexcept>
#include <tuple>

#include <spdlog/spdlog.h>
#include <unicode/uchar.h>

#include "json_fields.hpp"
#include "menucsi/backends.hpp"
#include "menucsi/text.hpp"

namespace menucsi {
namespace {

std::string block_label(const OcrBlock& b, std::size_t index) {
  return "block " + std::to_string(index) + " ('" + b.text + "')";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

// Geometric reading order: top to bottom, then left to right, then text.
auto reading_key(const OcrBlock& b) {
  return std::tie(b.bbox.y_min, b.bbox.x_min, b.bbox.y_max, b.bbox.x_max, b.text);
}

bool reads_before(const OcrBlock& a, const OcrBlock& b) { return reading_key(a) < reading_key(b); }

struct PageGeometry {
  double median_height = 0;
  double diagonal = 1;
};

std::map<std::string, PageGeometry> page_geometry(std::span<const OcrBlock> blocks) {
  std::map<std::string, std::vector<const OcrBlock*>> pages;
  for (const auto& b : blocks) pages[b.page_id].push_back(&b);
  std::map<std::string, PageGeometry> out;
  for (const auto& [page, members] : pages) {
    std::vector<double> heights;
    double x0 = members.front()->bbox.x_min, y0 = members.front()->bbox.y_min;
    double x1 = members.front()->bbox.x_max, y1 = members.front()->bbox.y_max;
    for (const OcrBlock* b : members) {
      heights.push_back(b->bbox.height());
      x0 = std::min(x0, b->bbox.x_min);
      y0 = std::min(y0, b->bbox.y_min);
      x1 = std::max(x1, b->bbox.x_max);
      y1 = std::max(y1, b->bbox.y_max);
    }
    PageGeometry g;
    g.median_height = median(std::move(heights));
    double diag = std::hypot(x1 - x0, y1 - y0);
    g.diagonal = diag > 0 ? diag : 1;
    out.emplace(page, g);
  }
  return out;
}

ojson bbox_json(const BBox& b) { return ojson::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

}  // namespace

void validate(const OcrBlock& block) {
  if (text::trim(block.text).empty()) throw std::invalid_argument("text is empty");
  const BBox& b = block.bbox;
  if (!(b.x_min < b.x_max)) throw std::invalid_argument("bbox requires x_min < x_max");
  if (!(b.y_min < b.y_max)) throw std::invalid_argument("bbox requires y_min < y_max");
}

std::vector<OcrBlock> parse_ocr(const ojson& doc, const std::string& source_name) {
  if (!doc.is_array()) throw DataError(source_name, 0, "", "OCR document must be a JSON array of blocks");
  std::vector<OcrBlock> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const ojson& j = doc[i];
    OcrBlock b;
    try {
      if (!j.is_object()) throw std::invalid_argument("block must be an object");
      b.text = text::nfc(detail::get_string(j, "text"));
      b.page_id = detail::get_string(j, "page_id");
      const ojson& box = detail::field(j, "bbox");
      if (!box.is_array() || box.size() != 4) {
        throw std::invalid_argument("bbox must be [x_min, y_min, x_max, y_max]");
      }
      double v[4];
      for (std::size_t k = 0; k < 4; ++k) {
        if (!box[k].is_number()) throw std::invalid_argument("bbox values must be numbers");
        v[k] = box[k].get<double>();
        if (!std::isfinite(v[k])) throw std::invalid_argument("bbox values must be finite");
      }
      b.bbox = {v[0], v[1], v[2], v[3]};
      validate(b);
    } catch (const std::invalid_argument& e) {
      std::string label = j.is_object() ? block_label(OcrBlock{j.value("text", ""), {}, ""}, i)
                                        : "block " + std::to_string(i);
      throw DataError(source_name, 0, label, e.what());
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<OcrBlock> load_ocr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "", "cannot open OCR file");
  ojson doc;
  try {
    doc = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw DataError(path.string(), 0, "", std::string("malformed JSON: ") + e.what());
  }
  return parse_ocr(doc, path.string());
}

std::vector<PricePattern> default_price_patterns() {
  return {
      {"currency_dd.dd", "(?:£|\\$|¥)(\\d{1,3}\\.\\d{2})"},
      {"dd.dd", "(\\d{1,3}\\.\\d{2})"},
  };
}

std::vector<PriceAnchor> detect_prices(std::span<const OcrBlock> blocks, std::span<const PricePattern> patterns) {
  std::vector<std::pair<std::string, std::regex>> compiled;
  compiled.reserve(patterns.size());
  for (const auto& p : patterns) compiled.emplace_back(p.id, std::regex(p.regex, std::regex::ECMAScript));

  std::vector<PriceAnchor> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::string t = text::trim(blocks[i].text);
    for (const auto& [id, re] : compiled) {
      std::smatch m;
      if (!std::regex_match(t, m, re) || m.size() < 2) continue;
      double value = std::stod(m[1].str());
      if (value < 0) continue;
      out.push_back({i, value, id});
      break;
    }
  }
  return out;
}

std::vector<PriceAnchor> detect_prices(std::span<const OcrBlock> blocks) {
  auto patterns = default_price_patterns();
  return detect_prices(blocks, patterns);
}

std::string_view script_name(Script s) {
  switch (s) {
    case Script::chinese: return "chinese";
    case Script::english: return "english";
    case Script::mixed: return "mixed";
    case Script::other: return "other";
  }
  return "other";
}

Script classify_script(std::string_view t) {
  std::size_t letters = 0, han = 0, latin = 0;
  for (char32_t c : text::decode(t)) {
    if (!text::is_word_char(c) || u_isdigit(static_cast<UChar32>(c))) continue;
    ++letters;
    if (text::is_han(c)) ++han;
    else if (text::is_latin(c)) ++latin;
  }
  if (letters == 0) return Script::other;
  if (han * 2 > letters) return Script::chinese;
  if (latin * 2 > letters) return Script::english;
  return Script::mixed;
}

SimilarityFn geometry_similarity() {
  return [](const OcrBlock&, const OcrBlock&) { return 1.0; };
}

double token_cosine(std::string_view a, std::string_view b) {
  auto bag = [](std::string_view s) {
    std::map<std::string, double> counts;
    std::u32string cur;
    auto flush = [&] {
      if (!cur.empty()) counts[text::ascii_lower(text::encode(cur))] += 1;
      cur.clear();
    };
    for (char32_t c : text::decode(s)) {
      if (text::is_word_char(c)) {
        cur.push_back(c);
      } else {
        flush();
      }
    }
    flush();
    return counts;
  };
  auto ca = bag(a), cb = bag(b);
  double dot = 0, na = 0, nb = 0;
  for (const auto& [w, n] : ca) {
    na += n * n;
    if (auto it = cb.find(w); it != cb.end()) dot += n * it->second;
  }
  for (const auto& [w, n] : cb) nb += n * n;
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

SimilarityFn mt_similarity(MtClient& mt) {
  return [&mt](const OcrBlock& zh, const OcrBlock& en) {
    std::string translated = mt.translate(zh.text, "zh", "en").text;
    return token_cosine(translated, en.text);
  };
}

AlignResult align(std::span<const OcrBlock> blocks, std::span<const PriceAnchor> anchors,
                  const SimilarityFn& similarity, const AlignConfig& config) {
  for (const auto& a : anchors) {
    if (a.block >= blocks.size()) throw std::out_of_range("anchor refers to a missing block");
  }
  auto geometry = page_geometry(blocks);

  std::vector<Script> scripts;
  scripts.reserve(blocks.size());
  for (const auto& b : blocks) scripts.push_back(classify_script(b.text));

  std::vector<std::size_t> anchor_order(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) anchor_order[i] = i;
  std::sort(anchor_order.begin(), anchor_order.end(), [&](std::size_t x, std::size_t y) {
    const OcrBlock& bx = blocks[anchors[x].block];
    const OcrBlock& by = blocks[anchors[y].block];
    return std::tie(bx.page_id, bx.bbox.y_min, bx.bbox.x_min, bx.bbox.y_max, bx.bbox.x_max, bx.text,
                    anchors[x].value) <
           std::tie(by.page_id, by.bbox.y_min, by.bbox.x_min, by.bbox.y_max, by.bbox.x_max, by.text,
                    anchors[y].value);
  });

  AlignResult result;
  std::map<std::string, std::size_t> per_page_counter;
  std::map<std::pair<std::size_t, std::size_t>, double> sim_memo;

  for (std::size_t ai : anchor_order) {
    const PriceAnchor& anchor = anchors[ai];
    const OcrBlock& ab = blocks[anchor.block];
    const PageGeometry& g = geometry.at(ab.page_id);
    double radius = config.radius_factor * g.median_height;

    std::vector<std::size_t> zh, en;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i == anchor.block || blocks[i].page_id != ab.page_id) continue;
      if (std::abs(blocks[i].bbox.cy() - ab.bbox.cy()) > radius) continue;
      if (scripts[i] == Script::chinese) zh.push_back(i);
      if (scripts[i] == Script::english) en.push_back(i);
    }
    auto by_reading = [&](std::size_t x, std::size_t y) { return reads_before(blocks[x], blocks[y]); };
    std::sort(zh.begin(), zh.end(), by_reading);
    std::sort(en.begin(), en.end(), by_reading);

    if (zh.empty() || en.empty()) {
      std::string reason = zh.empty() ? "no chinese block in radius" : "no english block in radius";
      spdlog::warn("skipping price anchor '{}' on page {}: {}", ab.text, ab.page_id, reason);
      result.skipped.push_back({ai, reason});
      continue;
    }

    std::size_t first = result.candidates.size();
    std::size_t best = first;
    for (std::size_t z : zh) {
      for (std::size_t e : en) {
        AlignmentCandidate c;
        c.anchor = ai;
        c.zh_block = z;
        c.en_block = e;
        auto key = std::pair{z, e};
        auto it = sim_memo.find(key);
        if (it == sim_memo.end()) it = sim_memo.emplace(key, similarity(blocks[z], blocks[e])).first;
        c.similarity = it->second;
        c.gap_distance = std::hypot(blocks[z].bbox.cx() - blocks[e].bbox.cx(), blocks[z].bbox.cy() - blocks[e].bbox.cy());
        c.normalized_gap = c.gap_distance / g.diagonal;
        c.score = c.similarity - config.lambda * c.normalized_gap;
        result.candidates.push_back(c);

        const AlignmentCandidate& cur = result.candidates[best];
        // Candidates arrive in reading order, so an exact tie keeps the earlier pair.
        if (result.candidates.size() - 1 != first &&
            (c.score > cur.score || (c.score == cur.score && c.gap_distance < cur.gap_distance))) {
          best = result.candidates.size() - 1;
        }
      }
    }
    result.candidates[best].selected = true;

    const AlignmentCandidate& chosen = result.candidates[best];
    std::size_t n = ++per_page_counter[ab.page_id];
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-%03zu", n);
    MenuEntry entry;
    entry.id = ab.page_id + suffix;
    entry.zh_text = text::trim(blocks[chosen.zh_block].text);
    entry.en_ref = text::trim(blocks[chosen.en_block].text);
    entry.price = anchor.value;
    entry.source = EntrySource::ocr;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

std::vector<ojson> alignment_report(std::span<const OcrBlock> blocks, std::span<const PriceAnchor> anchors,
                                    const AlignResult& result) {
  std::vector<ojson> rows;
  rows.reserve(result.candidates.size());
  for (const auto& c : result.candidates) {
    const PriceAnchor& a = anchors[c.anchor];
    ojson j;
    j["page_id"] = blocks[a.block].page_id;
    j["anchor_text"] = blocks[a.block].text;
    j["price"] = a.value;
    j["pattern_id"] = a.pattern_id;
    j["zh_text"] = blocks[c.zh_block].text;
    j["zh_bbox"] = bbox_json(blocks[c.zh_block].bbox);
    j["en_text"] = blocks[c.en_block].text;
    j["en_bbox"] = bbox_json(blocks[c.en_block].bbox);
    j["similarity"] = c.similarity;
    j["gap_distance"] = c.gap_distance;
    j["normalized_gap"] = c.normalized_gap;
    j["score"] = c.score;
    j["selected"] = c.selected;
    rows.push_back(std::move(j));
  }
  return rows;
}

}  // namespace menucsi
