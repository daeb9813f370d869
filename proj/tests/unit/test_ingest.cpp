#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "menucsi/backends.hpp"
#include "menucsi/ingest.hpp"
#include "test_support.hpp"

using namespace menucsi;

namespace {

OcrBlock block(std::string text, double x0, double y0, double x1, double y1, std::string page = "p1") {
  return {std::move(text), {x0, y0, x1, y1}, std::move(page)};
}

// Similarity looked up by (zh, en) text; 0 when absent.
SimilarityFn table_similarity(std::map<std::pair<std::string, std::string>, double> table) {
  return [table = std::move(table)](const OcrBlock& zh, const OcrBlock& en) {
    auto it = table.find({zh.text, en.text});
    return it == table.end() ? 0.0 : it->second;
  };
}

}  // namespace

TEST_CASE("price detection") {
  std::vector<OcrBlock> blocks{block("£12.50", 0, 0, 1, 1), block("12.00", 0, 0, 1, 1), block("est. 2023", 0, 0, 1, 1),
                               block("水煮鱼", 0, 0, 1, 1), block(" $8.80 ", 0, 0, 1, 1), block("1234.00", 0, 0, 1, 1)};
  auto anchors = detect_prices(blocks);
  REQUIRE(anchors.size() == 3);
  CHECK(anchors[0].block == 0);
  CHECK(anchors[0].value == 12.50);
  CHECK(anchors[0].pattern_id == "currency_dd.dd");
  CHECK(anchors[1].block == 1);
  CHECK(anchors[1].value == 12.00);
  CHECK(anchors[1].pattern_id == "dd.dd");
  CHECK(anchors[2].block == 4);

  std::vector<PricePattern> custom{{"yuan", "(\\d+)元"}};
  auto yuan = detect_prices(std::vector<OcrBlock>{block("38元", 0, 0, 1, 1)}, custom);
  REQUIRE(yuan.size() == 1);
  CHECK(yuan[0].value == 38);
}

TEST_CASE("script classes") {
  CHECK(classify_script("水煮鱼") == Script::chinese);
  CHECK(classify_script("Boiled Fish") == Script::english);
  CHECK(classify_script("£9.80") == Script::other);
  // Majority of letter scalars decides.
  CHECK(classify_script("Mapo 豆腐") == Script::english);
  CHECK(classify_script("Ma 豆腐") == Script::mixed);
  CHECK(classify_script("水煮鱼 ox") == Script::chinese);
  CHECK(classify_script("Ωμέγα") == Script::mixed);
  CHECK(script_name(Script::chinese) == "chinese");
}

TEST_CASE("token cosine") {
  CHECK(token_cosine("Boiled Fish", "boiled fish") == doctest::Approx(1.0));
  CHECK(token_cosine("boiled fish", "fried rice") == 0.0);
  CHECK(token_cosine("", "x") == 0.0);
  CHECK(token_cosine("a b", "a c") == doctest::Approx(0.5));
}

TEST_CASE("a single candidate pair is taken") {
  std::vector<OcrBlock> blocks{block("水煮鱼", 0, 90, 60, 110), block("Boiled Fish", 80, 90, 200, 110),
                               block("£12.50", 300, 95, 340, 105)};
  auto anchors = detect_prices(blocks);
  auto r = align(blocks, anchors, geometry_similarity());
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].id == "p1-001");
  CHECK(r.entries[0].zh_text == "水煮鱼");
  CHECK(r.entries[0].en_ref == "Boiled Fish");
  CHECK(r.entries[0].price == 12.50);
  CHECK(r.entries[0].source == EntrySource::ocr);
  REQUIRE(r.candidates.size() == 1);
  CHECK(r.candidates[0].selected);
  CHECK(r.skipped.empty());
}

TEST_CASE("the score trades similarity against gap") {
  std::vector<OcrBlock> blocks{block("水煮鱼", 0, 90, 60, 110), block("Boiled Fish", 80, 90, 200, 110),
                               block("Poached Fish", 80, 112, 200, 128), block("£12.50", 300, 95, 340, 105)};
  auto anchors = detect_prices(blocks);
  SUBCASE("equal similarity: the nearer english line wins") {
    auto r = align(blocks, anchors, table_similarity({{{"水煮鱼", "Boiled Fish"}, 0.9}, {{"水煮鱼", "Poached Fish"}, 0.9}}));
    CHECK(r.entries.at(0).en_ref == "Boiled Fish");
  }
  SUBCASE("higher similarity outweighs a slightly larger gap") {
    auto r = align(blocks, anchors, table_similarity({{{"水煮鱼", "Boiled Fish"}, 0.1}, {{"水煮鱼", "Poached Fish"}, 0.9}}));
    CHECK(r.entries.at(0).en_ref == "Poached Fish");
    const auto sel = std::count_if(r.candidates.begin(), r.candidates.end(), [](const auto& c) { return c.selected; });
    CHECK(sel == 1);
    for (const auto& c : r.candidates) {
      CHECK(c.score == doctest::Approx(c.similarity - 0.5 * c.normalized_gap));
    }
  }
}

TEST_CASE("an anchor without candidates is skipped") {
  std::vector<OcrBlock> blocks{block("水煮鱼", 0, 90, 60, 110), block("£12.50", 300, 95, 340, 105),
                               block("Boiled Fish", 80, 500, 200, 520)};
  auto anchors = detect_prices(blocks);
  auto r = align(blocks, anchors, geometry_similarity());
  CHECK(r.entries.empty());
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].reason.find("english") != std::string::npos);
  CHECK(align(std::vector<OcrBlock>{}, std::vector<PriceAnchor>{}, geometry_similarity()).entries.empty());
}

TEST_CASE("pages are aligned independently") {
  std::vector<OcrBlock> blocks{block("水煮鱼", 0, 90, 60, 110, "a"), block("£12.50", 300, 95, 340, 105, "a"),
                               block("Boiled Fish", 80, 90, 200, 110, "b"), block("£9.80", 300, 95, 340, 105, "b")};
  auto r = align(blocks, detect_prices(blocks), geometry_similarity());
  CHECK(r.entries.empty());
  CHECK(r.skipped.size() == 2);
}

TEST_CASE("block order does not change the result") {
  auto blocks = load_ocr(testing::fixture("ocr/page.json"));
  auto baseline = align(blocks, detect_prices(blocks), geometry_similarity()).entries;
  REQUIRE_FALSE(baseline.empty());
  std::mt19937 rng(7);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(blocks.begin(), blocks.end(), rng);
    CHECK(align(blocks, detect_prices(blocks), geometry_similarity()).entries == baseline);
  }
}

TEST_CASE("mt similarity translates the chinese line once per pair") {
  VirtualClock clock;
  BackendDescriptor d;
  d.backend_id = "mt";
  d.rate_limit = 100;
  auto up = std::make_unique<MockMt>(std::map<std::string, std::string>{{"水煮鱼", "Boiled Fish"}});
  MtClient mt(d, std::make_shared<ResponseCache>(), std::move(up), {CacheMode::read_write, {}, &clock});
  auto sim = mt_similarity(mt);
  CHECK(sim(block("水煮鱼", 0, 0, 1, 1), block("boiled fish", 0, 0, 1, 1)) == doctest::Approx(1.0));
  CHECK(sim(block("水煮鱼", 0, 0, 1, 1), block("Fried Rice", 0, 0, 1, 1)) == 0.0);
  CHECK(mt.stats().upstream_calls == 1);
}

TEST_CASE("OCR parse errors name the block") {
  auto doc = ojson::parse(R"([{"text":"水煮鱼","bbox":[0,0,10,10],"page_id":"p"},
                              {"text":"鱼香肉丝","bbox":[10,10,5,20],"page_id":"p"}])");
  try {
    parse_ocr(doc, "menu.json");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("鱼香肉丝") != std::string::npos);
    CHECK(what.find("block 1") != std::string::npos);
    CHECK(what.find("x_min < x_max") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_ocr(ojson::parse(R"([{"text":"a","bbox":[0,0,1],"page_id":"p"}])")), DataError);
  CHECK_THROWS_AS(parse_ocr(ojson::parse(R"([{"text":" ","bbox":[0,0,1,1],"page_id":"p"}])")), DataError);
  CHECK_THROWS_AS(parse_ocr(ojson::parse(R"({"text":"a"})")), DataError);
  CHECK(parse_ocr(ojson::array()).empty());
}

TEST_CASE("report rows mirror candidates") {
  std::vector<OcrBlock> blocks{block("水煮鱼", 0, 90, 60, 110), block("Boiled Fish", 80, 90, 200, 110),
                               block("£12.50", 300, 95, 340, 105)};
  auto anchors = detect_prices(blocks);
  auto r = align(blocks, anchors, geometry_similarity());
  auto rows = alignment_report(blocks, anchors, r);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["anchor_text"] == "£12.50");
  CHECK(rows[0]["selected"] == true);
  CHECK(rows[0]["zh_bbox"] == ojson::array({0.0, 90.0, 60.0, 110.0}));
}
