#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "menucsi/identify.hpp"
#include "menucsi/text.hpp"
#include "test_support.hpp"

using namespace menucsi;

namespace {

BackendDescriptor descriptor(std::string id, BackendKind kind) {
  BackendDescriptor d;
  d.backend_id = std::move(id);
  d.kind = kind;
  d.rate_limit = 100;
  return d;
}

struct Mocks {
  VirtualClock clock;
  ClientOptions opts{CacheMode::read_write, {}, &clock};
  MtClient forward;
  MtClient reverse;
  WikiClient wiki;

  Mocks(std::map<std::string, std::string> fwd, std::map<std::string, std::string> rev, MockWiki::Table pages)
      : forward(descriptor("fwd", BackendKind::mt), std::make_shared<ResponseCache>(),
                std::make_unique<MockMt>(std::move(fwd)), opts),
        reverse(descriptor("rev", BackendKind::mt), std::make_shared<ResponseCache>(),
                std::make_unique<MockMt>(std::move(rev)), opts),
        wiki(descriptor("wiki", BackendKind::wiki), std::make_shared<ResponseCache>(),
             std::make_unique<MockWiki>(std::move(pages)), opts) {}
};

Token tok(const char* s, std::size_t start) { return {s, start, text::length(s)}; }

}  // namespace

TEST_CASE("round trip returning the original flags nothing") {
  DictSegmenter seg(testing::dictionary({{"水煮", 50}, {"鱼", 80}, {"水", 10}, {"煮", 10}}));
  Mocks m({{"水煮鱼", "boiled fish"}}, {{"boiled fish", "水煮鱼"}}, {});
  auto r = rtt_check({.id = "E1", .zh_text = "水煮鱼"}, m.forward, m.reverse, seg);
  CHECK(r.forward == "boiled fish");
  CHECK(r.round_trip == "水煮鱼");
  CHECK(r.flags == std::vector<bool>{false, false});
}

TEST_CASE("phrase survives only when all nested words are omitted") {
  TokenList search{tok("水", 0), tok("水煮", 0), tok("煮", 1), tok("鱼", 2)};
  auto flags = rtt_survivors(search, {"煮", "鱼"});
  CHECK(flags == std::vector<bool>{true, false, false, false});
}

TEST_CASE("rtt survivors match the brute-force subtraction oracle") {
  std::mt19937 rng(242);
  const std::vector<std::string> vocab{"甲", "乙", "丙", "丁", "戊", "己", "庚", "辛"};
  for (int round = 0; round < 100; ++round) {
    std::uniform_int_distribution<int> len(1, 6), pick(0, int(vocab.size()) - 1);
    // Single characters plus a few random phrases over them.
    TokenList search;
    const int n = len(rng);
    std::string chars;
    for (int i = 0; i < n; ++i) search.push_back({vocab[pick(rng)], std::size_t(i), 1});
    for (int i = 0; i + 1 < n; ++i) {
      if (rng() % 2) search.push_back({search[i].surface + search[i + 1].surface, std::size_t(i), 2});
    }
    std::sort(search.begin(), search.end(), [](const Token& a, const Token& b) {
      return std::pair(a.start, a.length) < std::pair(b.start, b.length);
    });
    std::unordered_set<std::string> rtt;
    for (const auto& w : vocab) {
      if (rng() % 2) rtt.insert(w);
    }
    auto got = rtt_survivors(search, rtt);
    for (std::size_t i = 0; i < search.size(); ++i) {
      bool oracle = !rtt.count(search[i].surface);
      for (const auto& inner : search) {
        if (inner.start >= search[i].start && inner.end() <= search[i].end() && rtt.count(inner.surface)) {
          oracle = false;
        }
      }
      CHECK(got[i] == oracle);
    }
  }
}

TEST_CASE("empty round trip flags every word") {
  DictSegmenter seg(testing::dictionary({{"水煮", 50}, {"鱼", 80}}));
  Mocks m({{"水煮鱼", "???"}}, {{"???", "。"}}, {});
  auto r = rtt_check({.id = "E1", .zh_text = "水煮鱼"}, m.forward, m.reverse, seg);
  CHECK(r.empty_round_trip);
  CHECK(r.flags == std::vector<bool>{true, true});
}

TEST_CASE("uniform corpus: every inverse frequency is 1 and sits at the cutoff") {
  auto t = FreqTable::from_counts({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}});
  CHECK(t.cutoff() == 1.0);
  CHECK(t.inverse_frequency("a") == 1.0);
  CHECK(cu_check({"a", "b"}, t) == std::vector<bool>{false, false});
  CHECK(cu_check({"a", "b"}, t, true) == std::vector<bool>{true, true});
}

TEST_CASE("percentile uses linear interpolation at rank p(n-1)") {
  CHECK(percentile_linear({1, 2, 3, 4, 5}, 50) == 3.0);
  CHECK(percentile_linear({4, 1, 3, 2}, 95) == doctest::Approx(3.85));
  CHECK(percentile_linear({7}, 95) == 7.0);
  CHECK_THROWS(percentile_linear({}, 95));
}

TEST_CASE("cu flags: frequent words pass, unseen words are flagged below cutoff 1") {
  std::unordered_map<std::string, std::uint64_t> counts{{"鱼", 500}};
  for (int i = 0; i < 40; ++i) counts["w" + std::to_string(i)] = 5 + i % 3;
  auto t = FreqTable::from_counts(counts);
  CHECK(t.cutoff() == doctest::Approx(0.2));
  CHECK(cu_check({"鱼"}, t) == std::vector<bool>{false});
  CHECK(t.inverse_frequency("never") == 1.0);
  CHECK(cu_check({"never"}, t) == std::vector<bool>{true});
}

TEST_CASE("frequency table counts precise words over the corpus") {
  DictSegmenter seg(testing::dictionary({{"水煮", 50}, {"鱼", 80}, {"牛肉", 40}}));
  std::vector<MenuEntry> corpus{{.id = "1", .zh_text = "水煮鱼"}, {.id = "2", .zh_text = "水煮牛肉，"}};
  auto t = build_freq_table(corpus, seg);
  CHECK(t.count("水煮") == 2);
  CHECK(t.count("鱼") == 1);
  CHECK(t.count("，") == 0);
  CHECK_THROWS_AS(build_freq_table(std::span<const MenuEntry>{}, seg), std::invalid_argument);
}

TEST_CASE("history section check") {
  std::unordered_map<std::string, std::uint64_t> counts{{"佛跳墙", 2}, {"豆腐", 30}, {"麻婆", 3}};
  auto table = FreqTable::from_counts(counts);
  Mocks m({}, {}, {{{"zh", "佛跳墙"}, {"简介", "历史"}}, {{"zh", "豆腐"}, {"历史"}}, {{"zh", "麻婆"}, {"做法"}}});

  auto v = hs_check({"佛跳墙"}, "佛跳墙", m.wiki, table);
  CHECK(v[0].flag);
  CHECK(v[0].status == WikiStatus::found);

  // Generic words are never flagged, whatever the encyclopedia says.
  v = hs_check({"豆腐"}, "豆腐", m.wiki, table);
  CHECK_FALSE(v[0].flag);
  CHECK(v[0].generic);
  CHECK(v[0].status_name() == "generic");

  v = hs_check({"麻婆"}, "麻婆", m.wiki, table);
  CHECK_FALSE(v[0].flag);
  CHECK(v[0].status == WikiStatus::no_section);

  // The dish page's history section carries over to its non-generic words.
  v = hs_check({"麻婆", "豆腐"}, "佛跳墙", m.wiki, table);
  CHECK(v[0].flag);
  CHECK_FALSE(v[1].flag);
}

TEST_CASE("history check with no pages at all") {
  auto table = FreqTable::from_counts({{"甲", 1}, {"乙", 1}});
  Mocks m({}, {}, {});
  auto v = hs_check({"甲", "乙"}, "甲乙", m.wiki, table);
  CHECK_FALSE(v[0].flag);
  CHECK_FALSE(v[1].flag);
  CHECK(v[0].status == WikiStatus::no_page);
}

TEST_CASE("check list parsing") {
  CHECK(parse_checks("rtt,cu,hs") == CheckSet{true, true, true});
  CHECK(parse_checks("cu") == CheckSet{false, true, false});
  CHECK(parse_checks("hs, rtt") == CheckSet{true, false, true});
  CHECK(format_checks(parse_checks("hs,cu")) == "cu,hs");
  CHECK_THROWS_AS(parse_checks(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_checks("rtt,bogus"), std::invalid_argument);
}

TEST_CASE("majority vote") {
  const CheckSet all;
  CHECK(combine_votes(true, true, false, all));
  CHECK_FALSE(combine_votes(true, false, false, all));
  for (int mask = 0; mask < 8; ++mask) {
    bool a = mask & 1, b = mask & 2, c = mask & 4;
    CHECK(combine_votes(a, b, c, all) == (int(a) + int(b) + int(c) >= 2));
  }
  CHECK(combine_votes(false, true, false, CheckSet{false, true, false}));
  CHECK_FALSE(combine_votes(true, false, true, CheckSet{true, true, false}));
}

TEST_CASE("spans are maximal runs of flagged words") {
  std::vector<WordFlags> words(4);
  const char* s[] = {"招牌", "麻婆", "豆腐", "饭"};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    words[i].surface = s[i];
    words[i].start = pos;
    pos += text::length(s[i]);
    words[i].end = pos;
  }
  words[1].combined = words[2].combined = true;
  words[3].rtt = true;
  auto spans = assemble_spans(words);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == CsiSpan{2, 6, "麻婆豆腐"});
  CHECK(assemble_spans(words, FlagSource::rtt) == std::vector<CsiSpan>{{6, 7, "饭"}});
}

TEST_CASE("combined identification wires the three checks") {
  DictSegmenter seg(testing::dictionary({{"宫保", 20}, {"鸡丁", 40}, {"招牌", 100}}));
  auto table = FreqTable::from_counts({{"宫保", 1}, {"鸡丁", 40}, {"招牌", 60}, {"x1", 9}, {"x2", 8}});
  Mocks m({{"招牌宫保鸡丁", "signature kung pao chicken"}}, {{"signature kung pao chicken", "招牌功夫鸡丁"}},
          {{{"zh", "宫保"}, {"历史"}}});
  IdentifyContext ctx{seg, table, &m.forward, &m.reverse, &m.wiki, {}};
  auto p = combined_identify({.id = "E1", .zh_text = "招牌宫保鸡丁"}, ctx);
  REQUIRE(p.words.size() == 3);
  CHECK(p.words[1].surface == "宫保");
  CHECK(p.words[1].rtt);
  CHECK(p.words[1].cu);
  CHECK(p.words[1].hs);
  CHECK(p.words[1].combined);
  CHECK_FALSE(p.words[0].combined);
  CHECK_FALSE(p.words[2].combined);
  CHECK(p.is_csi);
  CHECK(p.spans == std::vector<CsiSpan>{{2, 4, "宫保"}});
  CHECK(p.errors.empty());
  CHECK(p.rtt_round_trip == "招牌功夫鸡丁");

  SUBCASE("a single enabled check decides alone") {
    ctx.config.checks = parse_checks("cu");
    auto q = combined_identify({.id = "E1", .zh_text = "招牌宫保鸡丁"}, ctx);
    CHECK(q.words[1].combined);
    CHECK_FALSE(q.words[1].rtt);
    CHECK(q.words[1].hs_status == "skipped");
  }
  SUBCASE("a failing backend is recorded and votes false") {
    Mocks broken({}, {}, {});
    IdentifyContext bad{seg, table, &broken.forward, &broken.reverse, &m.wiki, {}};
    auto q = combined_identify({.id = "E2", .zh_text = "招牌宫保鸡丁"}, bad);
    REQUIRE(q.errors.size() == 1);
    CHECK(q.errors[0].rfind("rtt: ", 0) == 0);
    CHECK_FALSE(q.words[1].rtt);
    CHECK(q.words[1].combined);  // cu and hs still agree
  }
}

TEST_CASE("prediction json round trip") {
  CsiPrediction p;
  p.entry_id = "E7";
  p.checks = parse_checks("rtt,hs");
  p.words = {{"麻婆", 0, 2, true, true, false, true, "found", true}, {"，", 2, 3, false}};
  p.spans = {{0, 2, "麻婆"}};
  p.is_csi = true;
  p.rtt_forward = "mapo";
  p.rtt_round_trip = "麻婆";
  p.errors = {"hs: boom"};
  CHECK(prediction_from_json(to_json(p)) == p);
}
