#include <doctest.h>

#include <chrono>
#include <future>
#include <thread>

#include "menucsi/backends.hpp"
#include "test_support.hpp"

using namespace menucsi;
using namespace std::chrono_literals;

namespace {

BackendDescriptor descriptor(std::string id, BackendKind kind, double rate = 100) {
  BackendDescriptor d;
  d.backend_id = std::move(id);
  d.kind = kind;
  d.rate_limit = rate;
  return d;
}

// Chat upstream that fails a fixed number of times with a chosen reason.
class FlakyChat final : public ChatUpstream {
 public:
  FlakyChat(int failures, BackendError::Reason reason, std::string answer = "FINAL: X")
      : failures_(failures), reason_(reason), answer_(std::move(answer)) {}
  std::string complete(std::string_view, const ChatParams&) override {
    ++calls;
    if (failures_ > 0) {
      --failures_;
      if (reason_ == BackendError::Reason::empty_response) return "  ";
      throw BackendError("flaky", reason_, "injected");
    }
    return answer_;
  }
  int calls = 0;

 private:
  int failures_;
  BackendError::Reason reason_;
  std::string answer_;
};

}  // namespace

TEST_CASE("mock translation and the cache contract") {
  VirtualClock clock;
  auto cache = std::make_shared<ResponseCache>();
  auto upstream = std::make_unique<MockMt>(std::map<std::string, std::string>{{"水煮鱼", "boiled fish"}});
  MockMt* mock = upstream.get();
  MtClient mt(descriptor("mt", BackendKind::mt), cache, std::move(upstream), {CacheMode::read_write, {}, &clock});

  auto first = mt.translate("水煮鱼", "zh", "en");
  CHECK(first.text == "boiled fish");
  CHECK_FALSE(first.from_cache);
  CHECK(first.created_at == "2024-01-01T00:00:00Z");
  const auto before = upstream_call_count();
  auto second = mt.translate(" 水煮鱼", "zh", "en");
  CHECK(second.text == "boiled fish");
  CHECK(second.from_cache);
  CHECK(mock->calls() == 1);
  CHECK(upstream_call_count() == before);
  CHECK(mt.stats().cache_hits == 1);
}

TEST_CASE("cache-only miss names the key") {
  VirtualClock clock;
  MtClient mt(descriptor("mt", BackendKind::mt), std::make_shared<ResponseCache>(), std::make_unique<MockMt>(),
              {CacheMode::cache_only, {}, &clock});
  try {
    mt.translate("佛跳墙", "zh", "en");
    FAIL("expected a cache miss");
  } catch (const BackendError& e) {
    CHECK(e.reason() == BackendError::Reason::cache_miss);
    const std::string key = cache_key("mt", "translate:zh>en", "佛跳墙");
    CHECK(std::string(e.what()).find(key) != std::string::npos);
  }
}

TEST_CASE("mock chat echo") {
  VirtualClock clock;
  ChatClient chat(descriptor("chat", BackendKind::chat), std::make_shared<ResponseCache>(),
                  std::make_unique<MockChat>([](std::string_view) { return std::string("FINAL: X"); }),
                  {CacheMode::read_write, {}, &clock});
  CHECK(chat.complete("anything").text == "FINAL: X");
}

TEST_CASE("retry: two failures then success takes three attempts with backoff") {
  VirtualClock clock;
  auto up = std::make_unique<FlakyChat>(2, BackendError::Reason::network);
  FlakyChat* flaky = up.get();
  ChatClient chat(descriptor("chat", BackendKind::chat), std::make_shared<ResponseCache>(), std::move(up),
                  {CacheMode::read_write, {}, &clock});
  const auto t0 = clock.now();
  CHECK(chat.complete("p").text == "FINAL: X");
  CHECK(flaky->calls == 3);
  CHECK(chat.stats().retries == 2);
  CHECK(clock.now() - t0 >= 1500ms);  // 500 ms + 1000 ms
}

TEST_CASE("retry gives up after the third attempt") {
  VirtualClock clock;
  auto up = std::make_unique<FlakyChat>(3, BackendError::Reason::truncated);
  FlakyChat* flaky = up.get();
  ChatClient chat(descriptor("chat", BackendKind::chat), std::make_shared<ResponseCache>(), std::move(up),
                  {CacheMode::read_write, {}, &clock});
  CHECK_THROWS_AS(chat.complete("p"), BackendError);
  CHECK(flaky->calls == 3);
}

TEST_CASE("empty completions are retried, auth failures are not") {
  VirtualClock clock;
  auto up = std::make_unique<FlakyChat>(1, BackendError::Reason::empty_response);
  FlakyChat* flaky = up.get();
  ChatClient chat(descriptor("chat", BackendKind::chat), std::make_shared<ResponseCache>(), std::move(up),
                  {CacheMode::read_write, {}, &clock});
  CHECK(chat.complete("p").text == "FINAL: X");
  CHECK(flaky->calls == 2);

  auto up2 = std::make_unique<FlakyChat>(1, BackendError::Reason::auth);
  FlakyChat* flaky2 = up2.get();
  ChatClient chat2(descriptor("chat2", BackendKind::chat), std::make_shared<ResponseCache>(), std::move(up2),
                   {CacheMode::read_write, {}, &clock});
  CHECK_THROWS_AS(chat2.complete("p"), BackendError);
  CHECK(flaky2->calls == 1);
}

TEST_CASE("rate limiter spaces admissions on a virtual clock") {
  VirtualClock clock;
  RateLimiter limiter(4, clock);
  const auto t0 = clock.now();
  for (int i = 0; i < 9; ++i) limiter.acquire();
  CHECK(clock.now() - t0 == 2s);
  CHECK_THROWS_AS(RateLimiter(0, clock), std::invalid_argument);
}

TEST_CASE("rate limit 2/s with 10 concurrent calls takes at least 4.5 s of wall time") {
  auto cache = std::make_shared<ResponseCache>();
  std::map<std::string, std::string> table;
  for (int i = 0; i < 10; ++i) table["dish" + std::to_string(i)] = "t" + std::to_string(i);
  MtClient mt(descriptor("mt-real", BackendKind::mt, 2.0), cache, std::make_unique<MockMt>(table));
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::future<BackendResponse>> calls;
  for (int i = 0; i < 10; ++i) {
    calls.push_back(std::async(std::launch::async, [&mt, i] { return mt.translate("dish" + std::to_string(i), "zh", "en"); }));
  }
  for (int i = 0; i < 10; ++i) CHECK(calls[i].get().text == "t" + std::to_string(i));
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  CHECK(elapsed >= 4500ms);
  CHECK(mt.stats().retries == 0);
}

TEST_CASE("wiki history lookup statuses") {
  VirtualClock clock;
  MockWiki::Table pages{{{"zh", "佛跳墙"}, {"简介", "历史", "做法"}}, {{"zh", "豆腐"}, {"营养"}},
                        {{"en", "蚂蚁上树"}, {"Preparation", "History"}}};
  auto up = std::make_unique<MockWiki>(pages);
  MockWiki* mock = up.get();
  WikiClient wiki(descriptor("wiki", BackendKind::wiki), std::make_shared<ResponseCache>(), std::move(up),
                  {CacheMode::read_write, {}, &clock});

  auto r = wiki.has_history_section("佛跳墙");
  CHECK(r.has_history);
  CHECK(r.status == WikiStatus::found);
  CHECK(wiki.has_history_section("豆腐").status == WikiStatus::no_section);
  CHECK(wiki.has_history_section("不存在").status == WikiStatus::no_page);
  // Falls back to the next edition.
  CHECK(wiki.has_history_section("蚂蚁上树").has_history);

  // Cached lookups never re-fetch, even when the network is gone.
  const auto calls = mock->calls();
  mock->set_offline(true);
  CHECK(wiki.has_history_section("佛跳墙").has_history);
  CHECK(mock->calls() == calls);

  auto unknown = wiki.has_history_section("新词");
  CHECK_FALSE(unknown.has_history);
  CHECK(unknown.status == WikiStatus::unknown);
  CHECK(wiki_status_name(WikiStatus::no_page) == "no_page");
}

TEST_CASE("kind and api names") {
  CHECK(parse_kind("chat") == BackendKind::chat);
  CHECK(parse_api("deepl") == BackendApi::deepl);
  CHECK_FALSE(parse_api("bing").has_value());
  CHECK(kind_name(BackendKind::wiki) == "wiki");
  CHECK(api_name(BackendApi::openai) == "openai");
}

TEST_CASE("redaction") {
  CHECK(redact("key sk-123 rejected, sk-123 again", "sk-123") == "key *** rejected, *** again");
  CHECK(redact("nothing", "") == "nothing");
}

TEST_CASE("mock tables load from tsv") {
  testing::TempDir dir;
  testing::write_file(dir / "mt.tsv", "水煮鱼\tboiled fish\n");
  testing::write_file(dir / "chat.tsv", "粽子\tZongzi\tRice Dumpling\tSticky rice in leaves\n");
  testing::write_file(dir / "wiki.tsv", "zh\t佛跳墙\t简介|历史\n");
  CHECK(MockMt::from_tsv(dir / "mt.tsv")->translate("水煮鱼", "zh", "en") == "boiled fish");
  auto chat = MockChat::from_tsv(dir / "chat.tsv");
  CHECK(chat->complete("Translate 粽子. FINAL: <translation>", {}).find("FINAL: Zongzi") != std::string::npos);
  CHECK(chat->complete("three for 粽子 ... BEST: <number>", {}).find("BEST: 2") != std::string::npos);
  auto wiki = MockWiki::from_tsv(dir / "wiki.tsv");
  CHECK(wiki->sections("佛跳墙", "zh").sections == std::vector<std::string>{"简介", "历史"});
  CHECK_FALSE(wiki->sections("佛跳墙", "en").exists);
  testing::write_file(dir / "bad.tsv", "only-one-column\n");
  CHECK_THROWS(MockChat::from_tsv(dir / "bad.tsv"));
}
