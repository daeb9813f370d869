#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "menucsi/cache.hpp"
#include "menucsi/clock.hpp"

namespace menucsi {

enum class BackendKind { mt, chat, wiki };
enum class BackendApi { google, deepl, openai, wikipedia, mock };

struct BackendDescriptor {
  std::string backend_id;
  BackendKind kind = BackendKind::mt;
  BackendApi api = BackendApi::mock;
  std::string endpoint;
  std::string auth_env;        // name of the environment variable holding the key
  double rate_limit = 1.0;     // requests per second, > 0
  std::string model;           // chat only
  double temperature = 0.0;    // chat only
  std::string system_message;  // chat only, optional
  std::filesystem::path mock_table;
};

std::string_view kind_name(BackendKind k);
std::string_view api_name(BackendApi a);
std::optional<BackendKind> parse_kind(std::string_view s);
std::optional<BackendApi> parse_api(std::string_view s);

class BackendError : public std::runtime_error {
 public:
  enum class Reason { network, auth, http, empty_response, truncated, bad_response, cache_miss };

  BackendError(std::string backend_id, Reason reason, std::string message);

  const std::string& backend_id() const { return backend_id_; }
  Reason reason() const { return reason_; }
  bool retryable() const;

 private:
  std::string backend_id_;
  Reason reason_;
};

// Spaces admissions at least 1/rate apart, so no sliding one-second window
// ever admits more than `rate` requests.
class RateLimiter {
 public:
  RateLimiter(double per_second, Clock& clock);
  void acquire();

 private:
  Clock& clock_;
  Clock::duration interval_;
  std::mutex mu_;
  std::optional<Clock::time_point> next_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
};

struct BackendResponse {
  std::string text;
  std::string created_at;
  bool from_cache = false;
};

struct CallStats {
  std::size_t upstream_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

// Total upstream invocations (HTTP or mock) in this process.
std::size_t upstream_call_count();
// Total HTTP requests issued in this process.
std::size_t http_request_count();

// ---------------------------------------------------------------------------
// Upstreams: the uncached producers of responses.

class MtUpstream {
 public:
  virtual ~MtUpstream() = default;
  virtual std::string translate(std::string_view text, std::string_view src_lang, std::string_view tgt_lang) = 0;
};

struct ChatParams {
  std::string model;
  double temperature = 0.0;
  std::string system_message;
};

class ChatUpstream {
 public:
  virtual ~ChatUpstream() = default;
  // Throws BackendError(truncated) if the completion was cut off.
  virtual std::string complete(std::string_view prompt, const ChatParams& params) = 0;
};

struct WikiPage {
  bool exists = false;
  std::vector<std::string> sections;
};

class WikiUpstream {
 public:
  virtual ~WikiUpstream() = default;
  virtual WikiPage sections(std::string_view term, std::string_view edition) = 0;
};

// ---------------------------------------------------------------------------
// Clients: cache first, then rate-limited upstream with retries.

enum class CacheMode { read_write, cache_only };

struct ClientOptions {
  CacheMode mode = CacheMode::read_write;
  RetryPolicy retry;
  Clock* clock = nullptr;  // defaults to the system clock
};

class CachedCaller {
 public:
  CachedCaller(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache, ClientOptions options,
               bool has_upstream);

  // Looks up (op, input) in the cache; on a miss calls `fetch` under the rate
  // limit and retry policy and stores the result.
  BackendResponse call(std::string_view op, std::string_view normalized_input,
                       const std::function<std::string()>& fetch);

  const BackendDescriptor& descriptor() const { return desc_; }
  CallStats stats() const;

 private:
  BackendDescriptor desc_;
  std::shared_ptr<ResponseCache> cache_;
  ClientOptions options_;
  Clock& clock_;
  RateLimiter limiter_;
  bool has_upstream_;
  std::atomic<std::size_t> upstream_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

class MtClient {
 public:
  MtClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
           std::unique_ptr<MtUpstream> upstream, ClientOptions options = {});

  BackendResponse translate(std::string_view text, std::string_view src_lang, std::string_view tgt_lang);

  const std::string& id() const { return caller_.descriptor().backend_id; }
  CallStats stats() const { return caller_.stats(); }

 private:
  std::unique_ptr<MtUpstream> upstream_;
  CachedCaller caller_;
};

class ChatClient {
 public:
  ChatClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
             std::unique_ptr<ChatUpstream> upstream, ClientOptions options = {});

  // Temperature and model come from the descriptor (default temperature 0,
  // one completion). Empty or truncated completions are retried.
  BackendResponse complete(std::string_view prompt);

  const std::string& id() const { return caller_.descriptor().backend_id; }
  CallStats stats() const { return caller_.stats(); }

 private:
  std::unique_ptr<ChatUpstream> upstream_;
  CachedCaller caller_;
};

enum class WikiStatus { found, no_section, no_page, unknown };
std::string_view wiki_status_name(WikiStatus s);

struct HistoryLookup {
  bool has_history = false;
  WikiStatus status = WikiStatus::unknown;
};

struct WikiOptions {
  std::vector<std::string> editions{"zh", "en"};
  std::vector<std::string> history_titles{"历史", "歷史", "History"};
};

class WikiClient {
 public:
  WikiClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
             std::unique_ptr<WikiUpstream> upstream, ClientOptions options = {}, WikiOptions wiki = {});

  // Editions are tried in order until one yields a page with a history
  // section. Network failures give {false, unknown} and are not cached;
  // a miss in cache-only mode throws BackendError(cache_miss).
  HistoryLookup has_history_section(std::string_view term);

  const std::string& id() const { return caller_.descriptor().backend_id; }
  CallStats stats() const { return caller_.stats(); }

 private:
  std::unique_ptr<WikiUpstream> upstream_;
  CachedCaller caller_;
  WikiOptions wiki_;
};

// ---------------------------------------------------------------------------
// Mocks. Deterministic upstreams for tests and offline fixtures.

class MockMt final : public MtUpstream {
 public:
  explicit MockMt(std::map<std::string, std::string> table = {}) : table_(std::move(table)) {}
  // TSV `source<TAB>translation`.
  static std::unique_ptr<MockMt> from_tsv(const std::filesystem::path& path);

  std::string translate(std::string_view text, std::string_view src_lang, std::string_view tgt_lang) override;

  void fail_next(int n) { failures_ = n; }
  std::size_t calls() const { return calls_; }

 private:
  std::map<std::string, std::string> table_;
  std::atomic<int> failures_{0};
  std::atomic<std::size_t> calls_{0};
};

class MockChat final : public ChatUpstream {
 public:
  using Responder = std::function<std::string(std::string_view prompt)>;
  explicit MockChat(Responder responder) : responder_(std::move(responder)) {}

  // TSV `dish<TAB>option1<TAB>option2<TAB>option3`. The responder finds the
  // longest tabled dish name in the prompt. Prompts asking for a BEST pick get
  // a numbered list with "BEST: 2"; others get "FINAL: option1".
  static std::unique_ptr<MockChat> from_tsv(const std::filesystem::path& path);

  std::string complete(std::string_view prompt, const ChatParams& params) override;

  void fail_next(int n) { failures_ = n; }
  std::size_t calls() const { return calls_; }

 private:
  Responder responder_;
  std::atomic<int> failures_{0};
  std::atomic<std::size_t> calls_{0};
};

class MockWiki final : public WikiUpstream {
 public:
  // Key: (edition, term). Missing key → no page.
  using Table = std::map<std::pair<std::string, std::string>, std::vector<std::string>>;
  explicit MockWiki(Table table = {}) : table_(std::move(table)) {}
  // TSV `edition<TAB>term<TAB>section|section|...`.
  static std::unique_ptr<MockWiki> from_tsv(const std::filesystem::path& path);

  WikiPage sections(std::string_view term, std::string_view edition) override;

  void set_offline(bool offline) { offline_ = offline; }
  std::size_t calls() const { return calls_; }

 private:
  Table table_;
  std::atomic<bool> offline_{false};
  std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// HTTP upstreams for the supported vendor APIs.

std::unique_ptr<MtUpstream> make_http_mt(const BackendDescriptor& desc);
std::unique_ptr<ChatUpstream> make_http_chat(const BackendDescriptor& desc);
std::unique_ptr<WikiUpstream> make_http_wiki(const BackendDescriptor& desc);

// Replaces every occurrence of `secret` with "***".
std::string redact(std::string_view message, std::string_view secret);

}  // namespace menucsi
