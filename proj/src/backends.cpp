#include "menucsi/backends.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "backend_detail.hpp"
#include "menucsi/jsonl.hpp"
#include "menucsi/text.hpp"

namespace menucsi {

namespace {
std::atomic<std::size_t> g_upstream_calls{0};
std::atomic<std::size_t> g_http_requests{0};
}  // namespace

void detail::count_http_request() { ++g_http_requests; }

std::size_t upstream_call_count() { return g_upstream_calls.load(); }
std::size_t http_request_count() { return g_http_requests.load(); }

std::string_view kind_name(BackendKind k) {
  switch (k) {
    case BackendKind::mt: return "mt";
    case BackendKind::chat: return "chat";
    case BackendKind::wiki: return "wiki";
  }
  return "mt";
}

std::string_view api_name(BackendApi a) {
  switch (a) {
    case BackendApi::google: return "google";
    case BackendApi::deepl: return "deepl";
    case BackendApi::openai: return "openai";
    case BackendApi::wikipedia: return "wikipedia";
    case BackendApi::mock: return "mock";
  }
  return "mock";
}

std::optional<BackendKind> parse_kind(std::string_view s) {
  for (auto k : {BackendKind::mt, BackendKind::chat, BackendKind::wiki}) {
    if (kind_name(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<BackendApi> parse_api(std::string_view s) {
  for (auto a : {BackendApi::google, BackendApi::deepl, BackendApi::openai, BackendApi::wikipedia,
                 BackendApi::mock}) {
    if (api_name(a) == s) return a;
  }
  return std::nullopt;
}

std::string_view wiki_status_name(WikiStatus s) {
  switch (s) {
    case WikiStatus::found: return "found";
    case WikiStatus::no_section: return "no_section";
    case WikiStatus::no_page: return "no_page";
    case WikiStatus::unknown: return "unknown";
  }
  return "unknown";
}

BackendError::BackendError(std::string backend_id, Reason reason, std::string message)
    : std::runtime_error(backend_id + ": " + message), backend_id_(std::move(backend_id)), reason_(reason) {}

bool BackendError::retryable() const {
  switch (reason_) {
    case Reason::network:
    case Reason::http:
    case Reason::empty_response:
    case Reason::truncated:
      return true;
    default:
      return false;
  }
}

std::string redact(std::string_view message, std::string_view secret) {
  std::string out(message);
  if (secret.empty()) return out;
  for (std::size_t pos = out.find(secret); pos != std::string::npos; pos = out.find(secret, pos + 3)) {
    out.replace(pos, secret.size(), "***");
  }
  return out;
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double per_second, Clock& clock) : clock_(clock) {
  if (!(per_second > 0) || !std::isfinite(per_second)) {
    throw std::invalid_argument("rate_limit must be > 0");
  }
  interval_ = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / per_second));
}

void RateLimiter::acquire() {
  Clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = clock_.now();
    slot = (next_ && *next_ > now) ? *next_ : now;
    next_ = slot + interval_;
  }
  clock_.sleep_until(slot);
}

// ---------------------------------------------------------------------------

CachedCaller::CachedCaller(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
                           ClientOptions options, bool has_upstream)
    : desc_(std::move(desc)),
      cache_(cache ? std::move(cache) : std::make_shared<ResponseCache>()),
      options_(options),
      clock_(options.clock ? *options.clock : system_clock()),
      limiter_(desc_.rate_limit, clock_),
      has_upstream_(has_upstream) {}

CallStats CachedCaller::stats() const {
  return {upstream_calls_.load(), cache_hits_.load(), retries_.load()};
}

BackendResponse CachedCaller::call(std::string_view op, std::string_view normalized_input,
                                   const std::function<std::string()>& fetch) {
  const std::string key = cache_key(desc_.backend_id, op, normalized_input);
  if (auto hit = cache_->get(key)) {
    ++cache_hits_;
    return {hit->value, hit->created_at, true};
  }
  if (options_.mode == CacheMode::cache_only || !has_upstream_) {
    throw BackendError(desc_.backend_id, BackendError::Reason::cache_miss,
                       "cache miss for key " + key + " (" + std::string(op) + ")");
  }

  const int attempts = std::max(1, options_.retry.max_attempts);
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire();
    ++upstream_calls_;
    ++g_upstream_calls;
    try {
      CacheEntry entry{key, std::string(op), std::string(normalized_input), fetch(),
                       clock_.utc_timestamp()};
      cache_->put(entry);
      return {entry.value, entry.created_at, false};
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
      ++retries_;
      auto delay = std::chrono::duration<double, std::milli>(options_.retry.base_delay.count() *
                                                              std::pow(options_.retry.factor, attempt - 1));
      spdlog::warn("{}: attempt {} failed ({}); retrying", desc_.backend_id, attempt, e.what());
      clock_.sleep_for(std::chrono::duration_cast<Clock::duration>(delay));
    }
  }
}

// ---------------------------------------------------------------------------

MtClient::MtClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
                   std::unique_ptr<MtUpstream> upstream, ClientOptions options)
    : upstream_(std::move(upstream)), caller_(std::move(desc), std::move(cache), options, upstream_ != nullptr) {}

BackendResponse MtClient::translate(std::string_view text, std::string_view src_lang, std::string_view tgt_lang) {
  const std::string normalized = normalize_input(text);
  if (normalized.empty()) {
    throw BackendError(id(), BackendError::Reason::bad_response, "empty text to translate");
  }
  const std::string op = "translate:" + std::string(src_lang) + ">" + std::string(tgt_lang);
  return caller_.call(op, normalized, [&]() -> std::string {
    std::string out = upstream_->translate(normalized, src_lang, tgt_lang);
    if (text::trim(out).empty()) {
      throw BackendError(id(), BackendError::Reason::empty_response, "empty translation");
    }
    return out;
  });
}

ChatClient::ChatClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
                       std::unique_ptr<ChatUpstream> upstream, ClientOptions options)
    : upstream_(std::move(upstream)), caller_(std::move(desc), std::move(cache), options, upstream_ != nullptr) {}

BackendResponse ChatClient::complete(std::string_view prompt) {
  const std::string normalized = normalize_input(prompt);
  const auto& d = caller_.descriptor();
  ChatParams params{d.model, d.temperature, d.system_message};
  return caller_.call("complete", normalized, [&]() -> std::string {
    std::string out = upstream_->complete(normalized, params);
    if (text::trim(out).empty()) {
      throw BackendError(id(), BackendError::Reason::empty_response, "empty completion");
    }
    return out;
  });
}

WikiClient::WikiClient(BackendDescriptor desc, std::shared_ptr<ResponseCache> cache,
                       std::unique_ptr<WikiUpstream> upstream, ClientOptions options, WikiOptions wiki)
    : upstream_(std::move(upstream)),
      caller_(std::move(desc), std::move(cache), options, upstream_ != nullptr),
      wiki_(std::move(wiki)) {}

namespace {

std::string encode_page(const WikiPage& page) {
  ojson j;
  j["exists"] = page.exists;
  j["sections"] = page.sections;
  return dump_line(j);
}

WikiPage decode_page(const std::string& value) {
  ojson j = ojson::parse(value);
  WikiPage page;
  page.exists = j.at("exists").get<bool>();
  page.sections = j.at("sections").get<std::vector<std::string>>();
  return page;
}

}  // namespace

HistoryLookup WikiClient::has_history_section(std::string_view term) {
  const std::string normalized = normalize_input(term);
  if (normalized.empty()) {
    throw BackendError(id(), BackendError::Reason::bad_response, "empty wiki term");
  }
  bool any_page = false;
  bool any_unknown = false;
  for (const auto& edition : wiki_.editions) {
    BackendResponse r;
    try {
      r = caller_.call("sections:" + edition, normalized, [&]() -> std::string {
        return encode_page(upstream_->sections(normalized, edition));
      });
    } catch (const BackendError& e) {
      if (e.reason() == BackendError::Reason::cache_miss) throw;
      spdlog::warn("{}: history lookup for '{}' ({}) failed: {}", id(), normalized, edition, e.what());
      any_unknown = true;
      continue;
    }
    WikiPage page = decode_page(r.text);
    if (!page.exists) continue;
    any_page = true;
    for (const auto& section : page.sections) {
      const std::string s = text::ascii_lower(text::trim(section));
      for (const auto& title : wiki_.history_titles) {
        if (s == text::ascii_lower(title)) return {true, WikiStatus::found};
      }
    }
  }
  if (any_unknown) return {false, WikiStatus::unknown};
  return {false, any_page ? WikiStatus::no_section : WikiStatus::no_page};
}

// ---------------------------------------------------------------------------
// Mocks

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <typename Fn>
void read_tsv(const std::filesystem::path& path, std::size_t min_cols, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mock table " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, '\t');
    if (cols.size() < min_cols) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(min_cols) + " tab-separated columns");
    }
    fn(cols);
  }
}

}  // namespace

std::unique_ptr<MockMt> MockMt::from_tsv(const std::filesystem::path& path) {
  std::map<std::string, std::string> table;
  read_tsv(path, 2, [&](const std::vector<std::string>& c) { table[normalize_input(c[0])] = c[1]; });
  return std::make_unique<MockMt>(std::move(table));
}

std::string MockMt::translate(std::string_view text, std::string_view, std::string_view) {
  ++calls_;
  if (failures_ > 0) {
    --failures_;
    throw BackendError("mock-mt", BackendError::Reason::network, "injected failure");
  }
  auto it = table_.find(normalize_input(text));
  if (it == table_.end()) {
    throw BackendError("mock-mt", BackendError::Reason::bad_response,
                       "no mock translation for '" + std::string(text) + "'");
  }
  return it->second;
}

std::unique_ptr<MockChat> MockChat::from_tsv(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  read_tsv(path, 4, [&](const std::vector<std::string>& c) {
    rows.emplace_back(text::nfc(c[0]), std::vector<std::string>{c[1], c[2], c[3]});
  });
  // Longest dish names first so that a name containing another wins.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  return std::make_unique<MockChat>([rows = std::move(rows)](std::string_view prompt) {
    const bool wants_best = prompt.find("BEST:") != std::string_view::npos;
    for (const auto& [dish, options] : rows) {
      if (prompt.find(dish) == std::string_view::npos) continue;
      if (wants_best) {
        return "1. " + options[0] + "\n2. " + options[1] + "\n3. " + options[2] + "\nBEST: 2";
      }
      return "Here is the translation.\nFINAL: " + options[0];
    }
    return std::string("I cannot identify the dish.");
  });
}

std::string MockChat::complete(std::string_view prompt, const ChatParams&) {
  ++calls_;
  if (failures_ > 0) {
    --failures_;
    throw BackendError("mock-chat", BackendError::Reason::network, "injected failure");
  }
  return responder_(prompt);
}

std::unique_ptr<MockWiki> MockWiki::from_tsv(const std::filesystem::path& path) {
  Table table;
  read_tsv(path, 3, [&](const std::vector<std::string>& c) {
    std::vector<std::string> sections;
    for (auto& s : split(c[2], '|')) {
      if (!s.empty()) sections.push_back(s);
    }
    table[{c[0], normalize_input(c[1])}] = std::move(sections);
  });
  return std::make_unique<MockWiki>(std::move(table));
}

WikiPage MockWiki::sections(std::string_view term, std::string_view edition) {
  ++calls_;
  if (offline_) throw BackendError("mock-wiki", BackendError::Reason::network, "network unreachable");
  auto it = table_.find({std::string(edition), normalize_input(term)});
  if (it == table_.end()) return {false, {}};
  return {true, it->second};
}

}  // namespace menucsi
