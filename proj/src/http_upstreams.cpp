#include <cstdlib>
#include <memory>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "backend_detail.hpp"
#include "menucsi/backends.hpp"
#include "menucsi/jsonl.hpp"

namespace menucsi {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& backend_id, const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw BackendError(backend_id, BackendError::Reason::bad_response, "endpoint is not an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Shared request plumbing: auth lookup, status mapping, redacted logging.
class HttpBase {
 public:
  explicit HttpBase(BackendDescriptor desc) : desc_(std::move(desc)) {}

 protected:
  std::string api_key() const {
    if (desc_.auth_env.empty()) return {};
    const char* v = std::getenv(desc_.auth_env.c_str());
    if (v == nullptr || *v == '\0') {
      throw BackendError(desc_.backend_id, BackendError::Reason::auth,
                         "environment variable " + desc_.auth_env + " is not set");
    }
    return v;
  }

  ojson send(const std::string& url, const std::string& method, const httplib::Headers& headers,
             const std::string& body, const std::string& secret) const {
    Endpoint ep = split_endpoint(desc_.backend_id, url);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    detail::count_http_request();
    spdlog::debug("{}: {} {} {}", desc_.backend_id, method, redact(url, secret), redact(body, secret));

    httplib::Result res = method == "GET" ? client.Get(ep.path, headers)
                                          : client.Post(ep.path, headers, body, "application/json");
    if (!res) {
      throw BackendError(desc_.backend_id, BackendError::Reason::network,
                         "request failed: " + httplib::to_string(res.error()));
    }
    spdlog::debug("{}: HTTP {} {}", desc_.backend_id, res->status, redact(res->body, secret));
    if (res->status == 401 || res->status == 403) {
      throw BackendError(desc_.backend_id, BackendError::Reason::auth, "HTTP " + std::to_string(res->status));
    }
    if (res->status == 429 || res->status >= 500) {
      throw BackendError(desc_.backend_id, BackendError::Reason::http, "HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
      // Non-transient client error; the body may still carry a structured error.
      ojson j = ojson::parse(res->body, nullptr, false);
      if (!j.is_discarded() && j.is_object()) {
        j["__status"] = res->status;
        return j;
      }
      throw BackendError(desc_.backend_id, BackendError::Reason::bad_response,
                         "HTTP " + std::to_string(res->status));
    }
    ojson j = ojson::parse(res->body, nullptr, false);
    if (j.is_discarded()) {
      throw BackendError(desc_.backend_id, BackendError::Reason::bad_response, "response is not JSON");
    }
    return j;
  }

  [[noreturn]] void malformed(const std::string& what) const {
    throw BackendError(desc_.backend_id, BackendError::Reason::bad_response, "unexpected response shape: " + what);
  }

  BackendDescriptor desc_;
};

class GoogleMt final : public MtUpstream, HttpBase {
 public:
  using HttpBase::HttpBase;

  std::string translate(std::string_view text, std::string_view src, std::string_view tgt) override {
    const std::string key = api_key();
    ojson body{{"q", text}, {"source", src}, {"target", tgt}, {"format", "text"}};
    httplib::Headers headers{{"X-Goog-Api-Key", key}};
    ojson j = send(desc_.endpoint, "POST", headers, body.dump(), key);
    try {
      return j.at("data").at("translations").at(0).at("translatedText").get<std::string>();
    } catch (const ojson::exception&) {
      malformed("data.translations[0].translatedText");
    }
  }
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

class DeeplMt final : public MtUpstream, HttpBase {
 public:
  using HttpBase::HttpBase;

  std::string translate(std::string_view text, std::string_view src, std::string_view tgt) override {
    const std::string key = api_key();
    ojson body{{"text", ojson::array({text})}, {"source_lang", upper(src)}, {"target_lang", upper(tgt)}};
    httplib::Headers headers{{"Authorization", "DeepL-Auth-Key " + key}};
    ojson j = send(desc_.endpoint, "POST", headers, body.dump(), key);
    try {
      return j.at("translations").at(0).at("text").get<std::string>();
    } catch (const ojson::exception&) {
      malformed("translations[0].text");
    }
  }
};

class OpenAiChat final : public ChatUpstream, HttpBase {
 public:
  using HttpBase::HttpBase;

  std::string complete(std::string_view prompt, const ChatParams& params) override {
    const std::string key = api_key();
    ojson messages = ojson::array();
    if (!params.system_message.empty()) {
      messages.push_back({{"role", "system"}, {"content", params.system_message}});
    }
    messages.push_back({{"role", "user"}, {"content", prompt}});
    ojson body{{"model", params.model}, {"messages", messages}, {"temperature", params.temperature}, {"n", 1}};
    httplib::Headers headers{{"Authorization", "Bearer " + key}};
    ojson j = send(desc_.endpoint, "POST", headers, body.dump(), key);
    std::string content;
    std::string finish;
    try {
      const ojson& choice = j.at("choices").at(0);
      content = choice.at("message").at("content").get<std::string>();
      if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
        finish = choice["finish_reason"].get<std::string>();
      }
    } catch (const ojson::exception&) {
      malformed("choices[0].message.content");
    }
    if (finish == "length") {
      throw BackendError(desc_.backend_id, BackendError::Reason::truncated, "completion truncated");
    }
    return content;
  }
};

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

class WikipediaSections final : public WikiUpstream, HttpBase {
 public:
  using HttpBase::HttpBase;

  WikiPage sections(std::string_view term, std::string_view edition) override {
    std::string url = desc_.endpoint;
    if (auto pos = url.find("{edition}"); pos != std::string::npos) {
      url.replace(pos, 9, edition);
    }
    url += (url.find('?') == std::string::npos ? "?" : "&");
    url += "action=parse&prop=sections&format=json&formatversion=2&redirects=1&page=" + url_encode(term);
    httplib::Headers headers{{"User-Agent", "menucsi/1.0 (dish-name research tool)"}};
    ojson j = send(url, "GET", headers, "", "");
    if (j.contains("error")) {
      const std::string code = j["error"].value("code", "");
      if (code == "missingtitle" || code == "invalidtitle") return {false, {}};
      throw BackendError(desc_.backend_id, BackendError::Reason::bad_response, "wiki error " + code);
    }
    WikiPage page;
    try {
      page.exists = true;
      for (const auto& s : j.at("parse").at("sections")) {
        page.sections.push_back(s.at("line").get<std::string>());
      }
    } catch (const ojson::exception&) {
      malformed("parse.sections[].line");
    }
    return page;
  }
};

}  // namespace

std::unique_ptr<MtUpstream> make_http_mt(const BackendDescriptor& desc) {
  switch (desc.api) {
    case BackendApi::google: return std::make_unique<GoogleMt>(desc);
    case BackendApi::deepl: return std::make_unique<DeeplMt>(desc);
    default:
      throw std::invalid_argument("backend " + desc.backend_id + ": api " + std::string(api_name(desc.api)) +
                                  " cannot serve kind mt");
  }
}

std::unique_ptr<ChatUpstream> make_http_chat(const BackendDescriptor& desc) {
  if (desc.api != BackendApi::openai) {
    throw std::invalid_argument("backend " + desc.backend_id + ": api " + std::string(api_name(desc.api)) +
                                " cannot serve kind chat");
  }
  return std::make_unique<OpenAiChat>(desc);
}

std::unique_ptr<WikiUpstream> make_http_wiki(const BackendDescriptor& desc) {
  if (desc.api != BackendApi::wikipedia) {
    throw std::invalid_argument("backend " + desc.backend_id + ": api " + std::string(api_name(desc.api)) +
                                " cannot serve kind wiki");
  }
  return std::make_unique<WikipediaSections>(desc);
}

}  // namespace menucsi
