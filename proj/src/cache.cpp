#include "menucsi/cache.hpp"

#include <mutex>

#include <openssl/evp.h>

#include "json_fields.hpp"
#include "menucsi/jsonl.hpp"
#include "menucsi/text.hpp"

namespace menucsi {

std::string normalize_input(std::string_view input) {
  return text::trim(text::nfc(input));
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string cache_key(std::string_view backend_id, std::string_view op, std::string_view normalized_input) {
  std::string material;
  material.reserve(backend_id.size() + op.size() + normalized_input.size() + 2);
  material.append(backend_id).push_back('\x1f');
  material.append(op).push_back('\x1f');
  material.append(normalized_input);
  return sha256_hex(material);
}

std::filesystem::path ResponseCache::file_for(const std::filesystem::path& dir, std::string_view backend_id) {
  return dir / (std::string(backend_id) + ".jsonl");
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(file_)) return;
  read_jsonl(file_, [&](std::size_t line, const ojson& j) {
    CacheEntry e;
    try {
      e.key = detail::get_string(j, "key");
      e.op = detail::get_string(j, "op");
      e.input = detail::get_string(j, "input");
      e.value = detail::get_string(j, "value");
      e.created_at = detail::get_string(j, "created_at");
    } catch (const std::invalid_argument& err) {
      throw DataError(file_.string(), line, "", err.what());
    }
    entries_.emplace(e.key, std::move(e));
  });
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const CacheEntry& entry) {
  std::unique_lock lock(mu_);
  if (entries_.contains(entry.key)) return;
  if (!file_.empty()) {
    if (!out_.is_open()) {
      if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
      out_.open(file_, std::ios::binary | std::ios::app);
      if (!out_) throw std::runtime_error("cannot open cache file " + file_.string());
    }
    ojson j;
    j["key"] = entry.key;
    j["op"] = entry.op;
    j["input"] = entry.input;
    j["value"] = entry.value;
    j["created_at"] = entry.created_at;
    out_ << dump_line(j) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("cache write failed: " + file_.string());
  }
  entries_.emplace(entry.key, entry);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

}  // namespace menucsi
