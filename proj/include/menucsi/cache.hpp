#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace menucsi {

struct CacheEntry {
  std::string key;
  std::string op;
  std::string input;
  std::string value;
  std::string created_at;

  bool operator==(const CacheEntry&) const = default;
};

// NFC + trim; applied to every input before hashing.
std::string normalize_input(std::string_view input);

std::string sha256_hex(std::string_view data);

// SHA-256 hex digest of (backend_id, op, normalized input).
std::string cache_key(std::string_view backend_id, std::string_view op, std::string_view normalized_input);

// Append-only JSONL response cache, one file per backend
// (`<dir>/<backend_id>.jsonl`). Entries are immutable once written; a second
// put for an existing key is ignored. Writes are serialized; lookups take a
// shared lock only.
class ResponseCache {
 public:
  // Loads the file if it exists. Throws DataError on a corrupt line.
  explicit ResponseCache(std::filesystem::path file);
  // In-memory cache with no backing file.
  ResponseCache() = default;

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheEntry> get(const std::string& key) const;
  void put(const CacheEntry& entry);

  std::size_t size() const;
  const std::filesystem::path& file() const { return file_; }

  static std::filesystem::path file_for(const std::filesystem::path& dir, std::string_view backend_id);

 private:
  std::filesystem::path file_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::ofstream out_;
};

}  // namespace menucsi
