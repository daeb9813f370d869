#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace menucsi {

using ojson = nlohmann::ordered_json;

// Input or invariant failure in a data file. Carries enough context to point
// the user at the offending line and record.
class DataError : public std::runtime_error {
 public:
  DataError(std::string path, std::size_t line, std::string record_id, std::string message);

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }
  const std::string& record_id() const { return record_id_; }

 private:
  std::string path_;
  std::size_t line_;
  std::string record_id_;
};

// Calls `fn(line_number, object)` for each non-blank line. Line numbers are 1-based.
void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const ojson&)>& fn);

// One compact object per line, UTF-8, no trailing whitespace. Empty span → empty file.
void write_jsonl(const std::filesystem::path& path, std::span<const ojson> rows);

std::string dump_line(const ojson& row);

}  // namespace menucsi
