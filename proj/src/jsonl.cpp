#include "menucsi/jsonl.hpp"

#include <fstream>

namespace menucsi {

DataError::DataError(std::string path, std::size_t line, std::string record_id, std::string message)
    : std::runtime_error([&] {
        std::string what = path;
        if (line > 0) what += ":" + std::to_string(line);
        if (!record_id.empty()) what += " [" + record_id + "]";
        return what + ": " + message;
      }()),
      path_(std::move(path)),
      line_(line),
      record_id_(std::move(record_id)) {}

void read_jsonl(const std::filesystem::path& path,
                const std::function<void(std::size_t, const ojson&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError(path.string(), 0, "", "cannot open file");
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ojson row;
    try {
      row = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw DataError(path.string(), line_no, "", std::string("malformed JSON: ") + e.what());
    }
    if (!row.is_object()) {
      throw DataError(path.string(), line_no, "", "line is not a JSON object");
    }
    fn(line_no, row);
  }
}

std::string dump_line(const ojson& row) {
  return row.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

void write_jsonl(const std::filesystem::path& path, std::span<const ojson> rows) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  for (const auto& row : rows) {
    out << dump_line(row) << '\n';
  }
  out.flush();
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace menucsi
