#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "disc_forge/error.hpp"
#include "disc_forge/timestamp.hpp"

namespace disc_forge {

using Json = nlohmann::ordered_json;
using TokenList = std::vector<std::string>;

namespace detail {

inline const Json& require_field(const Json& obj, const char* field, std::size_t line) {
  if (!obj.is_object()) throw FormatError(line, "", "record is not an object");
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw FormatError(line, field, "missing");
  return *it;
}

inline std::string get_string(const Json& obj, const char* field, std::size_t line) {
  const Json& v = require_field(obj, field, line);
  if (!v.is_string()) throw FormatError(line, field, "expected a string");
  return v.get<std::string>();
}

inline std::int64_t get_int(const Json& obj, const char* field, std::size_t line) {
  const Json& v = require_field(obj, field, line);
  if (!v.is_number_integer()) throw FormatError(line, field, "expected an integer");
  return v.get<std::int64_t>();
}

inline Timestamp get_timestamp(const Json& obj, const char* field, std::size_t line) {
  std::string text = get_string(obj, field, line);
  auto t = Timestamp::try_parse(text);
  if (!t) throw FormatError(line, field, "malformed timestamp '" + text + "'");
  return *t;
}

inline TokenList tokens_from(const Json& v, const char* field, std::size_t line) {
  if (!v.is_array()) throw FormatError(line, field, "expected an array of strings");
  TokenList out;
  out.reserve(v.size());
  for (const auto& t : v) {
    if (!t.is_string()) throw FormatError(line, field, "expected an array of strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

inline TokenList get_tokens(const Json& obj, const char* field, std::size_t line) {
  return tokens_from(require_field(obj, field, line), field, line);
}

inline std::optional<TokenList> get_optional_tokens(const Json& obj, const char* field,
                                                    std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return tokens_from(*it, field, line);
}

// Shortest round-tripping fixed-point rendering; never uses exponents.
inline std::string decimal(double v) {
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (res.ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes through a sibling temp file and renames, so readers never observe a
// half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot write '" + path.string() + "'");
  }
}

// Invokes fn(record, line_number) for each non-blank line. Line numbers are
// 1-based.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(lineno, "", std::string("invalid JSON: ") + e.what());
    }
    fn(rec, lineno);
  }
}

template <class Range, class ToJson>
void write_jsonl(const std::filesystem::path& path, const Range& records, ToJson to_json) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, Json::error_handler_t::strict);
    out += '\n';
  }
  write_file_atomic(path, out);
}

// Sorted list of regular files in dir whose name ends with suffix.
inline std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                                     std::string_view suffix) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(),
                                                     suffix) == 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace disc_forge
