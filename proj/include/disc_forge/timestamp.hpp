#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "disc_forge/error.hpp"

namespace disc_forge {

// UTC instant with second precision. Serialized as "YYYY-MM-DDTHH:MM:SSZ";
// that form sorts lexicographically in time order, so comparing canonical
// strings and comparing seconds agree.
class Timestamp {
 public:
  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::int64_t epoch_seconds) : secs_(epoch_seconds) {}

  constexpr std::int64_t epoch_seconds() const noexcept { return secs_; }

  // Accepts "YYYY-MM-DDTHH:MM:SS" followed by optional fractional seconds
  // (truncated) and a zone designator: "Z", "+HH:MM", "-HH:MM", "+HHMM".
  // A space may replace the 'T'. Returns nullopt on anything else.
  static std::optional<Timestamp> try_parse(std::string_view text) {
    using namespace std::chrono;
    auto digits = [&](std::size_t pos, std::size_t n, int& out) {
      if (pos + n > text.size()) return false;
      int v = 0;
      for (std::size_t i = pos; i < pos + n; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
      }
      out = v;
      return true;
    };
    int Y, M, D, h, m, s;
    if (text.size() < 19) return std::nullopt;
    if (!digits(0, 4, Y) || text[4] != '-' || !digits(5, 2, M) || text[7] != '-' ||
        !digits(8, 2, D) || (text[10] != 'T' && text[10] != 't' && text[10] != ' ') ||
        !digits(11, 2, h) || text[13] != ':' || !digits(14, 2, m) || text[16] != ':' ||
        !digits(17, 2, s))
      return std::nullopt;
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
    int offset_minutes = 0;
    if (pos == text.size()) return std::nullopt;  // zone designator is mandatory
    if (text[pos] == 'Z' || text[pos] == 'z') {
      ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
      int sign = text[pos] == '-' ? -1 : 1;
      int oh, om;
      if (!digits(pos + 1, 2, oh)) return std::nullopt;
      std::size_t mpos = pos + 3;
      if (mpos < text.size() && text[mpos] == ':') ++mpos;
      if (!digits(mpos, 2, om)) return std::nullopt;
      if (oh > 23 || om > 59) return std::nullopt;
      offset_minutes = sign * (oh * 60 + om);
      pos = mpos + 2;
    } else {
      return std::nullopt;
    }
    if (pos != text.size()) return std::nullopt;
    if (h > 23 || m > 59 || s > 59) return std::nullopt;
    year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
    if (!ymd.ok()) return std::nullopt;
    std::int64_t days = sys_days{ymd}.time_since_epoch().count();
    return Timestamp{days * 86400 + h * 3600 + m * 60 + s - offset_minutes * 60};
  }

  static Timestamp parse(std::string_view text) {
    if (auto t = try_parse(text)) return *t;
    throw FormatError(0, "", "malformed timestamp '" + std::string(text) + "'");
  }

  std::string str() const {
    using namespace std::chrono;
    std::int64_t days = secs_ >= 0 ? secs_ / 86400 : (secs_ - 86399) / 86400;
    std::int64_t rem = secs_ - days * 86400;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
                  static_cast<int>(rem % 60));
    return buf;
  }

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  std::int64_t secs_ = 0;
};

}  // namespace disc_forge
