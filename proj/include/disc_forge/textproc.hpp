#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disc_forge/corpus.hpp"
#include "disc_forge/error.hpp"

namespace disc_forge {

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// ASCII punctuation except '_', which belongs to identifiers.
inline bool is_punct(unsigned char c) {
  return c < 0x80 && c != '_' &&
         ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
          (c >= '{' && c <= '~'));
}

inline bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
// Non-ASCII bytes count as lowercase letters so multi-byte characters are
// never split.
inline bool is_lower(unsigned char c) { return (c >= 'a' && c <= 'z') || c >= 0x80; }

inline bool starts_with(std::string_view s, std::string_view p) {
  return s.substr(0, p.size()) == p;
}

}  // namespace detail

// Splits on whitespace and punctuation; each punctuation character is a token.
inline TokenList code_tokenize(std::string_view text) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_space(c)) {
      ++i;
    } else if (detail::is_punct(c)) {
      out.emplace_back(1, text[i]);
      ++i;
    } else {
      std::size_t start = i;
      while (i < text.size()) {
        auto d = static_cast<unsigned char>(text[i]);
        if (detail::is_space(d) || detail::is_punct(d)) break;
        ++i;
      }
      out.emplace_back(text.substr(start, i - start));
    }
  }
  return out;
}

// Splits one code token at camelCase, snake_case and letter/digit
// boundaries. Underscores are dropped; all-caps runs stay whole except that
// the last capital before a lowercase letter starts a new piece
// ("HTMLParser" -> "HTML", "Parser").
inline void split_identifier(std::string_view token, TokenList& out) {
  using namespace detail;
  std::string piece;
  auto flush = [&] {
    if (!piece.empty()) out.push_back(std::move(piece));
    piece.clear();
  };
  for (std::size_t i = 0; i < token.size(); ++i) {
    auto c = static_cast<unsigned char>(token[i]);
    if (c == '_') {
      flush();
      continue;
    }
    if (!piece.empty()) {
      auto prev = static_cast<unsigned char>(piece.back());
      bool boundary = is_digit(prev) != is_digit(c) ||
                      (is_lower(prev) && is_upper(c)) ||
                      (is_upper(prev) && is_upper(c) && i + 1 < token.size() &&
                       is_lower(static_cast<unsigned char>(token[i + 1])) &&
                       !is_digit(static_cast<unsigned char>(token[i + 1])));
      if (boundary) flush();
    }
    piece.push_back(token[i]);
  }
  flush();
}

inline TokenList subtokenize(std::string_view text) {
  TokenList out;
  for (const auto& tok : code_tokenize(text)) {
    if (tok.size() == 1 && detail::is_punct(static_cast<unsigned char>(tok[0])))
      out.push_back(tok);
    else
      split_identifier(tok, out);
  }
  return out;
}

namespace detail {

// Link and image syntax become "text url"; autolinks become the bare URL;
// emphasis markers are removed.
inline std::string strip_inline_markdown(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '[' || (c == '!' && i + 1 < s.size() && s[i + 1] == '[')) {
      std::size_t open = c == '!' ? i + 1 : i;
      std::size_t close = s.find(']', open + 1);
      if (close != std::string_view::npos && close + 1 < s.size() && s[close + 1] == '(') {
        std::size_t end = s.find(')', close + 2);
        if (end != std::string_view::npos) {
          std::string_view text = s.substr(open + 1, close - open - 1);
          std::string_view target = s.substr(close + 2, end - close - 2);
          // drop an optional "title" after the URL
          if (auto sp = target.find_first_of(" \t"); sp != std::string_view::npos)
            target = target.substr(0, sp);
          out += strip_inline_markdown(text);
          out += ' ';
          out += target;
          out += ' ';
          i = end + 1;
          continue;
        }
      }
    }
    if (c == '<') {
      std::size_t end = s.find('>', i + 1);
      if (end != std::string_view::npos) {
        std::string_view inner = s.substr(i + 1, end - i - 1);
        if (starts_with(inner, "http://") || starts_with(inner, "https://") ||
            starts_with(inner, "mailto:")) {
          out += ' ';
          out += inner;
          out += ' ';
          i = end + 1;
          continue;
        }
      }
    }
    if (c == '*' || (c == '~' && i + 1 < s.size() && s[i + 1] == '~')) {
      while (i < s.size() && s[i] == c) ++i;
      out += ' ';
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

// Inline code spans are kept verbatim; everything else is de-marked.
inline std::string strip_line_markdown(std::string_view line) {
  std::size_t lead = line.find_first_not_of(' ');
  if (lead == std::string_view::npos) return {};
  std::string_view body = line.substr(lead);
  if (lead < 4) {
    // thematic break
    if (body.find_first_not_of("-*_ ") == std::string_view::npos &&
        std::count_if(body.begin(), body.end(), [](char ch) { return ch != ' '; }) >= 3)
      return {};
    while (!body.empty() && body.front() == '>') {
      body.remove_prefix(1);
      body.remove_prefix(std::min(body.find_first_not_of(' '), body.size()));
    }
    std::size_t hashes = 0;
    while (hashes < body.size() && body[hashes] == '#') ++hashes;
    if (hashes >= 1 && hashes <= 6 && (hashes == body.size() || body[hashes] == ' '))
      body.remove_prefix(hashes);
    else if (body.size() >= 2 && (body[0] == '-' || body[0] == '*' || body[0] == '+') &&
             body[1] == ' ')
      body.remove_prefix(2);
  }
  std::string out;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t tick = body.find('`', i);
    if (tick == std::string_view::npos) {
      out += strip_inline_markdown(body.substr(i));
      break;
    }
    out += strip_inline_markdown(body.substr(i, tick - i));
    std::size_t run = tick;
    while (run < body.size() && body[run] == '`') ++run;
    std::string_view ticks = body.substr(tick, run - tick);
    std::size_t close = body.find(ticks, run);
    if (close == std::string_view::npos) {
      out += strip_inline_markdown(body.substr(tick));
      break;
    }
    out += ' ';
    out += body.substr(run, close - run);
    out += ' ';
    i = close + ticks.size();
  }
  return out;
}

}  // namespace detail

// Markdown body -> subtokens. Emphasis, headers, list markers and link syntax
// are stripped to their text (URLs kept). Inline code and fenced code blocks
// are kept verbatim. An unclosed fence turns the rest of the body into code
// and appends a warning when a sink is given.
inline TokenList process_discussion_text(std::string_view body,
                                         std::vector<std::string>* warnings = nullptr) {
  std::string text;
  char fence_char = 0;
  std::size_t fence_len = 0;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t nl = body.find('\n', pos);
    std::string_view line = body.substr(pos, nl == std::string_view::npos ? body.npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t lead = line.find_first_not_of(' ');
    std::string_view trimmed = lead == std::string_view::npos ? std::string_view{} : line.substr(lead);
    std::size_t run = 0;
    if (lead != std::string_view::npos && lead < 4 && !trimmed.empty() &&
        (trimmed[0] == '`' || trimmed[0] == '~')) {
      while (run < trimmed.size() && trimmed[run] == trimmed[0]) ++run;
      if (run < 3) run = 0;
    }
    if (fence_char == 0) {
      if (run > 0) {
        // opening fence; its info string (language tag) is not content
        fence_char = trimmed[0];
        fence_len = run;
      } else {
        text += detail::strip_line_markdown(line);
      }
    } else {
      bool closes = run >= fence_len && trimmed[0] == fence_char &&
                    trimmed.find_first_not_of(" \t", run) == std::string_view::npos;
      if (closes)
        fence_char = 0;
      else
        text += line;
    }
    text += '\n';
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (fence_char != 0 && warnings)
    warnings->push_back("unbalanced code fence; remainder of body treated as code");
  return subtokenize(text);
}

// Joins non-empty parts with a single "<s>" token.
inline TokenList concat_with_separator(std::span<const TokenList> parts) {
  TokenList out;
  for (const auto& part : parts) {
    if (part.empty()) continue;
    if (!out.empty()) out.emplace_back(kSeparator);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

inline TokenList concat_with_separator(std::initializer_list<TokenList> parts) {
  return concat_with_separator(std::span<const TokenList>(parts.begin(), parts.size()));
}

inline TokenList truncate_from_end(TokenList tokens, std::size_t limit) {
  if (limit < 1) throw ConfigError("token limit must be at least 1");
  if (tokens.size() > limit) tokens.resize(limit);
  return tokens;
}

}  // namespace disc_forge
