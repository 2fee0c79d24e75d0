#include <gtest/gtest.h>

#include <random>

#include "disc_forge/textproc.hpp"
#include "test_support.hpp"

using namespace disc_forge;
using TL = TokenList;

TEST(CodeTokenize, SplitsPunctuation) {
  EXPECT_EQ(code_tokenize("sb.append(table);"), (TL{"sb", ".", "append", "(", "table", ")", ";"}));
  EXPECT_EQ(code_tokenize(""), TL{});
  EXPECT_EQ(code_tokenize("a  b"), (TL{"a", "b"}));
  EXPECT_EQ(code_tokenize("x_y+=1"), (TL{"x_y", "+", "=", "1"}));
  EXPECT_EQ(code_tokenize("  \t\n"), TL{});
  // literal separator text is not the separator token
  EXPECT_EQ(code_tokenize("a<s>b"), (TL{"a", "<", "s", ">", "b"}));
}

TEST(CodeTokenize, KeepsMultibyteCharactersTogether) {
  EXPECT_EQ(code_tokenize("naïve·ok"), (TL{"naïve·ok"}));
  EXPECT_EQ(code_tokenize("日本語 (x)"), (TL{"日本語", "(", "x", ")"}));
}

TEST(Subtokenize, CamelSnakeDigits) {
  EXPECT_EQ(subtokenize("emptyImplicitTable"), (TL{"empty", "Implicit", "Table"}));
  EXPECT_EQ(subtokenize("snake_case"), (TL{"snake", "case"}));
  EXPECT_EQ(subtokenize("HTML"), (TL{"HTML"}));
  EXPECT_EQ(subtokenize("HTMLParser"), (TL{"HTML", "Parser"}));
  EXPECT_EQ(subtokenize("toml4j"), (TL{"toml", "4", "j"}));
  EXPECT_EQ(subtokenize("__init__"), (TL{"init"}));
  EXPECT_EQ(subtokenize("_"), TL{});
  EXPECT_EQ(subtokenize("getX(); "), (TL{"get", "X", "(", ")", ";"}));
}

TEST(Subtokenize, AgreesWithRegexOracleOnRandomIdentifiers) {
  std::mt19937_64 rng(20240601);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
  std::uniform_int_distribution<std::size_t> len(1, 16), pick(0, alphabet.size() - 1);
  for (int i = 0; i < 100; ++i) {
    std::string id;
    for (std::size_t k = len(rng); k > 0; --k) id += alphabet[pick(rng)];
    EXPECT_EQ(subtokenize(id), disc_forge::testing::regex_subtokens(id)) << id;
  }
}

TEST(Subtokenize, RefinesCodeTokens) {
  for (std::string text : {"fooBar_baz(x1, HTTPServer2go);", "a.b_c.DEF_ghi"}) {
    for (const auto& tok : code_tokenize(text)) {
      std::string joined;
      TokenList pieces;
      split_identifier(tok, pieces);
      for (const auto& p : pieces) joined += p;
      std::string stripped = tok;
      std::erase(stripped, '_');
      if (tok.size() == 1 && !std::isalnum(static_cast<unsigned char>(tok[0])) && tok != "_")
        continue;
      EXPECT_EQ(joined, stripped) << tok;
    }
  }
}

TEST(ProcessDiscussionText, SentenceFromReport) {
  auto toks = process_discussion_text(
      "Some of the parsing exceptions thrown by toml4j contains trailing newlines");
  EXPECT_EQ(toks, (TL{"Some", "of", "the", "parsing", "exceptions", "thrown", "by", "toml", "4", "j",
                      "contains", "trailing", "newlines"}));
}

TEST(ProcessDiscussionText, FencedBlockKeptWithoutFences) {
  EXPECT_EQ(process_discussion_text("```\nint x;\n```"), (TL{"int", "x", ";"}));
  auto toks = process_discussion_text("See:\n```java\nfoo.barBaz();\n```\ndone");
  EXPECT_EQ(toks, (TL{"See", ":", "foo", ".", "bar", "Baz", "(", ")", ";", "done"}));
  for (const auto& t : toks) EXPECT_NE(t, "`");
}

TEST(ProcessDiscussionText, LinksKeepTextAndUrl) {
  EXPECT_EQ(process_discussion_text("[link](http://u)"),
            (TL{"link", "http", ":", "/", "/", "u"}));
  EXPECT_EQ(process_discussion_text("see <https://x.io>"),
            (TL{"see", "https", ":", "/", "/", "x", ".", "io"}));
}

TEST(ProcessDiscussionText, StripsHeadersEmphasisAndLists) {
  EXPECT_EQ(process_discussion_text("## Steps\n- **run** it\n> quoted `a*b`"),
            (TL{"Steps", "run", "it", "quoted", "a", "*", "b"}));
}

TEST(ProcessDiscussionText, UnbalancedFenceWarnsAndKeepsCode) {
  std::vector<std::string> warnings;
  auto toks = process_discussion_text("text\n```\n**x** [y](z)\n", &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  // markdown inside the unclosed fence is left verbatim
  EXPECT_EQ(toks, (TL{"text", "*", "*", "x", "*", "*", "[", "y", "]", "(", "z", ")"}));
}

TEST(ConcatWithSeparator, Cases) {
  EXPECT_EQ(concat_with_separator({{"a"}, {"b"}}), (TL{"a", "<s>", "b"}));
  EXPECT_EQ(concat_with_separator({{"a"}}), (TL{"a"}));
  EXPECT_EQ(concat_with_separator({{"a"}, {}, {"b"}}), (TL{"a", "<s>", "b"}));
  EXPECT_EQ(concat_with_separator({{}, {}}), TL{});
}

TEST(ConcatWithSeparator, NeverAdjacentSeparatorsProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TL> parts(std::uniform_int_distribution<int>(0, 6)(rng));
    for (auto& p : parts)
      for (int k = std::uniform_int_distribution<int>(0, 3)(rng); k > 0; --k)
        p.push_back(std::bernoulli_distribution(0.2)(rng) ? "w" : "x");
    auto out = concat_with_separator(parts);
    for (std::size_t i = 1; i < out.size(); ++i) EXPECT_FALSE(out[i] == "<s>" && out[i - 1] == "<s>");
    if (!out.empty()) {
      EXPECT_NE(out.front(), "<s>");
      EXPECT_NE(out.back(), "<s>");
    }
  }
}

TEST(TruncateFromEnd, Cases) {
  TL big(1500);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = "t" + std::to_string(i);
  auto cut = truncate_from_end(big, 1024);
  ASSERT_EQ(cut.size(), 1024u);
  EXPECT_TRUE(std::equal(cut.begin(), cut.end(), big.begin()));
  TL small(10, "x");
  EXPECT_EQ(truncate_from_end(small, 1024), small);
  EXPECT_EQ(truncate_from_end(big, 1), TL{"t0"});
  EXPECT_THROW(truncate_from_end(big, 0), ConfigError);
  EXPECT_EQ(truncate_from_end(cut, 1024), cut);
}

TEST(Tokenizers, NeverEmitEmptyTokens) {
  std::mt19937_64 rng(11);
  const std::string chars = "aZ_9 .(\n`#*[]\t<>é";
  for (int trial = 0; trial < 300; ++trial) {
    std::string s;
    for (int k = std::uniform_int_distribution<int>(0, 40)(rng); k > 0; --k)
      s += chars[std::uniform_int_distribution<std::size_t>(0, chars.size() - 1)(rng)];
    for (const auto& t : code_tokenize(s)) EXPECT_FALSE(t.empty());
    for (const auto& t : subtokenize(s)) EXPECT_FALSE(t.empty());
    for (const auto& t : process_discussion_text(s)) EXPECT_FALSE(t.empty());
  }
}
