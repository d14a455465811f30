#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rankbed/text.hpp"

using namespace rankbed;

TEST_CASE("tokenize lowercases alphanumeric runs") {
    CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("BM25-ranked docs") == std::vector<std::string>{"bm25", "ranked", "docs"});
    CHECK(tokenize("  a  ") == std::vector<std::string>{"a"});
    CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("utf8 validation") {
    CHECK(utf8_valid("plain ascii"));
    CHECK(utf8_valid("caf\xc3\xa9"));
    CHECK(utf8_valid("\xe4\xb8\xad\xe6\x96\x87"));
    CHECK_FALSE(utf8_valid("\xff"));
    CHECK_FALSE(utf8_valid("\xc3"));              // truncated sequence
    CHECK_FALSE(utf8_valid("\xc0\xaf"));          // overlong
    CHECK_FALSE(utf8_valid("\xed\xa0\x80"));      // surrogate
    CHECK_FALSE(utf8_valid("\xf4\x90\x80\x80"));  // beyond U+10FFFF
}

TEST_CASE("truncate_to_tokens") {
    auto cut = truncate_to_tokens("one two three four", 2);
    CHECK(cut.truncated);
    CHECK(cut.text == std::string("one two ") + std::string(kTruncationMarker));

    auto kept = truncate_to_tokens("one two", 2);
    CHECK_FALSE(kept.truncated);
    CHECK(kept.text == "one two");

    auto empty = truncate_to_tokens("", 5);
    CHECK_FALSE(empty.truncated);
    CHECK(empty.text.empty());

    auto zero = truncate_to_tokens("word", 0);
    CHECK(zero.truncated);
    CHECK(zero.text == std::string(kTruncationMarker));
}

TEST_CASE("count_ws_tokens") {
    CHECK(count_ws_tokens("") == 0);
    CHECK(count_ws_tokens("a b  c\n d") == 4);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.5, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("fnv1a64 is stable") {
    // frozen reference values guard cross-run determinism
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    const double u = hash_to_unit(fnv1a64("q1d1"));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}
