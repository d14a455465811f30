#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <set>

#include "rankbed/errors.hpp"
#include "rankbed/listwise.hpp"
#include "rankbed/scorer.hpp"
#include "testutil.hpp"

using namespace rankbed;

namespace {

std::vector<Document> docs_n(int n) {
    std::vector<Document> docs;
    for (int i = 0; i < n; ++i) {
        docs.push_back(Document{"d" + std::to_string(i), "", "passage " + std::to_string(i)});
    }
    return docs;
}

std::string serialize_answer(const std::vector<int>& ids) {
    std::string text = "<think></think><answer>";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) text += " > ";
        text += "[" + std::to_string(ids[i]) + "]";
    }
    return text + "</answer>";
}

struct ListFixture {
    DocumentStore store;
    Query query{"q1", "the query", ""};
    Qrels qrels;
    CandidatePool pool;

    ListFixture(int n, const std::set<int>& relevant_positions) {
        pool.query_id = "q1";
        pool.k = static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(i);
            store.add(Document{id, "", "passage " + std::to_string(i)});
            qrels.set_grade("q1", id, relevant_positions.count(i) != 0 ? 1 : 0);
            pool.candidates.push_back(Candidate{id, static_cast<double>(n - i)});
        }
    }
};

}  // namespace

TEST_CASE("listwise prompt templates") {
    Query query{"q1", "elephant habitat", ""};
    const auto docs = docs_n(2);

    auto reason = build_list_prompt(query, docs, ListVariant::reason);
    CHECK(reason.prompt_text.find("[1]: passage 0") != std::string::npos);
    CHECK(reason.prompt_text.find("[2]: passage 1") != std::string::npos);
    CHECK(reason.prompt_text.find("[2] > [1]") != std::string::npos);
    CHECK(reason.prompt_text.find("All passages should be included") != std::string::npos);
    CHECK(reason.prompt_text.find("<think>") != std::string::npos);
    CHECK(reason.prompt_text.find("I will provide you with 2 passages") != std::string::npos);
    CHECK(reason.prompt_text.find("Search Query: elephant habitat.") != std::string::npos);

    auto direct = build_list_prompt(query, docs, ListVariant::direct);
    CHECK(direct.prompt_text.find("<think>") == std::string::npos);
    CHECK(direct.prompt_text.find("without generating any reasoning process") !=
          std::string::npos);
    CHECK(direct.prompt_text.find("[2] > [1]") != std::string::npos);

    CHECK_THROWS_AS(build_list_prompt(query, std::span<const Document>(docs.data(), 1),
                                      ListVariant::direct),
                    ValidationError);
}

TEST_CASE("listwise prompt truncates each passage independently") {
    Query query{"q1", "q", ""};
    std::vector<Document> docs = docs_n(2);
    std::string big;
    for (int i = 0; i < 2000; ++i) big += "filler ";
    docs[0].body = big;
    auto request = build_list_prompt(query, docs, ListVariant::direct, 64);
    CHECK(request.prompt_text.find("[truncated]") != std::string::npos);
    CHECK(request.prompt_text.find("[2]: passage 1") != std::string::npos);
}

TEST_CASE("parse_permutation accepts the canonical answer") {
    const auto parsed = parse_permutation("<think></think><answer>[2] > [1]</answer>", 2);
    CHECK(parsed.output_format_valid);
    CHECK(parsed.answer_format_valid);
    CHECK(parsed.identifiers == std::vector<int>{2, 1});
}

TEST_CASE("parse_permutation flags missing think tag") {
    const auto parsed = parse_permutation("<answer>[2] > [1]</answer>", 2);
    CHECK_FALSE(parsed.output_format_valid);
    CHECK(parsed.identifiers == std::vector<int>{2, 1});  // lenient extraction survives
}

TEST_CASE("parse_permutation flags duplicates and coverage gaps") {
    const auto parsed =
        parse_permutation("<think>x</think><answer>[2] > [2] > [1]</answer>", 3);
    CHECK(parsed.output_format_valid);
    CHECK_FALSE(parsed.answer_format_valid);
    CHECK(parsed.identifiers == std::vector<int>{2, 2, 1});
}

TEST_CASE("parse_permutation rejects non-canonical separators") {
    const auto comma = parse_permutation("<think></think><answer>[2], [1]</answer>", 2);
    CHECK(comma.output_format_valid);
    CHECK_FALSE(comma.answer_format_valid);
    CHECK(comma.identifiers == std::vector<int>{2, 1});

    const auto out_of_range = parse_permutation("<think></think><answer>[5] > [1]</answer>", 2);
    CHECK_FALSE(out_of_range.answer_format_valid);

    // answer appearing before the think block breaks the output format
    const auto reversed =
        parse_permutation("<answer>[2] > [1]</answer><think></think>", 2);
    CHECK_FALSE(reversed.output_format_valid);
}

TEST_CASE("parse -> serialize -> parse is a fixed point for valid answers") {
    testutil::Rng rng(2024);
    for (int round = 0; round < 200; ++round) {
        const int k = rng.uniform_int(1, 100);
        std::vector<int> ids(static_cast<std::size_t>(k));
        std::iota(ids.begin(), ids.end(), 1);
        for (int i = k - 1; i > 0; --i) {
            std::swap(ids[static_cast<std::size_t>(i)],
                      ids[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        }
        const auto first = parse_permutation(serialize_answer(ids), k);
        REQUIRE(first.answer_format_valid);
        CHECK(first.identifiers == ids);
        const auto second = parse_permutation(serialize_answer(first.identifiers), k);
        CHECK(second.identifiers == first.identifiers);
        CHECK(second.answer_format_valid);
    }
}

TEST_CASE("repair_permutation") {
    const auto fallback = identity_permutation(3);

    auto valid = parse_permutation("<think></think><answer>[2] > [1]</answer>", 2);
    CHECK(repair_permutation(valid, 2, identity_permutation(2)).order ==
          std::vector<int>{2, 1});

    ParsedAnswer dup;
    dup.identifiers = {2, 2, 1};
    CHECK(repair_permutation(dup, 3, fallback).order == std::vector<int>{2, 1, 3});

    ParsedAnswer empty;
    CHECK(repair_permutation(empty, 3, fallback).order == std::vector<int>{1, 2, 3});

    ParsedAnswer junk;
    junk.identifiers = {9, -2, 2, 9};
    CHECK(repair_permutation(junk, 3, fallback).order == std::vector<int>{2, 1, 3});

    // valid answers repair to themselves
    ParsedAnswer id3;
    id3.identifiers = {3, 1, 2};
    id3.answer_format_valid = true;
    CHECK(repair_permutation(id3, 3, fallback).order == std::vector<int>{3, 1, 2});
}

TEST_CASE("repair over fuzzed garbage always yields a valid permutation") {
    testutil::Rng rng(4242);
    for (int round = 0; round < 10000; ++round) {
        const int k = rng.uniform_int(1, 40);
        std::string text;
        const int pieces = rng.uniform_int(0, 30);
        for (int i = 0; i < pieces; ++i) {
            switch (rng.uniform_int(0, 5)) {
                case 0: text += "<think>"; break;
                case 1: text += "</think>"; break;
                case 2: text += "<answer>"; break;
                case 3: text += "</answer>"; break;
                case 4: text += "[" + std::to_string(rng.uniform_int(-5, k + 5)) + "]"; break;
                default: text += rng.uniform_int(0, 1) ? " > " : " trash "; break;
            }
        }
        const auto parsed = parse_permutation(text, k);
        const auto perm = repair_permutation(parsed, k, identity_permutation(k));
        REQUIRE(perm.order.size() == static_cast<std::size_t>(k));
        std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
        for (int id : perm.order) {
            REQUIRE(id >= 1);
            REQUIRE(id <= k);
            REQUIRE_FALSE(seen[static_cast<std::size_t>(id)]);
            seen[static_cast<std::size_t>(id)] = true;
        }
    }
}

TEST_CASE("sliding window: single window when the pool fits") {
    ListFixture fx(5, {3, 4});
    OracleScorer scorer(fx.qrels);
    ListwiseConfig cfg;
    cfg.window_size = 20;
    cfg.stride = 10;

    const auto result = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, cfg, "t");
    REQUIRE(result.entries.size() == 5);
    CHECK(result.traces.size() == 1);
    CHECK(result.entries[0].doc_id == "d3");
    CHECK(result.entries[1].doc_id == "d4");
    // synthetic descending scores k..1
    CHECK(result.entries[0].score == 5.0);
    CHECK(result.entries[4].score == 1.0);
    CHECK(result.entries[0].rank == 1);
}

TEST_CASE("sliding window carries tail relevants to the head") {
    // k=30, w=20, s=10, 5 relevant docs at the very tail
    ListFixture fx(30, {25, 26, 27, 28, 29});
    OracleScorer scorer(fx.qrels);
    ListwiseConfig cfg;
    cfg.window_size = 20;
    cfg.stride = 10;

    const auto result = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, cfg, "t");
    REQUIRE(result.entries.size() == 30);
    const std::set<std::string> head = {result.entries[0].doc_id, result.entries[1].doc_id,
                                        result.entries[2].doc_id, result.entries[3].doc_id,
                                        result.entries[4].doc_id};
    CHECK(head == std::set<std::string>{"d25", "d26", "d27", "d28", "d29"});
    CHECK(result.traces.size() == 2);  // windows at 10 and 0
}

TEST_CASE("identity scorer is a fixed point for any geometry") {
    testutil::Rng rng(55);
    testutil::ScriptedScorer identity;
    identity.on_generate = [](const PromptRequest& r) {
        std::vector<int> ids(r.doc_ids.size());
        std::iota(ids.begin(), ids.end(), 1);
        return GenerationResult{serialize_answer(ids), FinishReason::stop};
    };
    for (int round = 0; round < 25; ++round) {
        const int n = rng.uniform_int(1, 50);
        ListFixture fx(n, {});
        ListwiseConfig cfg;
        cfg.window_size = rng.uniform_int(2, 25);
        cfg.stride = rng.uniform_int(1, cfg.window_size - 1);
        const auto result =
            sliding_window_rerank(fx.query, fx.store, fx.pool, identity, cfg, "t");
        REQUIRE(result.entries.size() == static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            CHECK(result.entries[static_cast<std::size_t>(i)].doc_id ==
                  "d" + std::to_string(i));
        }
    }
}

TEST_CASE("window saturation: w >= k matches a single-window pass bitwise") {
    testutil::Rng rng(808);
    for (int round = 0; round < 40; ++round) {
        const int n = rng.uniform_int(2, 20);
        std::set<int> relevant;
        for (int i = 0; i < n; ++i) {
            if (rng.uniform_int(0, 2) == 0) relevant.insert(i);
        }
        ListFixture fx(n, relevant);
        OracleScorer scorer(fx.qrels);

        ListwiseConfig wide;
        wide.window_size = n + rng.uniform_int(0, 10) + 1;
        wide.stride = 1;
        ListwiseConfig wider;
        wider.window_size = wide.window_size + 13;
        wider.stride = 5;

        const auto a = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, wide, "t");
        const auto b = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, wider, "t");
        REQUIRE(a.entries.size() == b.entries.size());
        for (std::size_t i = 0; i < a.entries.size(); ++i) {
            CHECK(a.entries[i].doc_id == b.entries[i].doc_id);
            CHECK(a.entries[i].score == b.entries[i].score);
        }
    }
}

TEST_CASE("malformed output degrades gracefully in repair mode, aborts in strict") {
    ListFixture fx(4, {2});
    testutil::ScriptedScorer malformed;
    malformed.on_generate = [](const PromptRequest&) {
        return GenerationResult{"no tags here at all", FinishReason::stop};
    };
    ListwiseConfig cfg;

    // repair mode: pure fallback keeps incoming order, run is not degraded
    // (the scorer answered; the answer was just unusable)
    const auto result = sliding_window_rerank(fx.query, fx.store, fx.pool, malformed, cfg, "t");
    REQUIRE(result.entries.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(result.entries[static_cast<std::size_t>(i)].doc_id == "d" + std::to_string(i));
    }
    CHECK_FALSE(result.traces[0].output_format_valid);

    cfg.repair_mode = RepairMode::strict;
    CHECK_THROWS_AS(sliding_window_rerank(fx.query, fx.store, fx.pool, malformed, cfg, "t"),
                    ValidationError);
}

TEST_CASE("scorer transport failure leaves the window in incoming order") {
    ListFixture fx(4, {2});
    testutil::FailingScorer failing;
    ListwiseConfig cfg;

    const auto result = sliding_window_rerank(fx.query, fx.store, fx.pool, failing, cfg, "t");
    CHECK(result.degraded);
    REQUIRE(result.entries.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(result.entries[static_cast<std::size_t>(i)].doc_id == "d" + std::to_string(i));
    }
    CHECK(result.traces[0].degraded);

    cfg.repair_mode = RepairMode::strict;
    CHECK_THROWS_AS(sliding_window_rerank(fx.query, fx.store, fx.pool, failing, cfg, "t"),
                    TransportError);
}

TEST_CASE("extra sweeps preserve the permutation and the oracle fixed point") {
    ListFixture fx(30, {27, 28, 29});
    OracleScorer scorer(fx.qrels);
    ListwiseConfig one;
    one.sweeps = 1;
    ListwiseConfig two;
    two.sweeps = 2;

    const auto a = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, one, "t");
    const auto b = sliding_window_rerank(fx.query, fx.store, fx.pool, scorer, two, "t");
    CHECK(b.traces.size() == 2 * a.traces.size());
    // the oracle order is already a fixed point after one sweep
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].doc_id == b.entries[i].doc_id);
    }
    std::set<std::string> seen;
    for (const auto& e : b.entries) seen.insert(e.doc_id);
    CHECK(seen.size() == 30);
}

TEST_CASE("single-document pools pass through without a scorer call") {
    ListFixture fx(1, {0});
    testutil::ScriptedScorer never;
    never.on_generate = [](const PromptRequest&) -> GenerationResult {
        throw ValidationError("should not be called");
    };
    ListwiseConfig cfg;
    const auto result = sliding_window_rerank(fx.query, fx.store, fx.pool, never, cfg, "t");
    REQUIRE(result.entries.size() == 1);
    CHECK(result.entries[0].doc_id == "d0");
    CHECK(result.traces.empty());
}
