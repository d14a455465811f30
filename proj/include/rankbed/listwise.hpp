#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankbed/bm25.hpp"
#include "rankbed/corpus.hpp"
#include "rankbed/scorer.hpp"

namespace rankbed {

enum class ListVariant { direct, reason };
enum class RepairMode { repair, strict };

struct ListwiseConfig {
    ListVariant variant = ListVariant::direct;
    int window_size = 20;  // w
    int stride = 10;       // s, must satisfy 1 <= s < w
    int per_passage_token_budget = 512;
    int max_new_tokens = 4096;
    int sweeps = 1;  // back-to-front passes over the pool
    RepairMode repair_mode = RepairMode::repair;
};

struct ParsedAnswer {
    std::vector<int> identifiers;  // as written, including junk ids
    bool output_format_valid = false;  // <think> and <answer> blocks, answer after think
    bool answer_format_valid = false;  // canonical "[i] > [j] > ..." covering exactly 1..k
    std::string raw_answer_span;
};

struct Permutation {
    std::vector<int> order;  // 1-based, exactly {1..k}

    bool operator==(const Permutation&) const = default;
};

/// Renders the listwise window prompt with passages as "[i]: text",
/// i = 1..n in window order, each independently truncated to the
/// per-passage budget. The reason variant instructs think-then-answer;
/// the direct variant asks for the reranked list outright.
PromptRequest build_list_prompt(const Query& query, std::span<const Document> window_docs,
                                ListVariant variant, int per_passage_token_budget = 512);

/// Runs both format validators over raw model text. Never throws: every
/// failure is encoded in the flags, which the reward gate consumes.
/// Identifiers are extracted leniently (any bracketed integers in the
/// answer span, in written order) so inference-side repair keeps whatever
/// signal a malformed answer still carries.
ParsedAnswer parse_permutation(std::string_view text, int k);

/// Keeps the first occurrence of each in-range identifier in written
/// order, drops duplicates and out-of-range ids, appends the missing ones
/// in fallback order. Always yields a valid permutation of 1..k.
Permutation repair_permutation(const ParsedAnswer& parsed, int k, const Permutation& fallback);

/// Identity permutation 1..k.
Permutation identity_permutation(int k);

struct WindowTrace {
    std::string query_id;
    int window_index = 0;
    std::vector<std::string> window_docs;  // incoming order
    std::string raw_text;
    bool output_format_valid = false;
    bool answer_format_valid = false;
    std::vector<int> repaired_order;
    bool degraded = false;  // scorer failure, window left in incoming order
};

struct ListwiseResult {
    std::vector<RunEntry> entries;  // synthetic scores k..1
    std::vector<WindowTrace> traces;
    bool degraded = false;
};

/// Back-to-front sliding-window pass: rank the tail window, write its new
/// order in place, slide toward the head by the stride, finish with the
/// head window. Pools no larger than the window take a single pass. The
/// output is always a permutation of the pool. Scorer failures leave the
/// window in incoming order and mark the run degraded (repair mode) or
/// rethrow (strict mode).
ListwiseResult sliding_window_rerank(const Query& query, const DocumentStore& store,
                                     const CandidatePool& pool, Scorer& scorer,
                                     const ListwiseConfig& cfg, const std::string& run_tag);

}  // namespace rankbed
