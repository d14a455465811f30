#include "rankbed/listwise.hpp"

#include <algorithm>
#include <numeric>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

constexpr std::string_view kRoleLine =
    "You are RankLLM, an intelligent assistant that can rank passages based on their "
    "relevance to the query.";

constexpr std::string_view kReasonInstruction =
    "Given a query and a passage list, you first think about the reasoning process in the "
    "mind and then provide the answer (i.e., the reranked passage list).\n\n"
    "The reasoning process and answer are enclosed within <think> </think> and "
    "<answer> </answer> tags, respectively, i.e., <think> reasoning process here </think> "
    "<answer> answer here </answer>.";

constexpr std::string_view kDirectInstruction =
    "Given a query and a passage list, directly provide the reranked passage list without "
    "generating any reasoning process.";

std::string passage_text(const Document& doc) {
    std::string text = doc.title;
    if (!text.empty() && !doc.body.empty()) text.push_back(' ');
    text += doc.body;
    return text;
}

// First "<answer>...</answer>" block opening at or after `from`.
struct Block {
    std::size_t open = std::string_view::npos;
    std::size_t content_begin = 0;
    std::size_t content_end = 0;
    bool found = false;
};

Block find_block(std::string_view text, std::string_view open_tag, std::string_view close_tag,
                 std::size_t from) {
    Block b;
    b.open = text.find(open_tag, from);
    if (b.open == std::string_view::npos) return b;
    b.content_begin = b.open + open_tag.size();
    b.content_end = text.find(close_tag, b.content_begin);
    if (b.content_end == std::string_view::npos) return b;
    b.found = true;
    return b;
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Strict canonical answer shape: "[i]" tokens joined by ">" with arbitrary
// whitespace, nothing else.
bool canonical_answer_span(std::string_view span) {
    std::size_t i = 0;
    const std::size_t n = span.size();
    auto skip_ws = [&] {
        while (i < n && is_space(span[i])) ++i;
    };
    auto read_id = [&]() -> bool {
        if (i >= n || span[i] != '[') return false;
        ++i;
        if (i >= n || span[i] < '0' || span[i] > '9') return false;
        while (i < n && span[i] >= '0' && span[i] <= '9') ++i;
        if (i >= n || span[i] != ']') return false;
        ++i;
        return true;
    };
    skip_ws();
    if (!read_id()) return false;
    while (true) {
        skip_ws();
        if (i == n) return true;
        if (span[i] != '>') return false;
        ++i;
        skip_ws();
        if (!read_id()) return false;
    }
}

// Every bracketed integer in written order, tolerant of any surrounding
// junk. Oversized numbers clamp to an id no window can contain.
std::vector<int> scan_bracketed_ints(std::string_view span) {
    constexpr long long kIdCap = 1'000'000'000;
    std::vector<int> ids;
    std::size_t i = 0;
    const std::size_t n = span.size();
    while (i < n) {
        if (span[i] != '[') {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        long long value = 0;
        bool any_digit = false;
        while (j < n && span[j] >= '0' && span[j] <= '9') {
            any_digit = true;
            if (value < kIdCap) value = value * 10 + (span[j] - '0');
            ++j;
        }
        if (any_digit && j < n && span[j] == ']') {
            ids.push_back(static_cast<int>(std::min(value, kIdCap)));
            i = j + 1;
        } else {
            ++i;
        }
    }
    return ids;
}

}  // namespace

PromptRequest build_list_prompt(const Query& query, std::span<const Document> window_docs,
                                ListVariant variant, int per_passage_token_budget) {
    if (window_docs.size() < 2) {
        throw ValidationError("listwise prompt needs at least 2 passages");
    }
    const auto num = std::to_string(window_docs.size());

    std::string system(kRoleLine);
    system.push_back(' ');
    system += (variant == ListVariant::reason) ? kReasonInstruction : kDirectInstruction;

    std::string user = "I will provide you with " + num +
                       " passages, each indicated by a numerical identifier [].\n"
                       "Rank the passages based on their relevance to the search query:\n\n";
    for (std::size_t i = 0; i < window_docs.size(); ++i) {
        const auto cut = truncate_to_tokens(passage_text(window_docs[i]),
                                            per_passage_token_budget);
        user += "[" + std::to_string(i + 1) + "]: " + cut.text + "\n";
    }
    user += "\nSearch Query: " + query.text + ".\n";
    user += "Rank the " + num + " passages above based on their relevance to the search "
            "query.\n\n";
    user += "All passages should be included and listed using identifiers, in descending "
            "order of relevance. The format of the answer should be [] > [], e.g., [2] > [1].";

    PromptRequest request;
    request.system_text = std::move(system);
    request.user_text = std::move(user);
    request.prompt_text = request.system_text + "\n\n" + request.user_text;
    request.query_id = query.query_id;
    request.doc_ids.reserve(window_docs.size());
    for (const auto& doc : window_docs) request.doc_ids.push_back(doc.doc_id);
    return request;
}

ParsedAnswer parse_permutation(std::string_view text, int k) {
    ParsedAnswer parsed;

    const Block think = find_block(text, "<think>", "</think>", 0);
    const std::size_t answer_from = think.found ? think.content_end + 8 : 0;  // len("</think>")
    Block answer = find_block(text, "<answer>", "</answer>", answer_from);
    parsed.output_format_valid = think.found && answer.found;
    if (!answer.found) {
        // leniency path: an answer block with no (or misplaced) think block
        // still yields identifiers for inference-side repair
        answer = find_block(text, "<answer>", "</answer>", 0);
    }
    if (!answer.found) return parsed;

    parsed.raw_answer_span =
        std::string(text.substr(answer.content_begin, answer.content_end - answer.content_begin));
    parsed.identifiers = scan_bracketed_ints(parsed.raw_answer_span);

    if (!canonical_answer_span(parsed.raw_answer_span)) return parsed;
    if (parsed.identifiers.size() != static_cast<std::size_t>(k)) return parsed;
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1, false);
    for (int id : parsed.identifiers) {
        if (id < 1 || id > k || seen[static_cast<std::size_t>(id)]) return parsed;
        seen[static_cast<std::size_t>(id)] = true;
    }
    parsed.answer_format_valid = true;
    return parsed;
}

Permutation identity_permutation(int k) {
    Permutation p;
    p.order.resize(static_cast<std::size_t>(k));
    std::iota(p.order.begin(), p.order.end(), 1);
    return p;
}

Permutation repair_permutation(const ParsedAnswer& parsed, int k, const Permutation& fallback) {
    if (fallback.order.size() != static_cast<std::size_t>(k)) {
        throw ValidationError("repair fallback must cover all k identifiers");
    }
    Permutation out;
    out.order.reserve(static_cast<std::size_t>(k));
    std::vector<bool> used(static_cast<std::size_t>(k) + 1, false);
    for (int id : parsed.identifiers) {
        if (id < 1 || id > k) continue;        // out of range
        if (used[static_cast<std::size_t>(id)]) continue;  // duplicate
        used[static_cast<std::size_t>(id)] = true;
        out.order.push_back(id);
    }
    for (int id : fallback.order) {
        if (id < 1 || id > k || used[static_cast<std::size_t>(id)]) continue;
        used[static_cast<std::size_t>(id)] = true;
        out.order.push_back(id);
    }
    return out;
}

ListwiseResult sliding_window_rerank(const Query& query, const DocumentStore& store,
                                     const CandidatePool& pool, Scorer& scorer,
                                     const ListwiseConfig& cfg, const std::string& run_tag) {
    if (cfg.window_size < 2) throw ValidationError("window_size must be >= 2");
    if (cfg.stride < 1 || cfg.stride >= cfg.window_size) {
        throw ValidationError("stride must lie in [1, window_size-1]");
    }
    if (pool.candidates.empty()) throw ValidationError("cannot rerank an empty pool");

    const std::size_t n = pool.candidates.size();
    std::vector<std::string> order;  // current global order, head first
    order.reserve(n);
    for (const auto& c : pool.candidates) order.push_back(c.doc_id);

    ListwiseResult result;
    int window_index = 0;

    const auto w = static_cast<std::size_t>(cfg.window_size);
    const auto stride = static_cast<std::size_t>(cfg.stride);

    for (int sweep = 0; sweep < std::max(1, cfg.sweeps); ++sweep) {
        // Window start offsets, tail first, head window last.
        std::vector<std::size_t> starts;
        if (n <= w) {
            starts.push_back(0);
        } else {
            std::size_t b = n - w;
            while (true) {
                starts.push_back(b);
                if (b == 0) break;
                b = (b > stride) ? b - stride : 0;
            }
        }

        for (std::size_t b : starts) {
            const std::size_t len = std::min(w, n - b);
            if (len < 2) continue;  // single-doc pool, nothing to rank

            std::vector<Document> window_docs;
            window_docs.reserve(len);
            for (std::size_t i = 0; i < len; ++i) window_docs.push_back(store.get(order[b + i]));

            WindowTrace trace;
            trace.query_id = query.query_id;
            trace.window_index = window_index++;
            for (const auto& d : window_docs) trace.window_docs.push_back(d.doc_id);

            PromptRequest request = build_list_prompt(query, window_docs, cfg.variant,
                                                      cfg.per_passage_token_budget);
            request.max_new_tokens = cfg.max_new_tokens;

            Permutation perm = identity_permutation(static_cast<int>(len));
            try {
                const GenerationResult gen = scorer.generate(request);
                trace.raw_text = gen.full_text;
                const ParsedAnswer parsed =
                    parse_permutation(gen.full_text, static_cast<int>(len));
                trace.output_format_valid = parsed.output_format_valid;
                trace.answer_format_valid = parsed.answer_format_valid;
                if (cfg.repair_mode == RepairMode::strict && !parsed.answer_format_valid) {
                    throw ValidationError("window " + std::to_string(trace.window_index) +
                                          " of query " + query.query_id +
                                          ": invalid permutation answer in strict mode");
                }
                perm = repair_permutation(parsed, static_cast<int>(len),
                                          identity_permutation(static_cast<int>(len)));
            } catch (const ValidationError&) {
                throw;  // strict-mode contract violations propagate
            } catch (const Error&) {
                if (cfg.repair_mode == RepairMode::strict) throw;
                trace.degraded = true;       // window left in incoming order
                result.degraded = true;
            }

            trace.repaired_order = perm.order;
            result.traces.push_back(std::move(trace));

            std::vector<std::string> reordered;
            reordered.reserve(len);
            for (int id : perm.order) {
                reordered.push_back(order[b + static_cast<std::size_t>(id - 1)]);
            }
            std::copy(reordered.begin(), reordered.end(), order.begin() + static_cast<long>(b));
        }
    }

    result.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RunEntry e;
        e.query_id = query.query_id;
        e.doc_id = order[i];
        e.rank = static_cast<int>(i) + 1;
        e.score = static_cast<double>(n - i);  // synthetic descending scores
        e.tag = run_tag;
        result.entries.push_back(std::move(e));
    }
    return result;
}

}  // namespace rankbed
