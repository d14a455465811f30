#include "rankbed/pointwise.hpp"

#include <algorithm>
#include <cmath>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

constexpr std::string_view kPointSystem =
    "Determine if the following passage is relevant to the query. Answer only with 'true' "
    "or 'false'.";

std::string passage_text(const Document& doc) {
    std::string text = doc.title;
    if (!text.empty() && !doc.body.empty()) text.push_back(' ');
    text += doc.body;
    return text;
}

}  // namespace

PromptRequest build_point_prompt(const Query& query, const Document& document,
                                 PointVariant variant, int passage_token_budget,
                                 const SurfaceForms& forms) {
    if (query.text.empty()) throw ValidationError("query text must be non-empty");
    const auto passage = truncate_to_tokens(passage_text(document), passage_token_budget);

    PromptRequest request;
    request.system_text = std::string(kPointSystem);
    request.user_text = "Query: " + query.text + "\nPassage: " + passage.text;
    if (variant == PointVariant::direct) {
        // prefilled empty think block; the model emits the answer token next
        request.assistant_prefix = "<think> </think>";
    }
    request.prompt_text = "<|im_start|>system\n" + request.system_text +
                          "\n<|im_end|>\n<|im_start|>user\n" + request.user_text +
                          "\n<|im_end|>\n<|im_start|>assistant\n";
    if (variant == PointVariant::direct) {
        request.prompt_text += "\n" + request.assistant_prefix + "\n\n";
    }
    request.need_answer_logprobs = true;
    request.answer_forms = forms;
    request.max_new_tokens = 8;
    request.query_id = query.query_id;
    request.doc_ids = {document.doc_id};
    return request;
}

RelevanceJudgment relevance_score(const AnswerLogits& logits) {
    RelevanceJudgment j;
    j.logit_margin = logits.logprob_true - logits.logprob_false;
    // two-way softmax via the margin, stable for any magnitude
    if (j.logit_margin >= 0.0) {
        j.score = 1.0 / (1.0 + std::exp(-j.logit_margin));
    } else {
        const double e = std::exp(j.logit_margin);
        j.score = e / (1.0 + e);
    }
    j.decision = j.score >= 0.5;
    if (!logits.rationale_text.empty()) j.rationales.push_back(logits.rationale_text);
    return j;
}

RelevanceJudgment aggregate_traces(std::span<const RelevanceJudgment> judgments,
                                   Aggregation aggregation) {
    if (judgments.empty()) throw ValidationError("cannot aggregate zero traces");
    if (judgments.size() == 1) return judgments[0];

    std::vector<std::string> rationales;
    for (const auto& j : judgments) {
        rationales.insert(rationales.end(), j.rationales.begin(), j.rationales.end());
    }

    auto mean_of = [](std::span<const RelevanceJudgment> js) {
        RelevanceJudgment out;
        for (const auto& j : js) {
            out.score += j.score;
            out.logit_margin += j.logit_margin;
        }
        out.score /= static_cast<double>(js.size());
        out.logit_margin /= static_cast<double>(js.size());
        out.decision = out.score >= 0.5;
        return out;
    };

    RelevanceJudgment out;
    if (aggregation == Aggregation::mean) {
        out = mean_of(judgments);
    } else {
        std::vector<RelevanceJudgment> majority;
        std::size_t yes = 0;
        for (const auto& j : judgments) {
            if (j.decision) ++yes;
        }
        const std::size_t no = judgments.size() - yes;
        if (yes == no) {
            out = mean_of(judgments);  // even split: mean score breaks the tie
        } else {
            const bool winner = yes > no;
            for (const auto& j : judgments) {
                if (j.decision == winner) majority.push_back(j);
            }
            out = mean_of(majority);
            out.decision = winner;
        }
    }
    out.rationales = std::move(rationales);
    return out;
}

PointwiseResult rank_pointwise(const Query& query, const DocumentStore& store,
                               const CandidatePool& pool, Scorer& scorer,
                               const PointwiseConfig& cfg, const std::string& run_tag) {
    if (pool.candidates.empty()) throw ValidationError("cannot rerank an empty pool");
    if (cfg.traces < 1) throw ValidationError("traces must be >= 1");

    struct Scored {
        std::string doc_id;
        RelevanceJudgment judgment;
        bool failed = false;
        int n_traces = 0;
    };

    PointwiseResult result;
    std::vector<Scored> scored;
    scored.reserve(pool.candidates.size());

    for (const auto& candidate : pool.candidates) {
        Scored s;
        s.doc_id = candidate.doc_id;
        PromptRequest request = build_point_prompt(query, store.get(candidate.doc_id),
                                                   cfg.variant, cfg.prompt_token_budget,
                                                   cfg.answer_forms);
        request.temperature = (cfg.traces > 1) ? cfg.trace_temperature : 0.0;
        if (cfg.variant == PointVariant::reason) {
            request.max_new_tokens = cfg.max_rationale_tokens;
        }
        try {
            std::vector<RelevanceJudgment> traces;
            traces.reserve(static_cast<std::size_t>(cfg.traces));
            for (int m = 0; m < cfg.traces; ++m) {
                traces.push_back(relevance_score(scorer.score_answer(request)));
            }
            s.judgment = aggregate_traces(traces, cfg.aggregation);
            s.n_traces = cfg.traces;
        } catch (const ValidationError&) {
            throw;  // contract violations are not fail-soft material
        } catch (const Error&) {
            if (cfg.strict) throw;
            s.failed = true;  // fail-soft: park the document at the bottom
            s.judgment.score = -1.0;
            s.judgment.logit_margin = 0.0;
            s.judgment.decision = false;
            result.degraded = true;
        }
        scored.push_back(std::move(s));
    }

    for (const auto& s : scored) {
        JudgmentRecord record;
        record.query_id = query.query_id;
        record.doc_id = s.doc_id;
        record.score = s.judgment.score;
        record.margin = s.judgment.logit_margin;
        record.decision = s.judgment.decision;
        record.n_traces = s.n_traces;
        record.degraded = s.failed;
        if (cfg.retain_rationales) record.rationales = s.judgment.rationales;
        result.sidecar.push_back(std::move(record));
    }

    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.judgment.score != b.judgment.score) return a.judgment.score > b.judgment.score;
        if (a.judgment.logit_margin != b.judgment.logit_margin) {
            return a.judgment.logit_margin > b.judgment.logit_margin;
        }
        return a.doc_id < b.doc_id;
    });

    result.entries.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        RunEntry e;
        e.query_id = query.query_id;
        e.doc_id = scored[i].doc_id;
        e.rank = static_cast<int>(i) + 1;
        e.score = scored[i].judgment.score;
        e.tag = run_tag;
        result.entries.push_back(std::move(e));
    }
    return result;
}

}  // namespace rankbed
