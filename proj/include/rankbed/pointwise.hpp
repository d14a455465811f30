#pragma once

#include <span>
#include <string>
#include <vector>

#include "rankbed/bm25.hpp"
#include "rankbed/corpus.hpp"
#include "rankbed/scorer.hpp"

namespace rankbed {

enum class PointVariant { direct, reason };
enum class Aggregation { mean, vote };

struct PointwiseConfig {
    PointVariant variant = PointVariant::direct;
    int traces = 1;  // M
    Aggregation aggregation = Aggregation::mean;
    int max_rationale_tokens = 1024;
    int prompt_token_budget = 4096;    // passage truncation budget
    double trace_temperature = 0.7;    // used only when sampling M > 1 traces
    bool retain_rationales = false;
    bool strict = false;  // abort on scorer errors instead of fail-soft
    SurfaceForms answer_forms;
};

struct RelevanceJudgment {
    double score = 0.0;        // s in [0,1]
    double logit_margin = 0.0; // l_true - l_false
    bool decision = false;     // s >= 0.5
    std::vector<std::string> rationales;  // empty for direct
};

/// Renders the pointwise relevance prompt. The direct variant prefills an
/// empty think block so the model emits the answer token immediately; the
/// reason variant leaves generation open. The passage is tail-truncated to
/// the token budget (the query never is).
PromptRequest build_point_prompt(const Query& query, const Document& document,
                                 PointVariant variant, int passage_token_budget = 4096,
                                 const SurfaceForms& forms = {});

/// Two-way softmax over the answer logits: s = exp(l_T)/(exp(l_T)+exp(l_F)),
/// computed stably from the margin.
RelevanceJudgment relevance_score(const AnswerLogits& logits);

/// mean: arithmetic mean of scores and margins, rationales concatenated.
/// vote: majority decision, score/margin averaged over the majority side;
/// an even split falls back to the mean rule. Throws on an empty list.
RelevanceJudgment aggregate_traces(std::span<const RelevanceJudgment> judgments,
                                   Aggregation aggregation);

struct JudgmentRecord {
    std::string query_id;
    std::string doc_id;
    double score = 0.0;
    double margin = 0.0;
    bool decision = false;
    int n_traces = 0;
    bool degraded = false;
    std::vector<std::string> rationales;
};

struct PointwiseResult {
    std::vector<RunEntry> entries;        // sorted, ranks assigned
    std::vector<JudgmentRecord> sidecar;  // one per candidate, pool order
    bool degraded = false;
};

/// Scores every candidate and sorts by score descending, then logit margin
/// descending, then doc_id ascending. Emitted run score is s. A scorer
/// failure on a document places it last with score -1 and marks the result
/// degraded unless cfg.strict, which rethrows.
PointwiseResult rank_pointwise(const Query& query, const DocumentStore& store,
                               const CandidatePool& pool, Scorer& scorer,
                               const PointwiseConfig& cfg, const std::string& run_tag);

}  // namespace rankbed
