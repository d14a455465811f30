#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rankbed/corpus.hpp"

namespace rankbed {

/// Logprob substituted when a provider's alternatives list omits a surface
/// form. Far below any real logprob; every substitution is flagged.
inline constexpr double kFloorLogprob = -100.0;

struct SurfaceForms {
    std::string positive = "true";
    std::string negative = "false";
};

struct PromptRequest {
    std::string prompt_text;  // full rendered prompt

    // Structured parts for chat transports. assistant_prefix is prefilled
    // generation (the direct variants' empty think block).
    std::string system_text;
    std::string user_text;
    std::string assistant_prefix;

    int max_new_tokens = 256;
    double temperature = 0.0;
    bool need_answer_logprobs = false;
    SurfaceForms answer_forms;

    // Routing metadata for deterministic mock scorers: the judged pair for
    // pointwise requests, the window's documents (in prompt order) for
    // listwise requests. Remote transports ignore these.
    std::string query_id;
    std::vector<std::string> doc_ids;
};

struct AnswerLogits {
    double logprob_true = 0.0;
    double logprob_false = 0.0;
    std::string rationale_text;  // generated text preceding the answer
    bool floored_true = false;   // set when the form was absent and floored
    bool floored_false = false;
    bool truncated = false;
};

enum class FinishReason { stop, length, error };

struct GenerationResult {
    std::string full_text;
    FinishReason finish_reason = FinishReason::stop;
};

/// Uniform scoring contract in front of the model. Implementations must be
/// safe for concurrent calls from many workers.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual AnswerLogits score_answer(const PromptRequest& request) = 0;
    virtual GenerationResult generate(const PromptRequest& request) = 0;
};

/// Deterministic relevance judgment backed by qrels. Grade >= threshold
/// yields (0, -10), otherwise (-10, 0); with noise > 0 the decision is
/// flipped with that probability via a seeded hash of (query_id, doc_id,
/// seed), so repeated calls agree bit-for-bit.
AnswerLogits oracle_judge(const Qrels& qrels, const std::string& query_id,
                          const std::string& doc_id, double noise_level, std::uint64_t seed,
                          int threshold = 1);

/// Qrels-backed mock scorer. score_answer judges the request's (query_id,
/// doc_ids[0]) pair with oracle_judge; generate emits a well-formed
/// listwise answer ordering the request's doc_ids by (noisy) relevance
/// descending, ties in incoming order.
class OracleScorer final : public Scorer {
public:
    OracleScorer(const Qrels& qrels, double noise_level = 0.0, std::uint64_t seed = 0,
                 int threshold = 1);

    AnswerLogits score_answer(const PromptRequest& request) override;
    GenerationResult generate(const PromptRequest& request) override;

private:
    const Qrels& qrels_;
    double noise_;
    std::uint64_t seed_;
    int threshold_;
};

/// Synthetic (confidence, correct) stream for calibration tests: the
/// confidence is drawn uniformly from a fixed grid and correctness is a
/// seeded Bernoulli draw with success probability profile(confidence).
class MiscalibratedSampler {
public:
    using Profile = std::function<double(double)>;

    MiscalibratedSampler(Profile profile, std::uint64_t seed,
                         std::vector<double> confidence_grid = default_grid());

    std::pair<double, bool> sample();
    std::vector<std::pair<double, bool>> sample_n(std::size_t n);

    /// 100 cell midpoints 0.005, 0.015, ..., 0.995.
    static std::vector<double> default_grid();

private:
    Profile profile_;
    std::vector<double> grid_;
    std::uint64_t state_;
    std::uint64_t counter_ = 0;

    double next_unit();
};

}  // namespace rankbed
