#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "rankbed/scorer.hpp"

namespace rankbed {

struct RemoteScorerConfig {
    std::string endpoint;  // e.g. "http://localhost:8000"
    std::string model;
    std::string api_key;       // sent as Bearer token when non-empty
    std::string path = "/v1/chat/completions";
    int max_retries = 3;       // total attempts
    int backoff_initial_ms = 500;  // doubled per retry; transport/5xx only
    int timeout_s = 60;
    int concurrency_cap = 8;   // bound on in-flight requests
    int top_logprobs = 20;
};

/// Chat-completions client. Requests carry model, system+user messages,
/// max_tokens, temperature and (when answer logprobs are needed) the
/// logprobs flag with a top-alternatives count. The answer position is the
/// first generated token after the rationale terminator "</think>", or the
/// first non-whitespace token when no rationale is present; a surface form
/// missing from that position's alternatives is floored to kFloorLogprob
/// and flagged, never fabricated.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(RemoteScorerConfig config);
    ~RemoteScorer() override;

    AnswerLogits score_answer(const PromptRequest& request) override;
    GenerationResult generate(const PromptRequest& request) override;

    /// Largest number of simultaneously outstanding requests observed.
    int max_in_flight() const { return max_in_flight_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};

    std::string post_with_retries(const std::string& body);
};

}  // namespace rankbed
