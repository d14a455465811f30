#include "rankbed/http_scorer.hpp"

#include <chrono>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rankbed/errors.hpp"

namespace rankbed {

using nlohmann::json;

namespace {

struct TokenAlt {
    std::string token;
    double logprob;
};

struct TokenInfo {
    std::string token;
    double logprob = 0.0;
    std::vector<TokenAlt> alternatives;  // includes the sampled token itself
};

FinishReason finish_reason_from(const std::string& name) {
    if (name == "length") return FinishReason::length;
    if (name == "stop" || name.empty()) return FinishReason::stop;
    return FinishReason::error;
}

}  // namespace

struct RemoteScorer::Impl {
    RemoteScorerConfig config;
    httplib::Client client;
    std::counting_semaphore<1 << 20> slots;

    explicit Impl(RemoteScorerConfig cfg)
        : config(std::move(cfg)),
          client(config.endpoint),
          slots(std::max(1, config.concurrency_cap)) {
        client.set_connection_timeout(config.timeout_s, 0);
        client.set_read_timeout(config.timeout_s, 0);
        client.set_write_timeout(config.timeout_s, 0);
    }
};

RemoteScorer::RemoteScorer(RemoteScorerConfig config) {
    if (config.endpoint.empty()) throw ValidationError("remote scorer endpoint not configured");
    impl_ = std::make_unique<Impl>(std::move(config));
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::post_with_retries(const std::string& body) {
    const auto& cfg = impl_->config;
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    int attempts = 0;
    int backoff_ms = cfg.backoff_initial_ms;
    std::string last_error;
    while (attempts < std::max(1, cfg.max_retries)) {
        ++attempts;
        impl_->slots.acquire();
        const int now = in_flight_.fetch_add(1) + 1;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
        }
        auto res = impl_->client.Post(cfg.path, headers, body, "application/json");
        in_flight_.fetch_sub(1);
        impl_->slots.release();

        if (res && res->status >= 200 && res->status < 300) {
            return res->body;
        }
        if (res && res->status >= 400 && res->status < 500) {
            // client errors are not retryable
            throw TransportError("scorer endpoint rejected request with status " +
                                     std::to_string(res->status),
                                 attempts);
        }
        last_error = res ? "status " + std::to_string(res->status)
                         : "transport: " + httplib::to_string(res.error());
        if (attempts < std::max(1, cfg.max_retries)) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
    throw TransportError("scorer request failed after " + std::to_string(attempts) +
                             " attempts (" + last_error + ")",
                         attempts);
}

namespace {

json build_body(const RemoteScorerConfig& cfg, const PromptRequest& request,
                bool want_logprobs) {
    json messages = json::array();
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    if (!request.assistant_prefix.empty()) {
        // prefill convention: the assistant turn is continued from this text
        messages.push_back({{"role", "assistant"}, {"content", request.assistant_prefix}});
    }
    json body = {
        {"model", cfg.model},
        {"messages", std::move(messages)},
        {"max_tokens", request.max_new_tokens},
        {"temperature", request.temperature},
    };
    if (want_logprobs) {
        body["logprobs"] = true;
        body["top_logprobs"] = cfg.top_logprobs;
    }
    return body;
}

std::vector<TokenInfo> extract_tokens(const json& choice) {
    std::vector<TokenInfo> tokens;
    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) return tokens;
    const json& lp = choice["logprobs"];
    if (!lp.contains("content") || !lp["content"].is_array()) return tokens;
    for (const auto& entry : lp["content"]) {
        TokenInfo info;
        info.token = entry.value("token", "");
        info.logprob = entry.value("logprob", 0.0);
        info.alternatives.push_back({info.token, info.logprob});
        if (entry.contains("top_logprobs")) {
            for (const auto& alt : entry["top_logprobs"]) {
                info.alternatives.push_back(
                    {alt.value("token", ""), alt.value("logprob", 0.0)});
            }
        }
        tokens.push_back(std::move(info));
    }
    return tokens;
}

bool all_whitespace(const std::string& s) {
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
    }
    return true;
}

// The answer position: first non-whitespace token at or after the end of
// the rationale terminator; the first non-whitespace token when no
// rationale is present.
std::size_t answer_position(const std::vector<TokenInfo>& tokens, const std::string& full_text) {
    std::size_t from_offset = 0;
    const auto terminator = full_text.rfind("</think>");
    if (terminator != std::string::npos) from_offset = terminator + 8;

    std::size_t offset = 0;
    std::size_t fallback = tokens.empty() ? 0 : tokens.size() - 1;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t begin = offset;
        offset += tokens[i].token.size();
        if (begin < from_offset) continue;
        if (all_whitespace(tokens[i].token)) continue;
        return i;
    }
    return fallback;
}

}  // namespace

AnswerLogits RemoteScorer::score_answer(const PromptRequest& request) {
    if (!request.need_answer_logprobs) {
        throw ValidationError("score_answer requires need_answer_logprobs");
    }
    const json body = build_body(impl_->config, request, /*want_logprobs=*/true);
    const std::string raw = post_with_retries(body.dump());

    json response;
    try {
        response = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw CapabilityError(std::string("malformed scorer response: ") + e.what());
    }
    if (!response.contains("choices") || response["choices"].empty()) {
        throw CapabilityError("scorer response carries no choices");
    }
    const json& choice = response["choices"][0];
    const std::vector<TokenInfo> tokens = extract_tokens(choice);
    if (tokens.empty()) {
        throw CapabilityError("provider returned no logprob data at the answer position");
    }

    std::string full_text;
    if (choice.contains("message")) full_text = choice["message"].value("content", "");
    const std::size_t pos = answer_position(tokens, full_text);

    AnswerLogits logits;
    logits.logprob_true = kFloorLogprob;
    logits.logprob_false = kFloorLogprob;
    logits.floored_true = true;
    logits.floored_false = true;
    for (const auto& alt : tokens[pos].alternatives) {
        // exact surface-form match; space/case variants stay distinct
        if (alt.token == request.answer_forms.positive && logits.floored_true) {
            logits.logprob_true = alt.logprob;
            logits.floored_true = false;
        } else if (alt.token == request.answer_forms.negative && logits.floored_false) {
            logits.logprob_false = alt.logprob;
            logits.floored_false = false;
        }
    }

    // rationale: generated text before the answer token
    std::size_t answer_offset = 0;
    for (std::size_t i = 0; i < pos; ++i) answer_offset += tokens[i].token.size();
    if (answer_offset > 0 && answer_offset <= full_text.size()) {
        logits.rationale_text = full_text.substr(0, answer_offset);
    }
    logits.truncated =
        finish_reason_from(choice.value("finish_reason", "stop")) == FinishReason::length;
    return logits;
}

GenerationResult RemoteScorer::generate(const PromptRequest& request) {
    if (request.max_new_tokens < 1) {
        throw ValidationError("generate requires max_new_tokens >= 1");
    }
    const json body = build_body(impl_->config, request, /*want_logprobs=*/false);
    const std::string raw = post_with_retries(body.dump());

    json response;
    try {
        response = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw CapabilityError(std::string("malformed scorer response: ") + e.what());
    }
    if (!response.contains("choices") || response["choices"].empty()) {
        throw CapabilityError("scorer response carries no choices");
    }
    const json& choice = response["choices"][0];

    GenerationResult result;
    if (choice.contains("message")) result.full_text = choice["message"].value("content", "");
    result.finish_reason = finish_reason_from(choice.value("finish_reason", "stop"));
    if (result.full_text.empty() && result.finish_reason != FinishReason::error) {
        result.finish_reason = FinishReason::error;
    }
    return result;
}

}  // namespace rankbed
