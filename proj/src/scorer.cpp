#include "rankbed/scorer.hpp"

#include <algorithm>
#include <numeric>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

// Seeded pair hash shared by the pointwise and listwise oracle paths so a
// fixed (query, doc, seed) always flips the same way.
double flip_unit(const std::string& query_id, const std::string& doc_id, std::uint64_t seed) {
    std::uint64_t h = fnv1a64(query_id);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(doc_id, h);
    h = fnv1a64("\x1f", h);
    char seed_bytes[8];
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    h = fnv1a64(std::string_view(seed_bytes, 8), h);
    return hash_to_unit(h);
}

bool noisy_relevant(const Qrels& qrels, const std::string& query_id, const std::string& doc_id,
                    double noise, std::uint64_t seed, int threshold) {
    bool relevant = qrels.grade(query_id, doc_id) >= threshold;
    if (noise > 0.0 && flip_unit(query_id, doc_id, seed) < noise) relevant = !relevant;
    return relevant;
}

}  // namespace

AnswerLogits oracle_judge(const Qrels& qrels, const std::string& query_id,
                          const std::string& doc_id, double noise_level, std::uint64_t seed,
                          int threshold) {
    AnswerLogits logits;
    if (noisy_relevant(qrels, query_id, doc_id, noise_level, seed, threshold)) {
        logits.logprob_true = 0.0;
        logits.logprob_false = -10.0;
    } else {
        logits.logprob_true = -10.0;
        logits.logprob_false = 0.0;
    }
    return logits;
}

OracleScorer::OracleScorer(const Qrels& qrels, double noise_level, std::uint64_t seed,
                           int threshold)
    : qrels_(qrels), noise_(noise_level), seed_(seed), threshold_(threshold) {}

AnswerLogits OracleScorer::score_answer(const PromptRequest& request) {
    if (!request.need_answer_logprobs) {
        throw ValidationError("score_answer requires need_answer_logprobs");
    }
    if (request.query_id.empty() || request.doc_ids.size() != 1) {
        throw ValidationError("oracle scorer needs (query_id, single doc_id) metadata");
    }
    return oracle_judge(qrels_, request.query_id, request.doc_ids[0], noise_, seed_, threshold_);
}

GenerationResult OracleScorer::generate(const PromptRequest& request) {
    if (request.max_new_tokens < 1) {
        throw ValidationError("generate requires max_new_tokens >= 1");
    }
    if (request.query_id.empty() || request.doc_ids.empty()) {
        throw ValidationError("oracle scorer needs (query_id, doc_ids) metadata");
    }
    const std::size_t n = request.doc_ids.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> relevant(n);
    for (std::size_t i = 0; i < n; ++i) {
        relevant[i] = noisy_relevant(qrels_, request.query_id, request.doc_ids[i], noise_, seed_,
                                     threshold_)
                          ? 1
                          : 0;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return relevant[a] > relevant[b];  // ties keep incoming order
    });

    std::string text = "<think></think>\n<answer>";
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) text += " >";
        text += " [" + std::to_string(order[i] + 1) + "]";
    }
    text += " </answer>";

    GenerationResult result;
    const auto n_tokens = count_ws_tokens(text);
    if (n_tokens > static_cast<std::size_t>(request.max_new_tokens)) {
        const auto cut = truncate_to_tokens(text, request.max_new_tokens);
        // drop the marker: a length-stopped stream just ends
        result.full_text = cut.text.substr(0, cut.text.size() - kTruncationMarker.size());
        while (!result.full_text.empty() && result.full_text.back() == ' ') {
            result.full_text.pop_back();
        }
        result.finish_reason = FinishReason::length;
    } else {
        result.full_text = std::move(text);
        result.finish_reason = FinishReason::stop;
    }
    return result;
}

std::vector<double> MiscalibratedSampler::default_grid() {
    std::vector<double> grid;
    grid.reserve(100);
    for (int i = 0; i < 100; ++i) grid.push_back((static_cast<double>(i) + 0.5) / 100.0);
    return grid;
}

MiscalibratedSampler::MiscalibratedSampler(Profile profile, std::uint64_t seed,
                                           std::vector<double> confidence_grid)
    : profile_(std::move(profile)), grid_(std::move(confidence_grid)), state_(seed) {
    if (grid_.empty()) throw ValidationError("confidence grid must be non-empty");
    for (double c : grid_) {
        if (c < 0.0 || c > 1.0) throw ValidationError("confidence grid values must be in [0,1]");
    }
}

double MiscalibratedSampler::next_unit() {
    // splitmix64 stream keyed on (seed, counter); stable across platforms
    std::uint64_t z = state_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return hash_to_unit(z);
}

std::pair<double, bool> MiscalibratedSampler::sample() {
    const auto idx =
        static_cast<std::size_t>(next_unit() * static_cast<double>(grid_.size()));
    const double confidence = grid_[std::min(idx, grid_.size() - 1)];
    double accuracy = profile_(confidence);
    accuracy = std::clamp(accuracy, 0.0, 1.0);
    const bool correct = next_unit() < accuracy;
    return {confidence, correct};
}

std::vector<std::pair<double, bool>> MiscalibratedSampler::sample_n(std::size_t n) {
    std::vector<std::pair<double, bool>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample());
    return out;
}

}  // namespace rankbed
