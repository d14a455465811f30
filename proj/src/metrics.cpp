#include "rankbed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rankbed/errors.hpp"
#include "rankbed/listwise.hpp"

namespace rankbed {

namespace {

double dcg(std::span<const int> rels_by_rank, int k) {
    double out = 0.0;
    const auto depth = std::min<std::size_t>(rels_by_rank.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        out += (std::exp2(static_cast<double>(rels_by_rank[i])) - 1.0) /
               std::log2(static_cast<double>(i) + 2.0);
    }
    return out;
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked,
                 const std::unordered_map<std::string, int>& grades, int k) {
    if (k < 1) throw ValidationError("ndcg_at_k requires k >= 1");
    std::vector<int> rels;
    rels.reserve(ranked.size());
    for (const auto& doc : ranked) {
        auto it = grades.find(doc);
        rels.push_back(it == grades.end() ? 0 : it->second);
    }
    std::vector<int> ideal = rels;
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    const double best = dcg(ideal, k);
    if (best <= 0.0) return 0.0;  // no relevant docs in the pool
    return dcg(rels, k) / best;
}

double recall_at_k(std::span<const std::string> ranked,
                   const std::unordered_set<std::string>& gold_relevant, int k) {
    if (k < 1) throw ValidationError("recall_at_k requires k >= 1");
    if (gold_relevant.empty()) return 0.0;
    std::size_t hits = 0;
    const auto depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < depth; ++i) {
        if (gold_relevant.count(ranked[i]) != 0) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gold_relevant.size());
}

double rbo(std::span<const std::string> pred, std::span<const std::string> gold, double p) {
    if (p <= 0.0 || p >= 1.0) throw ValidationError("rbo persistence must lie inside (0,1)");
    std::unordered_set<std::string> pred_seen;
    std::unordered_set<std::string> gold_seen;
    std::size_t overlap = 0;
    double weight = 1.0;  // p^(d-1)
    double sum = 0.0;
    for (std::size_t d = 1; d <= pred.size(); ++d) {
        const auto& new_pred = pred[d - 1];
        if (d <= gold.size()) {
            const auto& new_gold = gold[d - 1];
            if (new_pred == new_gold) {
                ++overlap;
            } else {
                if (gold_seen.count(new_pred) != 0) ++overlap;
                if (pred_seen.count(new_gold) != 0) ++overlap;
            }
            gold_seen.insert(new_gold);
        } else if (gold_seen.count(new_pred) != 0) {
            ++overlap;
        }
        pred_seen.insert(new_pred);
        sum += weight * static_cast<double>(overlap) / static_cast<double>(d);
        weight *= p;
    }
    return (1.0 - p) * sum;
}

RewardBreakdown multi_view_reward(std::string_view raw_model_text,
                                  const std::vector<std::string>& window_docs,
                                  const std::vector<int>& grades, const RewardConfig& cfg) {
    if (window_docs.size() != grades.size()) {
        throw ValidationError("multi_view_reward: one grade per window document required");
    }
    const int k = static_cast<int>(window_docs.size());
    const ParsedAnswer parsed = parse_permutation(raw_model_text, k);

    RewardBreakdown out;
    if (parsed.output_format_valid && parsed.answer_format_valid) {
        out.gate = GateVerdict::both_valid;
    } else if (parsed.output_format_valid) {
        out.gate = GateVerdict::output_only;
        out.final_r = 0.0;
        return out;
    } else {
        out.gate = GateVerdict::invalid;
        out.final_r = -1.0;
        return out;
    }

    std::vector<std::string> pred_docs;
    pred_docs.reserve(window_docs.size());
    for (int id : parsed.identifiers) {
        pred_docs.push_back(window_docs[static_cast<std::size_t>(id - 1)]);
    }

    // Gold ranking: grades descending, ties keep incoming window order.
    std::vector<std::size_t> gold_order(window_docs.size());
    for (std::size_t i = 0; i < gold_order.size(); ++i) gold_order[i] = i;
    std::stable_sort(gold_order.begin(), gold_order.end(),
                     [&](std::size_t a, std::size_t b) { return grades[a] > grades[b]; });
    std::vector<std::string> gold_docs;
    gold_docs.reserve(window_docs.size());
    for (std::size_t i : gold_order) gold_docs.push_back(window_docs[i]);

    std::unordered_map<std::string, int> grade_map;
    std::unordered_set<std::string> gold_relevant;
    for (std::size_t i = 0; i < window_docs.size(); ++i) {
        grade_map.emplace(window_docs[i], grades[i]);
        if (grades[i] >= cfg.relevance_threshold) gold_relevant.insert(window_docs[i]);
    }

    out.ndcg_at_10 = ndcg_at_k(pred_docs, grade_map, cfg.cutoff);
    out.recall_at_10 = recall_at_k(pred_docs, gold_relevant, cfg.cutoff);
    out.rbo = rbo(pred_docs, gold_docs, cfg.rbo_p);
    out.r_m = out.ndcg_at_10 + cfg.phi * out.recall_at_10 + cfg.gamma * out.rbo;
    out.final_r = out.r_m;
    return out;
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps) {
    if (rewards.size() < 2) {
        throw ValidationError("group_advantages needs a group of at least 2 rewards");
    }
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    const double denom = std::sqrt(var) + eps;
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards) {
        out.push_back(denom == 0.0 ? 0.0 : (r - mean) / denom);
    }
    return out;
}

std::string to_string(GateVerdict verdict) {
    switch (verdict) {
        case GateVerdict::both_valid: return "both_valid";
        case GateVerdict::output_only: return "output_only";
        case GateVerdict::invalid: return "invalid";
    }
    return "invalid";
}

}  // namespace rankbed
