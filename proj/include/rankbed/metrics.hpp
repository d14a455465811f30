#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rankbed {

struct RewardConfig {
    double phi = 0.5;    // Recall@cutoff weight
    double gamma = 0.5;  // RBO weight
    double rbo_p = 0.9;  // persistence, strictly inside (0,1)
    int cutoff = 10;
    int relevance_threshold = 1;  // binary gold cut for the recall term
};

/// NDCG@k with gain 2^rel - 1 and log2(i+1) discount. The ideal ranking is
/// taken over the candidate list itself, so a perfect reordering of any
/// pool scores 1.0 regardless of relevant documents outside it. Returns 0
/// when no ranked document has a positive grade.
double ndcg_at_k(std::span<const std::string> ranked,
                 const std::unordered_map<std::string, int>& grades, int k);

/// |top-k intersect gold| / |gold|; 0 when the gold set is empty.
double recall_at_k(std::span<const std::string> ranked,
                   const std::unordered_set<std::string>& gold_relevant, int k);

/// Rank-biased overlap, finite prefix form (no extrapolation):
/// (1-p) * sum_{d=1..|pred|} p^(d-1) * |pred_1:d intersect gold_1:d| / d.
double rbo(std::span<const std::string> pred, std::span<const std::string> gold, double p);

enum class GateVerdict { both_valid, output_only, invalid };

struct RewardBreakdown {
    double ndcg_at_10 = 0.0;
    double recall_at_10 = 0.0;
    double rbo = 0.0;
    double r_m = 0.0;
    GateVerdict gate = GateVerdict::invalid;
    double final_r = -1.0;
};

/// The gated multi-view ranking reward. Both validators run over the raw
/// model text; when both pass, R_m = NDCG@cutoff + phi*Recall@cutoff +
/// gamma*RBO of the extracted permutation against the gold ranking
/// (grades descending, ties in incoming window order) and the final reward
/// is R_m. Output format valid alone yields 0; anything else -1. Exactly
/// one branch fires for every input text.
RewardBreakdown multi_view_reward(std::string_view raw_model_text,
                                  const std::vector<std::string>& window_docs,
                                  const std::vector<int>& grades, const RewardConfig& cfg);

/// Group-relative scalar advantages: (r_i - mean) / (std + eps) with the
/// population standard deviation. Broadcasting to token level is the
/// trainer's job. Throws ValidationError for groups smaller than 2.
std::vector<double> group_advantages(std::span<const double> rewards, double eps);

std::string to_string(GateVerdict verdict);

}  // namespace rankbed
