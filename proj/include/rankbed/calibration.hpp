#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankbed/bm25.hpp"
#include "rankbed/corpus.hpp"

namespace rankbed {

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_confidence = 0.0;  // conf(B_m); 0 when empty
    double accuracy = 0.0;         // acc(B_m); 0 when empty
};

/// M equal-width bins over [0,1], right-inclusive at 1.0 so confidence
/// exactly 1.0 lands in the last bin. Throws on confidence outside [0,1]
/// or M < 1.
std::vector<CalibrationBin> bin_predictions(std::span<const std::pair<double, bool>> records,
                                            int bins);

/// ECE = sum_m (|B_m|/N) * |acc(B_m) - conf(B_m)|; empty bins contribute
/// nothing. Throws when N = 0.
double ece(std::span<const CalibrationBin> bins);

struct ReliabilityRow {
    double midpoint = 0.0;
    double confidence = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

/// One row per non-empty bin, ordered by midpoint.
std::vector<ReliabilityRow> reliability_table(std::span<const CalibrationBin> bins);

/// Standalone reliability diagram (diagonal + bin points) for report
/// inclusion. A non-empty comment is embedded as provenance.
void write_reliability_svg(const std::filesystem::path& path,
                           std::span<const ReliabilityRow> rows,
                           const std::string& comment = "");

struct ClassPool {
    std::string query_id;
    std::uint64_t seed = 0;
    std::vector<std::string> positives;
    struct Negative {
        std::string doc_id;
        bool judged = false;  // judged non-relevant vs unjudged pool doc
        bool operator==(const Negative&) const = default;
    };
    std::vector<Negative> negatives;
    bool short_positives = false;  // fewer available than requested
    bool short_negatives = false;
};

/// Matched-prior evaluation pool: positives sampled without replacement
/// from docs judged at or above the threshold, negatives from the
/// candidate pool's judged-non-relevant or unjudged docs. Deterministic
/// given the seed; short pools are flagged, an empty positive set is not
/// an error.
ClassPool build_matched_pool(const Qrels& qrels, const std::string& query_id, std::size_t n_pos,
                             std::size_t n_neg, std::uint64_t seed,
                             const CandidatePool& negative_source, int threshold = 1);

struct ConfusionReport {
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    double tpr = 0.0;    // tp / (tp + fn), recall on positives
    double tnr = 0.0;    // tn / (tn + fp), specificity
    double macro = 0.0;  // (tpr + tnr) / 2
};

/// Counts and class-conditional rates over (decision, true_label) pairs.
/// Throws ValidationError naming the class when one is absent, since its
/// rate is undefined.
ConfusionReport confusion_rates(std::span<const std::pair<bool, bool>> judgments);

}  // namespace rankbed
