#include "rankbed/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

// Deterministic cross-platform Fisher-Yates; std::shuffle is
// implementation-defined, which would break seed reproducibility claims.
struct SplitMix {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    SplitMix rng{seed};
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next() % i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace

std::vector<CalibrationBin> bin_predictions(std::span<const std::pair<double, bool>> records,
                                            int bins) {
    if (bins < 1) throw ValidationError("bin count must be >= 1");
    std::vector<CalibrationBin> out(static_cast<std::size_t>(bins));
    for (int m = 0; m < bins; ++m) {
        out[static_cast<std::size_t>(m)].lower = static_cast<double>(m) / bins;
        out[static_cast<std::size_t>(m)].upper = static_cast<double>(m + 1) / bins;
    }
    std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> acc_sum(static_cast<std::size_t>(bins), 0.0);
    for (const auto& [confidence, correct] : records) {
        if (confidence < 0.0 || confidence > 1.0 || std::isnan(confidence)) {
            throw ValidationError("confidence outside [0,1]: " + format_double(confidence));
        }
        auto idx = static_cast<std::size_t>(confidence * bins);
        if (idx >= static_cast<std::size_t>(bins)) idx = static_cast<std::size_t>(bins) - 1;
        ++out[idx].count;
        conf_sum[idx] += confidence;
        acc_sum[idx] += correct ? 1.0 : 0.0;
    }
    for (std::size_t m = 0; m < out.size(); ++m) {
        if (out[m].count > 0) {
            out[m].mean_confidence = conf_sum[m] / static_cast<double>(out[m].count);
            out[m].accuracy = acc_sum[m] / static_cast<double>(out[m].count);
        }
    }
    return out;
}

double ece(std::span<const CalibrationBin> bins) {
    std::size_t total = 0;
    for (const auto& b : bins) total += b.count;
    if (total == 0) throw ValidationError("ece undefined over zero records");
    double value = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        value += (static_cast<double>(b.count) / static_cast<double>(total)) *
                 std::abs(b.accuracy - b.mean_confidence);
    }
    return value;
}

std::vector<ReliabilityRow> reliability_table(std::span<const CalibrationBin> bins) {
    std::vector<ReliabilityRow> rows;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        ReliabilityRow row;
        row.midpoint = (b.lower + b.upper) / 2.0;
        row.confidence = b.mean_confidence;
        row.accuracy = b.accuracy;
        row.count = b.count;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const ReliabilityRow& a, const ReliabilityRow& b) {
                  return a.midpoint < b.midpoint;
              });
    return rows;
}

void write_reliability_svg(const std::filesystem::path& path,
                           std::span<const ReliabilityRow> rows, const std::string& comment) {
    constexpr double size = 400.0, margin = 40.0;
    const double span = size - 2 * margin;
    auto x = [&](double v) { return margin + v * span; };
    auto y = [&](double v) { return size - margin - v * span; };

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write svg: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" "
           "viewBox=\"0 0 400 400\">\n";
    if (!comment.empty()) out << "<!-- " << comment << " -->\n";
    out << "<rect x=\"0\" y=\"0\" width=\"400\" height=\"400\" fill=\"white\"/>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
        << "\" height=\"" << span << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(1) << "\" y2=\""
        << y(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    for (const auto& row : rows) {
        out << "<circle cx=\"" << x(row.confidence) << "\" cy=\"" << y(row.accuracy)
            << "\" r=\"4\" fill=\"steelblue\"/>\n";
    }
    out << "<text x=\"" << size / 2 << "\" y=\"" << size - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">confidence</text>\n";
    out << "<text x=\"12\" y=\"" << size / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 "
        << size / 2 << ")\">accuracy</text>\n";
    out << "</svg>\n";
}

ClassPool build_matched_pool(const Qrels& qrels, const std::string& query_id, std::size_t n_pos,
                             std::size_t n_neg, std::uint64_t seed,
                             const CandidatePool& negative_source, int threshold) {
    ClassPool pool;
    pool.query_id = query_id;
    pool.seed = seed;

    std::vector<std::string> positives = qrels.relevant_docs(query_id, threshold);
    seeded_shuffle(positives, fnv1a64("pos:" + query_id, seed));
    if (positives.size() > n_pos) {
        positives.resize(n_pos);
    } else if (positives.size() < n_pos) {
        pool.short_positives = true;
    }
    pool.positives = std::move(positives);

    std::unordered_set<std::string> taken(pool.positives.begin(), pool.positives.end());
    std::vector<ClassPool::Negative> negatives;
    for (const auto& candidate : negative_source.candidates) {
        if (taken.count(candidate.doc_id) != 0) continue;
        const bool judged = qrels.judged(query_id, candidate.doc_id);
        if (judged && qrels.grade(query_id, candidate.doc_id) >= threshold) continue;
        negatives.push_back(ClassPool::Negative{candidate.doc_id, judged});
    }
    seeded_shuffle(negatives, fnv1a64("neg:" + query_id, seed));
    if (negatives.size() > n_neg) {
        negatives.resize(n_neg);
    } else if (negatives.size() < n_neg) {
        pool.short_negatives = true;
    }
    pool.negatives = std::move(negatives);
    return pool;
}

ConfusionReport confusion_rates(std::span<const std::pair<bool, bool>> judgments) {
    ConfusionReport report;
    for (const auto& [decision, label] : judgments) {
        if (label) {
            decision ? ++report.tp : ++report.fn;
        } else {
            decision ? ++report.fp : ++report.tn;
        }
    }
    if (report.tp + report.fn == 0) {
        throw ValidationError("confusion rates undefined: no positive labels");
    }
    if (report.tn + report.fp == 0) {
        throw ValidationError("confusion rates undefined: no negative labels");
    }
    report.tpr = static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fn);
    report.tnr = static_cast<double>(report.tn) / static_cast<double>(report.tn + report.fp);
    report.macro = (report.tpr + report.tnr) / 2.0;
    return report;
}

}  // namespace rankbed
