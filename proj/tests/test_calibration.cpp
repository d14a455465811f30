#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "rankbed/calibration.hpp"
#include "rankbed/errors.hpp"
#include "rankbed/scorer.hpp"
#include "testutil.hpp"

using namespace rankbed;

using Records = std::vector<std::pair<double, bool>>;

TEST_CASE("bin_predictions boundaries and counts") {
    const Records records{{0.85, true}, {0.85, false}, {0.85, true}, {0.85, false}};
    const auto bins = bin_predictions(records, 10);
    REQUIRE(bins.size() == 10);
    CHECK(bins[8].count == 4);  // bin 9, [0.8, 0.9)
    CHECK(bins[8].mean_confidence == doctest::Approx(0.85));
    CHECK(bins[8].accuracy == doctest::Approx(0.5));

    // confidence exactly 1.0 lands in the last bin
    const auto edge = bin_predictions(Records{{1.0, true}}, 10);
    CHECK(edge[9].count == 1);

    // M=1: a single bin holds everything
    const auto single = bin_predictions(records, 1);
    CHECK(single[0].count == 4);

    CHECK_THROWS_AS(bin_predictions(Records{{1.5, true}}, 10), ValidationError);
    CHECK_THROWS_AS(bin_predictions(Records{{-0.1, true}}, 10), ValidationError);
    CHECK_THROWS_AS(bin_predictions(records, 0), ValidationError);
}

TEST_CASE("bin counts always sum to N") {
    testutil::Rng rng(606);
    for (int round = 0; round < 50; ++round) {
        Records records;
        const int n = rng.uniform_int(1, 500);
        for (int i = 0; i < n; ++i) {
            records.emplace_back(rng.uniform(0.0, 1.0), rng.uniform_int(0, 1) == 1);
        }
        const int m = rng.uniform_int(1, 25);
        const auto bins = bin_predictions(records, m);
        std::size_t total = 0;
        for (const auto& b : bins) total += b.count;
        CHECK(total == records.size());
    }
}

TEST_CASE("ece fixtures") {
    // perfectly calibrated single-point bins
    Records perfect;
    for (int i = 0; i < 10; ++i) perfect.emplace_back(0.5, i < 5);
    CHECK(ece(bin_predictions(perfect, 1)) == doctest::Approx(0.0).epsilon(1e-15));

    // single bin: conf 0.8, acc 0.5 -> 0.3
    const Records single{{0.8, true}, {0.8, false}, {0.8, true}, {0.8, false}};
    CHECK(ece(bin_predictions(single, 1)) == doctest::Approx(0.3).epsilon(1e-12));

    CHECK_THROWS_AS(ece(bin_predictions(Records{}, 10)), ValidationError);
}

TEST_CASE("ece matches brute force and is permutation invariant") {
    testutil::Rng rng(7007);
    for (int round = 0; round < 100; ++round) {
        Records records;
        const int n = rng.uniform_int(1, 300);
        for (int i = 0; i < n; ++i) {
            records.emplace_back(rng.uniform(0.0, 1.0), rng.uniform_int(0, 1) == 1);
        }
        const int m = rng.uniform_int(1, 20);
        const double value = ece(bin_predictions(records, m));
        CHECK(value == doctest::Approx(oracles::brute_ece(records, m)).epsilon(1e-12));
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);

        Records shuffled = records;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            std::swap(shuffled[i],
                      shuffled[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
        }
        CHECK(ece(bin_predictions(shuffled, m)) == doctest::Approx(value).epsilon(1e-12));
    }
}

TEST_CASE("identity-profile sampler calibrates below 0.02 at 10k samples") {
    MiscalibratedSampler sampler([](double c) { return c; }, 1717);
    const auto records = sampler.sample_n(10000);
    CHECK(ece(bin_predictions(records, 10)) < 0.02);
}

TEST_CASE("reliability table rows") {
    const Records records{{0.85, true}, {0.85, false}, {0.15, true}};
    const auto rows = reliability_table(bin_predictions(records, 10));
    REQUIRE(rows.size() == 2);  // only non-empty bins
    CHECK(rows[0].midpoint == doctest::Approx(0.15));
    CHECK(rows[0].count == 1);
    CHECK(rows[1].midpoint == doctest::Approx(0.85));
    CHECK(rows[1].confidence == doctest::Approx(0.85));
    CHECK(rows[1].accuracy == doctest::Approx(0.5));

    // identity profile: rows hug the diagonal
    MiscalibratedSampler sampler([](double c) { return c; }, 99);
    const auto sampled = sampler.sample_n(20000);
    for (const auto& row : reliability_table(bin_predictions(sampled, 10))) {
        CHECK(std::abs(row.accuracy - row.confidence) < 0.06);
    }

    // constant-accuracy profile: a horizontal line at 0.5
    MiscalibratedSampler flat([](double) { return 0.5; }, 99);
    const auto flat_rows = reliability_table(bin_predictions(flat.sample_n(20000), 10));
    for (const auto& row : flat_rows) {
        CHECK(std::abs(row.accuracy - 0.5) < 0.06);
    }
}

TEST_CASE("reliability svg is written") {
    testutil::TempDir dir;
    const Records records{{0.85, true}, {0.85, false}, {0.15, true}};
    const auto rows = reliability_table(bin_predictions(records, 10));
    const auto path = dir.path() / "reliability.svg";
    write_reliability_svg(path, rows);
    const auto content = testutil::read_file(path);
    CHECK(content.find("<svg") != std::string::npos);
    CHECK(content.find("circle") != std::string::npos);
}

namespace {

Qrels pool_qrels(int n_pos, int n_judged_neg) {
    Qrels qrels;
    for (int i = 0; i < n_pos; ++i) qrels.set_grade("q1", "pos" + std::to_string(i), 1);
    for (int i = 0; i < n_judged_neg; ++i) qrels.set_grade("q1", "neg" + std::to_string(i), 0);
    return qrels;
}

CandidatePool pool_with(int n_pos, int n_judged_neg, int n_unjudged) {
    CandidatePool pool;
    pool.query_id = "q1";
    double score = 1000.0;
    auto push = [&](const std::string& id) {
        pool.candidates.push_back(Candidate{id, score});
        score -= 1.0;
    };
    for (int i = 0; i < n_pos; ++i) push("pos" + std::to_string(i));
    for (int i = 0; i < n_judged_neg; ++i) push("neg" + std::to_string(i));
    for (int i = 0; i < n_unjudged; ++i) push("unk" + std::to_string(i));
    pool.k = pool.candidates.size();
    return pool;
}

}  // namespace

TEST_CASE("matched pools honor requested sizes when available") {
    const Qrels qrels = pool_qrels(150, 100);
    const CandidatePool source = pool_with(150, 100, 150);
    const auto pool = build_matched_pool(qrels, "q1", 100, 200, 42, source);
    CHECK(pool.positives.size() == 100);
    CHECK(pool.negatives.size() == 200);
    CHECK_FALSE(pool.short_positives);
    CHECK_FALSE(pool.short_negatives);

    // both judged and unjudged negatives are eligible, tagged apart
    bool saw_judged = false, saw_unjudged = false;
    for (const auto& neg : pool.negatives) {
        (neg.judged ? saw_judged : saw_unjudged) = true;
    }
    CHECK(saw_judged);
    CHECK(saw_unjudged);
}

TEST_CASE("matched pools flag shortage instead of failing") {
    const Qrels qrels = pool_qrels(40, 5);
    const CandidatePool source = pool_with(40, 5, 10);
    const auto pool = build_matched_pool(qrels, "q1", 100, 200, 42, source);
    CHECK(pool.positives.size() == 40);
    CHECK(pool.short_positives);
    CHECK(pool.negatives.size() == 15);
    CHECK(pool.short_negatives);

    // no positives at all: flagged empty, not an error
    Qrels empty;
    const auto none = build_matched_pool(empty, "q1", 100, 200, 42, source);
    CHECK(none.positives.empty());
    CHECK(none.short_positives);
}

TEST_CASE("matched pools are deterministic and disjoint") {
    const Qrels qrels = pool_qrels(30, 20);
    const CandidatePool source = pool_with(30, 20, 40);
    const auto a = build_matched_pool(qrels, "q1", 10, 20, 7, source);
    const auto b = build_matched_pool(qrels, "q1", 10, 20, 7, source);
    CHECK(a.positives == b.positives);
    CHECK(a.negatives == b.negatives);

    testutil::Rng rng(31);
    for (int round = 0; round < 1000; ++round) {
        const auto seed = static_cast<std::uint64_t>(rng.uniform_int(0, 1 << 30));
        const auto pool = build_matched_pool(qrels, "q1", 10, 20, seed, source);
        std::set<std::string> pos(pool.positives.begin(), pool.positives.end());
        for (const auto& neg : pool.negatives) {
            CHECK(pos.count(neg.doc_id) == 0);
        }
    }
}

TEST_CASE("confusion_rates fixtures") {
    std::vector<std::pair<bool, bool>> judgments;
    auto add = [&](int n, bool decision, bool label) {
        for (int i = 0; i < n; ++i) judgments.emplace_back(decision, label);
    };

    // perfect classifier
    add(10, true, true);
    add(20, false, false);
    auto perfect = confusion_rates(judgments);
    CHECK(perfect.tpr == 1.0);
    CHECK(perfect.tnr == 1.0);
    CHECK(perfect.macro == 1.0);

    // all-TRUE classifier on a 1:2 pool
    judgments.clear();
    add(100, true, true);
    add(200, true, false);
    auto all_true = confusion_rates(judgments);
    CHECK(all_true.tpr == 1.0);
    CHECK(all_true.tnr == 0.0);
    CHECK(all_true.macro == 0.5);

    // (tp,fn,tn,fp) = (50,50,150,50)
    judgments.clear();
    add(50, true, true);
    add(50, false, true);
    add(150, false, false);
    add(50, true, false);
    auto mixed = confusion_rates(judgments);
    CHECK(mixed.tp == 50);
    CHECK(mixed.fn == 50);
    CHECK(mixed.tn == 150);
    CHECK(mixed.fp == 50);
    CHECK(mixed.tpr == 0.5);
    CHECK(mixed.tnr == 0.75);
    CHECK(mixed.macro == 0.625);
    CHECK(mixed.tp + mixed.fn == 100);
    CHECK(mixed.tn + mixed.fp == 200);

    // a missing class is an error naming the class
    judgments.clear();
    add(5, true, true);
    CHECK_THROWS_WITH_AS(confusion_rates(judgments), doctest::Contains("negative"),
                         ValidationError);
    judgments.clear();
    add(5, false, false);
    CHECK_THROWS_WITH_AS(confusion_rates(judgments), doctest::Contains("positive"),
                         ValidationError);
}
