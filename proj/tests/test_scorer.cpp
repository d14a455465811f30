#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rankbed/errors.hpp"
#include "rankbed/scorer.hpp"

using namespace rankbed;

namespace {

Qrels toy_qrels() {
    Qrels qrels;
    qrels.set_grade("q1", "rel", 2);
    qrels.set_grade("q1", "non", 0);
    return qrels;
}

}  // namespace

TEST_CASE("oracle_judge noise-free decisions") {
    const Qrels qrels = toy_qrels();
    auto rel = oracle_judge(qrels, "q1", "rel", 0.0, 0);
    CHECK(rel.logprob_true == 0.0);
    CHECK(rel.logprob_false == -10.0);

    auto non = oracle_judge(qrels, "q1", "non", 0.0, 0);
    CHECK(non.logprob_true == -10.0);
    CHECK(non.logprob_false == 0.0);

    // unjudged pairs are grade 0
    auto unjudged = oracle_judge(qrels, "q1", "unknown", 0.0, 0);
    CHECK(unjudged.logprob_true == -10.0);
}

TEST_CASE("oracle_judge noise is reproducible and seed-sensitive") {
    const Qrels qrels = toy_qrels();
    int flips_a = 0, flips_b = 0;
    for (int i = 0; i < 400; ++i) {
        const std::string doc = "doc" + std::to_string(i);
        auto first = oracle_judge(qrels, "q1", doc, 0.5, 7);
        auto second = oracle_judge(qrels, "q1", doc, 0.5, 7);
        CHECK(first.logprob_true == second.logprob_true);  // bit-for-bit repeatable
        if (first.logprob_true == 0.0) ++flips_a;          // grade 0 flipped to relevant
        if (oracle_judge(qrels, "q1", doc, 0.5, 8).logprob_true == 0.0) ++flips_b;
    }
    // about half flip at noise 0.5, and different seeds flip different pairs
    CHECK(flips_a > 120);
    CHECK(flips_a < 280);
    CHECK(flips_a != flips_b);
}

TEST_CASE("oracle scorer ranks a window by relevance with stable ties") {
    Qrels qrels;
    qrels.set_grade("q1", "a", 0);
    qrels.set_grade("q1", "b", 1);
    qrels.set_grade("q1", "c", 1);

    OracleScorer scorer(qrels);
    PromptRequest request;
    request.query_id = "q1";
    request.doc_ids = {"a", "b", "c"};  // gold order: b, c (ties keep order), then a
    request.max_new_tokens = 256;

    auto result = scorer.generate(request);
    CHECK(result.finish_reason == FinishReason::stop);
    CHECK(result.full_text.find("<answer> [2] > [3] > [1] </answer>") != std::string::npos);
}

TEST_CASE("oracle scorer truncates generation at the token budget") {
    Qrels qrels;
    qrels.set_grade("q1", "a", 1);
    OracleScorer scorer(qrels);
    PromptRequest request;
    request.query_id = "q1";
    request.doc_ids = {"a", "b"};
    request.max_new_tokens = 1;
    auto result = scorer.generate(request);
    CHECK(result.finish_reason == FinishReason::length);
    CHECK(result.full_text.find("<answer>") == std::string::npos);
}

TEST_CASE("oracle scorer requires routing metadata") {
    Qrels qrels;
    OracleScorer scorer(qrels);
    PromptRequest request;
    request.need_answer_logprobs = true;
    CHECK_THROWS_AS(scorer.score_answer(request), ValidationError);
}

TEST_CASE("miscalibrated sampler: identity profile approaches zero ECE") {
    MiscalibratedSampler sampler([](double c) { return c; }, 42);
    const auto records = sampler.sample_n(10000);
    const double e = oracles::brute_ece(records, 10);
    CHECK(e < 0.02);

    // determinism: same seed, same stream
    MiscalibratedSampler again([](double c) { return c; }, 42);
    CHECK(again.sample_n(100) == MiscalibratedSampler([](double c) { return c; }, 42).sample_n(100));
}

TEST_CASE("miscalibrated sampler: constant 0.5 accuracy at confidence 0.8") {
    // single grid point 0.8 -> one occupied bin with |0.5 - 0.8| = 0.3
    MiscalibratedSampler sampler([](double) { return 0.5; }, 9, {0.8});
    const auto records = sampler.sample_n(20000);
    const double e = oracles::brute_ece(records, 10);
    CHECK(e == doctest::Approx(0.3).epsilon(0.04));
}

TEST_CASE("miscalibrated sampler: shifted profile has closed-form ECE 0.095") {
    // a(c) = max(0, c - 0.1) on the default midpoint grid with M=10:
    // nine bins contribute 0.1 each, the lowest clips to |0 - 0.05|
    MiscalibratedSampler sampler([](double c) { return c - 0.1; }, 123);
    const auto records = sampler.sample_n(40000);
    const double e = oracles::brute_ece(records, 10);
    CHECK(e == doctest::Approx(0.095).epsilon(0.12));
}
