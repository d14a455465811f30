#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rankbed/config.hpp"
#include "rankbed/corpus.hpp"
#include "rankbed/scorer.hpp"

namespace rankbed {

// Exit codes shared by the pipeline and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitDegraded = 3;

/// Runs one pipeline command ("index", "retrieve", "rerank", "eval",
/// "reward", "calibrate", "classify-eval", "report") against a validated
/// config, writing artifacts under cfg.output_dir. Every artifact embeds a
/// provenance header (config digest, seed, tag). Idempotent for mock
/// scorers: identical config and seed reproduce identical bytes.
int orchestrate(const RunConfig& cfg, const std::string& command);

// Individual stages, exposed for tests. Each returns an exit code.
int run_index(const RunConfig& cfg);
int run_retrieve(const RunConfig& cfg);
int run_rerank(const RunConfig& cfg);
int run_eval(const RunConfig& cfg);
int run_reward(const RunConfig& cfg);
int run_calibrate(const RunConfig& cfg);
int run_classify_eval(const RunConfig& cfg);
int run_report(const RunConfig& cfg);

struct EvalSummary {
    struct PerQuery {
        std::string query_id;
        double ndcg_at_10 = 0.0;
        double recall_at_10 = 0.0;
        bool excluded = false;  // no judged-relevant docs for the query
    };
    std::vector<PerQuery> per_query;  // sorted by query_id
    double mean_ndcg_at_10 = 0.0;     // over included queries
    double mean_recall_at_10 = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0;
};

/// Pure evaluation of a run against qrels; independent of how the run was
/// produced.
EvalSummary evaluate_run(const RunFile& run, const Qrels& qrels, int relevance_threshold,
                         int cutoff = 10);

/// Deterministic toy benchmark: every query carries a distinctive term
/// shared only with its relevant documents, so first-stage pools always
/// contain them and an oracle reranker can reach NDCG@10 = 1. Writes
/// corpus.jsonl, queries.jsonl, qrels.txt into dir.
void make_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed,
                            std::size_t n_queries = 50, std::size_t n_docs = 200);

/// Scorer factory for the configured kind. The oracle kind needs qrels;
/// remote reads endpoint/model/credentials from the config and
/// environment.
std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg, const Qrels& qrels);

}  // namespace rankbed
