#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rankbed/bm25.hpp"
#include "rankbed/listwise.hpp"
#include "rankbed/metrics.hpp"
#include "rankbed/pointwise.hpp"

namespace rankbed {

enum class RerankerKind { point_direct, point_reason, list_direct, list_reason };
enum class ScorerKind { oracle, remote };

std::string to_string(RerankerKind kind);
RerankerKind reranker_kind_from_string(const std::string& name);

struct PathsConfig {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string first_stage_run;  // optional: replay an external first stage
    std::string run;              // optional: run file to evaluate
    std::string index;            // optional: persisted index location
};

struct ScorerSelection {
    ScorerKind kind = ScorerKind::oracle;
    std::uint64_t seed = 0;
    double noise = 0.0;  // oracle decision-flip probability
    std::string endpoint;  // remote; RANKBED_ENDPOINT overrides
    std::string model;
    std::string api_key_env = "RANKBED_API_KEY";
    int timeout_s = 60;
    int max_retries = 3;
    int backoff_initial_ms = 500;
    int top_logprobs = 20;
    std::string surface_positive = "true";
    std::string surface_negative = "false";
};

struct RetrievalConfig {
    std::size_t k = 100;  // first-stage pool size
    Bm25Params bm25;
};

struct ReferencePoint {
    std::string label;
    double ece = 0.0;
};

struct CalibrationConfig {
    int bins = 10;
    std::size_t n_pos = 100;
    std::size_t n_neg = 200;
    std::vector<ReferencePoint> reference_points;  // annotations echoed in reports
};

struct RunConfig {
    PathsConfig paths;
    std::string output_dir = "out";
    RerankerKind reranker = RerankerKind::point_direct;
    ScorerSelection scorer;
    RetrievalConfig retrieval;
    PointwiseConfig pointwise;
    ListwiseConfig listwise;
    RewardConfig reward;
    CalibrationConfig calibration;
    int relevance_threshold = 1;
    bool strict = false;  // strict vs repair/fail-soft
    int concurrency = 8;
    std::uint64_t seed = 0;
    std::string tag;  // defaults to the reranker kind name

    std::string digest;  // hash of the fully-defaulted config document
};

/// Loads, overrides, defaults and validates a config file. Overrides are
/// "dotted.key=value" pairs and win over the file. Unknown keys anywhere
/// are an error naming the key; referenced input paths must exist.
RunConfig validate_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {},
                          std::vector<std::string>* warnings = nullptr);

/// Parses config from a JSON document string (same contract).
RunConfig parse_config_text(const std::string& json_text,
                            const std::vector<std::string>& overrides = {},
                            std::vector<std::string>* warnings = nullptr);

}  // namespace rankbed
