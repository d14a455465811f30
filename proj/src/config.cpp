#include "rankbed/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& prefix,
                  const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        if (known.find(key) == known.end()) {
            throw ValidationError("unknown config key: " +
                                  (prefix.empty() ? key : prefix + "." + key));
        }
    }
}

template <typename T>
T field(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
}

json parse_scalar(const std::string& value) {
    // overrides arrive as strings; try number/bool, else keep the string
    if (value == "true") return json(true);
    if (value == "false") return json(false);
    try {
        std::size_t pos = 0;
        if (value.find('.') == std::string::npos && value.find('e') == std::string::npos &&
            value.find('E') == std::string::npos) {
            const long long v = std::stoll(value, &pos);
            if (pos == value.size()) return json(v);
        } else {
            const double v = std::stod(value, &pos);
            if (pos == value.size()) return json(v);
        }
    } catch (const std::exception&) {
    }
    return json(value);
}

void apply_override(json& doc, const std::string& expression) {
    const auto eq = expression.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override must look like key=value, got: " + expression);
    }
    const std::string path = expression.substr(0, eq);
    const std::string value = expression.substr(eq + 1);
    if (path.empty()) throw ValidationError("override with empty key: " + expression);

    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        node = &((*node)[parts[i]]);
        if (!node->is_object() && !node->is_null()) {
            throw ValidationError("override path crosses a non-object: " + path);
        }
    }
    (*node)[parts.back()] = parse_scalar(value);
}

void check_path_exists(const std::string& value, const std::string& key) {
    if (value.empty()) return;
    if (!std::filesystem::exists(value)) {
        throw ValidationError("config path '" + key + "' does not exist: " + value);
    }
}

ScorerKind scorer_kind_from(const std::string& name) {
    if (name == "oracle") return ScorerKind::oracle;
    if (name == "remote") return ScorerKind::remote;
    throw ValidationError("unknown scorer kind: " + name);
}

}  // namespace

std::string to_string(RerankerKind kind) {
    switch (kind) {
        case RerankerKind::point_direct: return "point-direct";
        case RerankerKind::point_reason: return "point-reason";
        case RerankerKind::list_direct: return "list-direct";
        case RerankerKind::list_reason: return "list-reason";
    }
    return "point-direct";
}

RerankerKind reranker_kind_from_string(const std::string& name) {
    if (name == "point-direct") return RerankerKind::point_direct;
    if (name == "point-reason") return RerankerKind::point_reason;
    if (name == "list-direct") return RerankerKind::list_direct;
    if (name == "list-reason") return RerankerKind::list_reason;
    throw ValidationError("unknown reranker kind: " + name);
}

RunConfig parse_config_text(const std::string& json_text,
                            const std::vector<std::string>& overrides,
                            std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config root must be a JSON object");

    for (const auto& ov : overrides) apply_override(doc, ov);

    require_keys(doc, "",
                 {"paths", "output_dir", "reranker", "scorer", "retrieval", "pointwise",
                  "listwise", "reward", "calibration", "relevance_threshold", "mode",
                  "concurrency", "seed", "tag"});

    RunConfig cfg;

    if (doc.contains("paths")) {
        const json& p = doc["paths"];
        require_keys(p, "paths", {"corpus", "queries", "qrels", "first_stage_run", "run",
                                  "index"});
        cfg.paths.corpus = field<std::string>(p, "corpus", "");
        cfg.paths.queries = field<std::string>(p, "queries", "");
        cfg.paths.qrels = field<std::string>(p, "qrels", "");
        cfg.paths.first_stage_run = field<std::string>(p, "first_stage_run", "");
        cfg.paths.run = field<std::string>(p, "run", "");
        cfg.paths.index = field<std::string>(p, "index", "");
    }

    cfg.output_dir = field<std::string>(doc, "output_dir", cfg.output_dir);
    cfg.reranker =
        reranker_kind_from_string(field<std::string>(doc, "reranker", "point-direct"));

    if (doc.contains("scorer")) {
        const json& s = doc["scorer"];
        require_keys(s, "scorer",
                     {"kind", "seed", "noise", "endpoint", "model", "api_key_env", "timeout_s",
                      "max_retries", "backoff_initial_ms", "top_logprobs", "surface_positive",
                      "surface_negative"});
        cfg.scorer.kind = scorer_kind_from(field<std::string>(s, "kind", "oracle"));
        cfg.scorer.seed = field<std::uint64_t>(s, "seed", cfg.scorer.seed);
        cfg.scorer.noise = field<double>(s, "noise", cfg.scorer.noise);
        cfg.scorer.endpoint = field<std::string>(s, "endpoint", "");
        cfg.scorer.model = field<std::string>(s, "model", "");
        cfg.scorer.api_key_env = field<std::string>(s, "api_key_env", cfg.scorer.api_key_env);
        cfg.scorer.timeout_s = field<int>(s, "timeout_s", cfg.scorer.timeout_s);
        cfg.scorer.max_retries = field<int>(s, "max_retries", cfg.scorer.max_retries);
        cfg.scorer.backoff_initial_ms =
            field<int>(s, "backoff_initial_ms", cfg.scorer.backoff_initial_ms);
        cfg.scorer.top_logprobs = field<int>(s, "top_logprobs", cfg.scorer.top_logprobs);
        cfg.scorer.surface_positive =
            field<std::string>(s, "surface_positive", cfg.scorer.surface_positive);
        cfg.scorer.surface_negative =
            field<std::string>(s, "surface_negative", cfg.scorer.surface_negative);
        if (cfg.scorer.surface_positive.empty() || cfg.scorer.surface_negative.empty() ||
            cfg.scorer.surface_positive == cfg.scorer.surface_negative) {
            throw ValidationError("surface forms must be non-empty and distinct");
        }
        if (cfg.scorer.noise < 0.0 || cfg.scorer.noise >= 1.0) {
            throw ValidationError("scorer noise must lie in [0,1)");
        }
    }

    if (doc.contains("retrieval")) {
        const json& r = doc["retrieval"];
        require_keys(r, "retrieval", {"k", "bm25_k1", "bm25_b"});
        cfg.retrieval.k = field<std::size_t>(r, "k", cfg.retrieval.k);
        cfg.retrieval.bm25.k1 = field<double>(r, "bm25_k1", cfg.retrieval.bm25.k1);
        cfg.retrieval.bm25.b = field<double>(r, "bm25_b", cfg.retrieval.bm25.b);
        if (cfg.retrieval.k < 1) throw ValidationError("retrieval.k must be >= 1");
    }

    const bool is_pointwise = cfg.reranker == RerankerKind::point_direct ||
                              cfg.reranker == RerankerKind::point_reason;
    if (doc.contains("pointwise")) {
        if (!is_pointwise && warnings != nullptr) {
            warnings->push_back("pointwise section ignored: reranker is " +
                                to_string(cfg.reranker));
        }
        const json& p = doc["pointwise"];
        require_keys(p, "pointwise",
                     {"traces", "aggregation", "max_rationale_tokens", "prompt_token_budget",
                      "trace_temperature", "retain_rationales"});
        cfg.pointwise.traces = field<int>(p, "traces", cfg.pointwise.traces);
        const auto agg = field<std::string>(p, "aggregation", "mean");
        if (agg == "mean") {
            cfg.pointwise.aggregation = Aggregation::mean;
        } else if (agg == "vote") {
            cfg.pointwise.aggregation = Aggregation::vote;
        } else {
            throw ValidationError("unknown aggregation: " + agg);
        }
        cfg.pointwise.max_rationale_tokens =
            field<int>(p, "max_rationale_tokens", cfg.pointwise.max_rationale_tokens);
        cfg.pointwise.prompt_token_budget =
            field<int>(p, "prompt_token_budget", cfg.pointwise.prompt_token_budget);
        cfg.pointwise.trace_temperature =
            field<double>(p, "trace_temperature", cfg.pointwise.trace_temperature);
        cfg.pointwise.retain_rationales =
            field<bool>(p, "retain_rationales", cfg.pointwise.retain_rationales);
        if (cfg.pointwise.traces < 1) throw ValidationError("pointwise.traces must be >= 1");
    }

    if (doc.contains("listwise")) {
        if (is_pointwise && warnings != nullptr) {
            warnings->push_back("listwise section ignored: reranker is " +
                                to_string(cfg.reranker));
        }
        const json& l = doc["listwise"];
        require_keys(l, "listwise",
                     {"window_size", "stride", "per_passage_token_budget", "max_new_tokens",
                      "sweeps"});
        cfg.listwise.window_size = field<int>(l, "window_size", cfg.listwise.window_size);
        cfg.listwise.stride = field<int>(l, "stride", cfg.listwise.stride);
        cfg.listwise.per_passage_token_budget =
            field<int>(l, "per_passage_token_budget", cfg.listwise.per_passage_token_budget);
        cfg.listwise.max_new_tokens =
            field<int>(l, "max_new_tokens", cfg.listwise.max_new_tokens);
        cfg.listwise.sweeps = field<int>(l, "sweeps", cfg.listwise.sweeps);
        if (cfg.listwise.window_size < 2) {
            throw ValidationError("listwise.window_size must be >= 2");
        }
        if (cfg.listwise.stride < 1 || cfg.listwise.stride >= cfg.listwise.window_size) {
            throw ValidationError("listwise.stride must lie in [1, window_size-1]");
        }
        if (cfg.listwise.sweeps < 1) throw ValidationError("listwise.sweeps must be >= 1");
    }

    if (doc.contains("reward")) {
        const json& r = doc["reward"];
        require_keys(r, "reward", {"phi", "gamma", "rbo_p", "cutoff"});
        cfg.reward.phi = field<double>(r, "phi", cfg.reward.phi);
        cfg.reward.gamma = field<double>(r, "gamma", cfg.reward.gamma);
        cfg.reward.rbo_p = field<double>(r, "rbo_p", cfg.reward.rbo_p);
        cfg.reward.cutoff = field<int>(r, "cutoff", cfg.reward.cutoff);
        if (cfg.reward.phi < 0.0 || cfg.reward.gamma < 0.0) {
            throw ValidationError("reward.phi and reward.gamma must be >= 0");
        }
        if (cfg.reward.rbo_p <= 0.0 || cfg.reward.rbo_p >= 1.0) {
            throw ValidationError("reward.rbo_p must lie strictly inside (0,1)");
        }
        if (cfg.reward.cutoff < 1) throw ValidationError("reward.cutoff must be >= 1");
    }

    if (doc.contains("calibration")) {
        const json& c = doc["calibration"];
        require_keys(c, "calibration", {"bins", "n_pos", "n_neg", "reference_points"});
        cfg.calibration.bins = field<int>(c, "bins", cfg.calibration.bins);
        cfg.calibration.n_pos = field<std::size_t>(c, "n_pos", cfg.calibration.n_pos);
        cfg.calibration.n_neg = field<std::size_t>(c, "n_neg", cfg.calibration.n_neg);
        if (cfg.calibration.bins < 1) throw ValidationError("calibration.bins must be >= 1");
        if (c.contains("reference_points")) {
            for (const auto& rp : c["reference_points"]) {
                require_keys(rp, "calibration.reference_points", {"label", "ece"});
                cfg.calibration.reference_points.push_back(
                    ReferencePoint{field<std::string>(rp, "label", ""),
                                   field<double>(rp, "ece", 0.0)});
            }
        }
    }

    cfg.relevance_threshold = field<int>(doc, "relevance_threshold", cfg.relevance_threshold);
    cfg.reward.relevance_threshold = cfg.relevance_threshold;
    const auto mode = field<std::string>(doc, "mode", "repair");
    if (mode == "strict") {
        cfg.strict = true;
    } else if (mode == "repair") {
        cfg.strict = false;
    } else {
        throw ValidationError("mode must be 'repair' or 'strict'");
    }
    cfg.pointwise.strict = cfg.strict;
    cfg.listwise.repair_mode = cfg.strict ? RepairMode::strict : RepairMode::repair;
    cfg.pointwise.variant = (cfg.reranker == RerankerKind::point_reason) ? PointVariant::reason
                                                                         : PointVariant::direct;
    cfg.listwise.variant = (cfg.reranker == RerankerKind::list_reason) ? ListVariant::reason
                                                                       : ListVariant::direct;
    cfg.pointwise.answer_forms =
        SurfaceForms{cfg.scorer.surface_positive, cfg.scorer.surface_negative};

    cfg.concurrency = field<int>(doc, "concurrency", cfg.concurrency);
    if (cfg.concurrency < 1) throw ValidationError("concurrency must be >= 1");
    cfg.seed = field<std::uint64_t>(doc, "seed", cfg.seed);
    cfg.tag = field<std::string>(doc, "tag", "");
    if (cfg.tag.empty()) cfg.tag = to_string(cfg.reranker);

    check_path_exists(cfg.paths.corpus, "paths.corpus");
    check_path_exists(cfg.paths.queries, "paths.queries");
    check_path_exists(cfg.paths.qrels, "paths.qrels");
    check_path_exists(cfg.paths.first_stage_run, "paths.first_stage_run");
    check_path_exists(cfg.paths.run, "paths.run");

    // digest over the canonical (override-applied) document; nlohmann keeps
    // object keys sorted, so the dump is deterministic
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    cfg.digest = hex;
    return cfg;
}

RunConfig validate_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides,
                          std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), overrides, warnings);
}

}  // namespace rankbed
