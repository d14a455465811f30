#include "rankbed/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "rankbed/calibration.hpp"
#include "rankbed/errors.hpp"
#include "rankbed/http_scorer.hpp"
#include "rankbed/listwise.hpp"
#include "rankbed/metrics.hpp"
#include "rankbed/pointwise.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string provenance_comment(const RunConfig& cfg) {
    return "rankbed config_digest=" + cfg.digest + " seed=" + std::to_string(cfg.seed) +
           " tag=" + cfg.tag;
}

json provenance_record(const RunConfig& cfg) {
    return json{{"provenance",
                 {{"config_digest", cfg.digest}, {"seed", cfg.seed}, {"tag", cfg.tag}}}};
}

std::ofstream open_artifact(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write artifact: " + path.string());
    return out;
}

/// Bounded fan-out with a deterministic error: when workers fail, the
/// failure of the smallest index wins.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int pool_size = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (pool_size == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_index = n;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool_size));
    for (int t = 0; t < pool_size; ++t) {
        threads.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (i < first_error_index) {
                        first_error_index = i;
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<CandidatePool> pools_from_run(const RunFile& run, std::size_t k) {
    std::map<std::string, CandidatePool> by_query;
    for (const auto& e : run.entries) {
        auto& pool = by_query[e.query_id];
        pool.query_id = e.query_id;
        pool.k = k;
        if (pool.candidates.size() < k) {
            pool.candidates.push_back(Candidate{e.doc_id, e.score});
        }
    }
    std::vector<CandidatePool> pools;
    pools.reserve(by_query.size());
    for (auto& [qid, pool] : by_query) pools.push_back(std::move(pool));
    return pools;  // sorted by query_id via std::map
}

fs::path reranked_run_path(const RunConfig& cfg) {
    return fs::path(cfg.output_dir) / (cfg.tag + ".run");
}

fs::path judgments_path(const RunConfig& cfg) {
    return fs::path(cfg.output_dir) / (cfg.tag + ".judgments.jsonl");
}

fs::path windows_path(const RunConfig& cfg) {
    return fs::path(cfg.output_dir) / (cfg.tag + ".windows.jsonl");
}

RunFile load_first_stage(const RunConfig& cfg) {
    fs::path path = cfg.paths.first_stage_run.empty()
                        ? fs::path(cfg.output_dir) / "first_stage.run"
                        : fs::path(cfg.paths.first_stage_run);
    if (!fs::exists(path)) {
        throw ValidationError("no first-stage run found at " + path.string() +
                              "; run 'retrieve' first or set paths.first_stage_run");
    }
    return read_run(path);
}

InvertedIndex obtain_index(const RunConfig& cfg, const DocumentStore& store) {
    if (!cfg.paths.index.empty()) return InvertedIndex::load(cfg.paths.index);
    return InvertedIndex::build(store);
}

}  // namespace

std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg, const Qrels& qrels) {
    if (cfg.scorer.kind == ScorerKind::oracle) {
        return std::make_unique<OracleScorer>(qrels, cfg.scorer.noise, cfg.scorer.seed,
                                              cfg.relevance_threshold);
    }
    RemoteScorerConfig remote;
    const char* endpoint_env = std::getenv("RANKBED_ENDPOINT");
    remote.endpoint = endpoint_env != nullptr ? endpoint_env : cfg.scorer.endpoint;
    const char* model_env = std::getenv("RANKBED_MODEL");
    remote.model = model_env != nullptr ? model_env : cfg.scorer.model;
    if (!cfg.scorer.api_key_env.empty()) {
        const char* key = std::getenv(cfg.scorer.api_key_env.c_str());
        if (key != nullptr) remote.api_key = key;
    }
    remote.max_retries = cfg.scorer.max_retries;
    remote.backoff_initial_ms = cfg.scorer.backoff_initial_ms;
    remote.timeout_s = cfg.scorer.timeout_s;
    remote.concurrency_cap = cfg.concurrency;
    remote.top_logprobs = cfg.scorer.top_logprobs;
    return std::make_unique<RemoteScorer>(std::move(remote));
}

int run_index(const RunConfig& cfg) {
    if (cfg.paths.corpus.empty()) throw ValidationError("index requires paths.corpus");
    const DocumentStore store = load_corpus(cfg.paths.corpus);
    const InvertedIndex index = InvertedIndex::build(store);
    const fs::path out = fs::path(cfg.output_dir) / "index.bin";
    fs::create_directories(out.parent_path());
    index.save(out);
    std::cout << "indexed " << index.doc_count() << " docs, " << index.term_count()
              << " terms, avgdl " << format_double(index.avgdl()) << " -> " << out.string()
              << "\n";
    return kExitOk;
}

int run_retrieve(const RunConfig& cfg) {
    if (cfg.paths.corpus.empty() || cfg.paths.queries.empty()) {
        throw ValidationError("retrieve requires paths.corpus and paths.queries");
    }
    const DocumentStore store = load_corpus(cfg.paths.corpus);
    const QuerySet queries = load_queries(cfg.paths.queries);
    const InvertedIndex index = obtain_index(cfg, store);

    std::vector<const Query*> ordered;
    ordered.reserve(queries.size());
    for (const auto& q : queries.queries()) ordered.push_back(&q);
    std::sort(ordered.begin(), ordered.end(),
              [](const Query* a, const Query* b) { return a->query_id < b->query_id; });

    std::vector<CandidatePool> pools(ordered.size());
    parallel_for(ordered.size(), cfg.concurrency, [&](std::size_t i) {
        pools[i] = retrieve_top_k(index, *ordered[i], cfg.retrieval.k, cfg.retrieval.bm25);
    });

    RunFile run;
    for (const auto& pool : pools) {
        for (std::size_t r = 0; r < pool.candidates.size(); ++r) {
            run.entries.push_back(RunEntry{pool.query_id, pool.candidates[r].doc_id,
                                           static_cast<int>(r) + 1, pool.candidates[r].score,
                                           "bm25"});
        }
    }
    const fs::path out = fs::path(cfg.output_dir) / "first_stage.run";
    fs::create_directories(out.parent_path());
    write_run(run, out, {provenance_comment(cfg)});
    std::cout << "retrieved pools for " << pools.size() << " queries -> " << out.string()
              << "\n";
    return kExitOk;
}

int run_rerank(const RunConfig& cfg) {
    if (cfg.paths.corpus.empty() || cfg.paths.queries.empty() || cfg.paths.qrels.empty()) {
        throw ValidationError("rerank requires paths.corpus, paths.queries and paths.qrels");
    }
    const DocumentStore store = load_corpus(cfg.paths.corpus);
    const QuerySet queries = load_queries(cfg.paths.queries);
    const Qrels qrels = load_qrels(cfg.paths.qrels);
    const RunFile first_stage = load_first_stage(cfg);
    std::vector<CandidatePool> pools = pools_from_run(first_stage, cfg.retrieval.k);
    for (const auto& pool : pools) {
        if (!queries.contains(pool.query_id)) {
            throw ValidationError("first-stage run names query '" + pool.query_id +
                                  "' absent from the query set");
        }
    }

    auto scorer = make_scorer(cfg, qrels);
    const bool pointwise = cfg.reranker == RerankerKind::point_direct ||
                           cfg.reranker == RerankerKind::point_reason;

    std::vector<PointwiseResult> point_results(pointwise ? pools.size() : 0);
    std::vector<ListwiseResult> list_results(pointwise ? 0 : pools.size());
    parallel_for(pools.size(), cfg.concurrency, [&](std::size_t i) {
        const Query& query = queries.get(pools[i].query_id);
        if (pointwise) {
            point_results[i] =
                rank_pointwise(query, store, pools[i], *scorer, cfg.pointwise, cfg.tag);
        } else {
            list_results[i] =
                sliding_window_rerank(query, store, pools[i], *scorer, cfg.listwise, cfg.tag);
        }
    });

    bool degraded = false;
    RunFile run;
    if (pointwise) {
        auto sidecar = open_artifact(judgments_path(cfg));
        sidecar << provenance_record(cfg).dump() << "\n";
        for (const auto& result : point_results) {
            degraded = degraded || result.degraded;
            run.entries.insert(run.entries.end(), result.entries.begin(), result.entries.end());
            for (const auto& record : result.sidecar) {
                json j{{"query_id", record.query_id}, {"doc_id", record.doc_id},
                       {"score", record.score},       {"margin", record.margin},
                       {"decision", record.decision}, {"n_traces", record.n_traces},
                       {"degraded", record.degraded}};
                if (!record.rationales.empty()) j["rationales"] = record.rationales;
                sidecar << j.dump() << "\n";
            }
        }
    } else {
        auto sidecar = open_artifact(windows_path(cfg));
        sidecar << provenance_record(cfg).dump() << "\n";
        for (const auto& result : list_results) {
            degraded = degraded || result.degraded;
            run.entries.insert(run.entries.end(), result.entries.begin(), result.entries.end());
            for (const auto& trace : result.traces) {
                json j{{"query_id", trace.query_id},
                       {"window_index", trace.window_index},
                       {"window_docs", trace.window_docs},
                       {"raw_text", trace.raw_text},
                       {"output_format_valid", trace.output_format_valid},
                       {"answer_format_valid", trace.answer_format_valid},
                       {"repaired_order", trace.repaired_order},
                       {"degraded", trace.degraded}};
                sidecar << j.dump() << "\n";
            }
        }
    }

    std::vector<std::string> comments{provenance_comment(cfg)};
    if (degraded) comments.push_back("degraded: fail-soft events occurred");
    write_run(run, reranked_run_path(cfg), comments);
    std::cout << "reranked " << pools.size() << " pools -> " << reranked_run_path(cfg).string()
              << (degraded ? " (degraded)" : "") << "\n";
    return degraded ? kExitDegraded : kExitOk;
}

EvalSummary evaluate_run(const RunFile& run, const Qrels& qrels, int relevance_threshold,
                         int cutoff) {
    std::map<std::string, std::vector<std::string>> ranked_by_query;
    for (const auto& e : run.entries) ranked_by_query[e.query_id].push_back(e.doc_id);

    EvalSummary summary;
    double ndcg_sum = 0.0, recall_sum = 0.0;
    for (const auto& [query_id, ranked] : ranked_by_query) {
        EvalSummary::PerQuery pq;
        pq.query_id = query_id;
        std::unordered_map<std::string, int> grades;
        for (const auto& [doc, g] : qrels.judgments_for(query_id)) grades.emplace(doc, g);
        const auto relevant = qrels.relevant_docs(query_id, relevance_threshold);
        if (relevant.empty()) {
            pq.excluded = true;
            ++summary.excluded;
        } else {
            const std::unordered_set<std::string> gold(relevant.begin(), relevant.end());
            pq.ndcg_at_10 = ndcg_at_k(ranked, grades, cutoff);
            pq.recall_at_10 = recall_at_k(ranked, gold, cutoff);
            ndcg_sum += pq.ndcg_at_10;
            recall_sum += pq.recall_at_10;
            ++summary.included;
        }
        summary.per_query.push_back(std::move(pq));
    }
    if (summary.included > 0) {
        summary.mean_ndcg_at_10 = ndcg_sum / static_cast<double>(summary.included);
        summary.mean_recall_at_10 = recall_sum / static_cast<double>(summary.included);
    }
    return summary;
}

int run_eval(const RunConfig& cfg) {
    if (cfg.paths.qrels.empty()) throw ValidationError("eval requires paths.qrels");
    const fs::path run_path =
        cfg.paths.run.empty() ? reranked_run_path(cfg) : fs::path(cfg.paths.run);
    const RunFile run = read_run(run_path);
    const Qrels qrels = load_qrels(cfg.paths.qrels);
    const EvalSummary summary = evaluate_run(run, qrels, cfg.relevance_threshold,
                                             cfg.reward.cutoff);

    auto out = open_artifact(fs::path(cfg.output_dir) / "eval.txt");
    out << "# " << provenance_comment(cfg) << "\n";
    out << "# run " << run_path.filename().string() << "\n";
    for (const auto& pq : summary.per_query) {
        if (pq.excluded) {
            out << "query " << pq.query_id << " excluded (no judged-relevant docs)\n";
        } else {
            out << "query " << pq.query_id << " ndcg@" << cfg.reward.cutoff << " "
                << format_double(pq.ndcg_at_10) << " recall@" << cfg.reward.cutoff << " "
                << format_double(pq.recall_at_10) << "\n";
        }
    }
    out << "mean ndcg@" << cfg.reward.cutoff << " " << format_double(summary.mean_ndcg_at_10)
        << " recall@" << cfg.reward.cutoff << " " << format_double(summary.mean_recall_at_10)
        << " queries " << summary.included << " excluded " << summary.excluded << "\n";
    std::cout << "mean ndcg@" << cfg.reward.cutoff << " "
              << format_double(summary.mean_ndcg_at_10) << " over " << summary.included
              << " queries (" << summary.excluded << " excluded)\n";
    return kExitOk;
}

int run_reward(const RunConfig& cfg) {
    if (cfg.paths.qrels.empty()) throw ValidationError("reward requires paths.qrels");
    const Qrels qrels = load_qrels(cfg.paths.qrels);
    const fs::path traces_path = windows_path(cfg);
    std::ifstream in(traces_path, std::ios::binary);
    if (!in) {
        throw ValidationError("no window trace sidecar at " + traces_path.string() +
                              "; run a listwise 'rerank' first");
    }

    auto out = open_artifact(fs::path(cfg.output_dir) / "rewards.jsonl");
    out << provenance_record(cfg).dump() << "\n";

    struct GroupKey {
        std::string query_id;
        int window_index;
        bool operator<(const GroupKey& o) const {
            return std::tie(query_id, window_index) < std::tie(o.query_id, o.window_index);
        }
    };
    std::map<GroupKey, std::vector<double>> groups;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("trace sidecar line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.contains("provenance")) continue;
        const std::string query_id = j.at("query_id").get<std::string>();
        const auto window_docs = j.at("window_docs").get<std::vector<std::string>>();
        const std::string raw_text = j.at("raw_text").get<std::string>();
        const int window_index = j.value("window_index", 0);

        std::vector<int> grades;
        grades.reserve(window_docs.size());
        for (const auto& doc : window_docs) grades.push_back(qrels.grade(query_id, doc));

        const RewardBreakdown breakdown =
            multi_view_reward(raw_text, window_docs, grades, cfg.reward);
        groups[GroupKey{query_id, window_index}].push_back(breakdown.final_r);

        out << json{{"query_id", query_id},
                    {"window_index", window_index},
                    {"ndcg_at_10", breakdown.ndcg_at_10},
                    {"recall_at_10", breakdown.recall_at_10},
                    {"rbo", breakdown.rbo},
                    {"r_m", breakdown.r_m},
                    {"gate", to_string(breakdown.gate)},
                    {"final_r", breakdown.final_r}}
                   .dump()
            << "\n";
    }

    // group-normalized advantages for externally sampled groups
    auto adv_out = open_artifact(fs::path(cfg.output_dir) / "advantages.jsonl");
    adv_out << provenance_record(cfg).dump() << "\n";
    for (const auto& [key, rewards] : groups) {
        if (rewards.size() < 2) continue;
        const auto advantages = group_advantages(rewards, 1e-6);
        adv_out << json{{"query_id", key.query_id},
                        {"window_index", key.window_index},
                        {"rewards", rewards},
                        {"advantages", advantages}}
                       .dump()
                << "\n";
    }
    std::cout << "rewards written for " << groups.size() << " windows\n";
    return kExitOk;
}

int run_calibrate(const RunConfig& cfg) {
    if (cfg.paths.qrels.empty()) throw ValidationError("calibrate requires paths.qrels");
    const Qrels qrels = load_qrels(cfg.paths.qrels);
    const fs::path sidecar_path = judgments_path(cfg);
    std::ifstream in(sidecar_path, std::ios::binary);
    if (!in) {
        throw ValidationError("no judgment sidecar at " + sidecar_path.string() +
                              "; run a pointwise 'rerank' first");
    }

    std::vector<std::pair<double, bool>> records;
    std::size_t skipped_degraded = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        if (j.contains("provenance")) continue;
        if (j.value("degraded", false)) {
            ++skipped_degraded;
            continue;
        }
        const double confidence = j.at("score").get<double>();
        const bool relevant = qrels.grade(j.at("query_id").get<std::string>(),
                                          j.at("doc_id").get<std::string>()) >=
                              cfg.relevance_threshold;
        records.emplace_back(confidence, relevant);
    }
    if (records.empty()) throw ValidationError("no usable judgment records to calibrate");

    const auto bins = bin_predictions(records, cfg.calibration.bins);
    const double ece_value = ece(bins);
    const auto rows = reliability_table(bins);

    auto table = open_artifact(fs::path(cfg.output_dir) / "reliability.jsonl");
    table << provenance_record(cfg).dump() << "\n";
    for (const auto& row : rows) {
        table << json{{"midpoint", row.midpoint},
                      {"confidence", row.confidence},
                      {"accuracy", row.accuracy},
                      {"count", row.count}}
                     .dump()
              << "\n";
    }
    write_reliability_svg(fs::path(cfg.output_dir) / "reliability.svg", rows,
                          provenance_comment(cfg));

    auto out = open_artifact(fs::path(cfg.output_dir) / "calibration.txt");
    out << "# " << provenance_comment(cfg) << "\n";
    out << "records " << records.size() << " bins " << cfg.calibration.bins
        << " skipped_degraded " << skipped_degraded << "\n";
    out << "ece " << format_double(ece_value) << "\n";
    for (const auto& rp : cfg.calibration.reference_points) {
        out << "reference " << rp.label << " ece " << format_double(rp.ece) << "\n";
    }
    std::cout << "ece " << format_double(ece_value) << " over " << records.size()
              << " judgments\n";
    return kExitOk;
}

int run_classify_eval(const RunConfig& cfg) {
    if (cfg.paths.corpus.empty() || cfg.paths.queries.empty() || cfg.paths.qrels.empty()) {
        throw ValidationError(
            "classify-eval requires paths.corpus, paths.queries and paths.qrels");
    }
    const DocumentStore store = load_corpus(cfg.paths.corpus);
    const QuerySet queries = load_queries(cfg.paths.queries);
    const Qrels qrels = load_qrels(cfg.paths.qrels);
    const RunFile first_stage = load_first_stage(cfg);
    std::vector<CandidatePool> pools = pools_from_run(first_stage, cfg.retrieval.k);
    auto scorer = make_scorer(cfg, qrels);

    struct QueryOutcome {
        std::string query_id;
        ClassPool pool;
        std::vector<std::pair<bool, bool>> judgments;  // (decision, label)
        bool skipped = false;
    };
    std::vector<QueryOutcome> outcomes(pools.size());

    parallel_for(pools.size(), cfg.concurrency, [&](std::size_t i) {
        QueryOutcome& outcome = outcomes[i];
        outcome.query_id = pools[i].query_id;
        outcome.pool =
            build_matched_pool(qrels, pools[i].query_id, cfg.calibration.n_pos,
                               cfg.calibration.n_neg, cfg.seed, pools[i],
                               cfg.relevance_threshold);
        if (outcome.pool.positives.empty() || outcome.pool.negatives.empty()) {
            outcome.skipped = true;  // rates undefined without both classes
            return;
        }
        const Query& query = queries.get(pools[i].query_id);
        auto judge = [&](const std::string& doc_id, bool label) {
            PromptRequest request =
                build_point_prompt(query, store.get(doc_id), cfg.pointwise.variant,
                                   cfg.pointwise.prompt_token_budget, cfg.pointwise.answer_forms);
            const RelevanceJudgment judgment = relevance_score(scorer->score_answer(request));
            outcome.judgments.emplace_back(judgment.decision, label);
        };
        for (const auto& doc : outcome.pool.positives) judge(doc, true);
        for (const auto& neg : outcome.pool.negatives) judge(neg.doc_id, false);
    });

    std::vector<std::pair<bool, bool>> all;
    auto rows = open_artifact(fs::path(cfg.output_dir) / "classify_eval.jsonl");
    rows << provenance_record(cfg).dump() << "\n";
    std::size_t skipped = 0;
    for (const auto& outcome : outcomes) {
        if (outcome.skipped) {
            ++skipped;
            rows << json{{"query_id", outcome.query_id}, {"skipped", true}}.dump() << "\n";
            continue;
        }
        all.insert(all.end(), outcome.judgments.begin(), outcome.judgments.end());
        const ConfusionReport report = confusion_rates(outcome.judgments);
        rows << json{{"query_id", outcome.query_id},
                     {"n_pos", outcome.pool.positives.size()},
                     {"n_neg", outcome.pool.negatives.size()},
                     {"short_positives", outcome.pool.short_positives},
                     {"short_negatives", outcome.pool.short_negatives},
                     {"tp", report.tp},
                     {"fn", report.fn},
                     {"tn", report.tn},
                     {"fp", report.fp},
                     {"tpr", report.tpr},
                     {"tnr", report.tnr},
                     {"macro", report.macro}}
                    .dump()
             << "\n";
    }
    if (all.empty()) throw ValidationError("classify-eval: no query had both classes available");
    const ConfusionReport overall = confusion_rates(all);

    auto out = open_artifact(fs::path(cfg.output_dir) / "classify_eval.txt");
    out << "# " << provenance_comment(cfg) << "\n";
    out << "queries " << (outcomes.size() - skipped) << " skipped " << skipped << "\n";
    out << "tp " << overall.tp << " fn " << overall.fn << " tn " << overall.tn << " fp "
        << overall.fp << "\n";
    out << "tpr " << format_double(overall.tpr) << " tnr " << format_double(overall.tnr)
        << " macro " << format_double(overall.macro) << "\n";
    std::cout << "tpr " << format_double(overall.tpr) << " tnr " << format_double(overall.tnr)
              << " macro " << format_double(overall.macro) << "\n";
    return kExitOk;
}

int run_report(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    auto out = open_artifact(dir / "report.txt");
    out << "# " << provenance_comment(cfg) << "\n";

    auto append_file = [&](const fs::path& path, const std::string& title) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            out << "[" << title << "] absent\n";
            return;
        }
        out << "[" << title << "]\n";
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] == '#') continue;
            // summary-style lines only: skip the per-item bulk
            if (line.rfind("query ", 0) == 0) continue;
            out << "  " << line << "\n";
        }
    };
    append_file(dir / "eval.txt", "eval");
    append_file(dir / "calibration.txt", "calibration");
    append_file(dir / "classify_eval.txt", "classify-eval");

    // reward aggregation, when present
    std::ifstream rewards(dir / "rewards.jsonl", std::ios::binary);
    if (rewards) {
        std::size_t n = 0, both = 0, output_only = 0, invalid = 0;
        double sum_r = 0.0;
        std::string line;
        while (std::getline(rewards, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            if (j.contains("provenance")) continue;
            ++n;
            sum_r += j.value("final_r", 0.0);
            const std::string gate = j.value("gate", "");
            if (gate == "both_valid") ++both;
            else if (gate == "output_only") ++output_only;
            else ++invalid;
        }
        out << "[reward]\n";
        if (n > 0) {
            out << "  windows " << n << " mean_final_r "
                << format_double(sum_r / static_cast<double>(n)) << " gate both_valid " << both
                << " output_only " << output_only << " invalid " << invalid << "\n";
        }
    } else {
        out << "[reward] absent\n";
    }
    std::cout << "report -> " << (dir / "report.txt").string() << "\n";
    return kExitOk;
}

int orchestrate(const RunConfig& cfg, const std::string& command) {
    try {
        if (command == "index") return run_index(cfg);
        if (command == "retrieve") return run_retrieve(cfg);
        if (command == "rerank") return run_rerank(cfg);
        if (command == "eval") return run_eval(cfg);
        if (command == "reward") return run_reward(cfg);
        if (command == "calibrate") return run_calibrate(cfg);
        if (command == "classify-eval") return run_classify_eval(cfg);
        if (command == "report") return run_report(cfg);
        throw ValidationError("unknown command: " + command);
    } catch (const ValidationError& e) {
        std::cerr << json{{"error", e.what()}, {"stage", command}, {"kind", "validation"}}.dump()
                  << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"stage", command}, {"kind", "runtime"}}.dump()
                  << "\n";
        return kExitRuntime;
    }
}

void make_synthetic_dataset(const fs::path& dir, std::uint64_t seed, std::size_t n_queries,
                            std::size_t n_docs) {
    static const std::vector<std::string> kVocab = {
        "ranking",  "retrieval", "corpus",   "signal",  "lexical",  "vector",
        "passage",  "relevance", "index",    "query",   "window",   "metric",
        "overlap",  "gain",      "recall",   "margin",  "token",    "judge",
        "pool",     "stride",    "order",    "search",  "document", "evidence",
        "score",    "context",   "answer",   "prompt",  "think",    "format"};

    struct SplitMix {
        std::uint64_t state;
        std::uint64_t next() {
            std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    };
    SplitMix rng{seed ^ 0x5eedULL};

    auto pad = [](std::size_t v, int width) {
        std::string s = std::to_string(v);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        return s;
    };
    auto filler = [&](std::size_t count) {
        std::string text;
        for (std::size_t w = 0; w < count; ++w) {
            if (!text.empty()) text.push_back(' ');
            text += kVocab[rng.next() % kVocab.size()];
        }
        return text;
    };

    // plan relevant docs: 1..3 per query, all distinct
    std::vector<std::size_t> relevant_count(n_queries);
    std::size_t total_relevant = 0;
    for (std::size_t i = 0; i < n_queries; ++i) {
        relevant_count[i] = 1 + rng.next() % 3;
        total_relevant += relevant_count[i];
    }
    if (total_relevant + n_queries > n_docs) {
        throw ValidationError("synthetic dataset needs more docs than relevant assignments");
    }

    fs::create_directories(dir);
    std::ofstream corpus(dir / "corpus.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream queries(dir / "queries.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream qrels(dir / "qrels.txt", std::ios::binary | std::ios::trunc);
    if (!corpus || !queries || !qrels) {
        throw ValidationError("cannot write synthetic dataset into " + dir.string());
    }

    std::size_t doc_counter = 0;
    auto emit_doc = [&](const std::string& title, const std::string& body) {
        const std::string doc_id = "d" + pad(doc_counter++, 4);
        corpus << json{{"_id", doc_id}, {"title", title}, {"text", body}}.dump() << "\n";
        return doc_id;
    };

    std::vector<std::vector<std::string>> relevant_ids(n_queries);
    for (std::size_t i = 0; i < n_queries; ++i) {
        const std::string topic = "topic" + pad(i, 2);
        for (std::size_t r = 0; r < relevant_count[i]; ++r) {
            const std::string title = (rng.next() % 2 == 0) ? "" : ("about " + topic);
            relevant_ids[i].push_back(emit_doc(title, topic + " " + filler(8 + rng.next() % 6)));
        }
    }
    std::vector<std::string> distractors;
    while (doc_counter < n_docs) {
        distractors.push_back(emit_doc("", filler(10 + rng.next() % 8)));
    }

    for (std::size_t i = 0; i < n_queries; ++i) {
        const std::string query_id = "q" + pad(i, 3);
        const std::string topic = "topic" + pad(i, 2);
        const std::string text = topic + " " + kVocab[rng.next() % kVocab.size()] + " " +
                                 kVocab[rng.next() % kVocab.size()];
        queries << json{{"_id", query_id}, {"text", text}}.dump() << "\n";
        for (const auto& doc_id : relevant_ids[i]) {
            qrels << query_id << " 0 " << doc_id << " 1\n";
        }
        // a couple of explicitly judged non-relevant docs per query
        for (int neg = 0; neg < 2 && !distractors.empty(); ++neg) {
            qrels << query_id << " 0 " << distractors[rng.next() % distractors.size()]
                  << " 0\n";
        }
    }
}

}  // namespace rankbed
