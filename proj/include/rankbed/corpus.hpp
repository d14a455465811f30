#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankbed {

struct Document {
    std::string doc_id;
    std::string title;  // may be empty
    std::string body;
};

/// Immutable after load; safe for concurrent reads.
class DocumentStore {
public:
    void add(Document doc);  // throws ValidationError on empty or duplicate id
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    bool contains(const std::string& doc_id) const;
    const Document& get(const std::string& doc_id) const;  // throws if absent
    const Document& at(std::size_t i) const { return docs_[i]; }
    const std::vector<Document>& docs() const { return docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct Query {
    std::string query_id;
    std::string text;
    std::string variant_tag;  // e.g. "original" vs "gpt4_reason"; may be empty
};

class QuerySet {
public:
    void add(Query query);  // throws ValidationError on empty or duplicate id
    std::size_t size() const { return queries_.size(); }
    bool empty() const { return queries_.empty(); }
    bool contains(const std::string& query_id) const;
    const Query& get(const std::string& query_id) const;
    const Query& at(std::size_t i) const { return queries_[i]; }
    const std::vector<Query>& queries() const { return queries_; }

private:
    std::vector<Query> queries_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Graded relevance judgments. At most one grade per (query, doc) pair,
/// grades are non-negative.
class Qrels {
public:
    /// Throws ValidationError on negative grade or on a conflicting
    /// re-assignment of an already judged pair. Re-adding the same grade
    /// is a no-op.
    void set_grade(const std::string& query_id, const std::string& doc_id, int grade);

    bool judged(const std::string& query_id, const std::string& doc_id) const;
    /// Unjudged pairs read as grade 0.
    int grade(const std::string& query_id, const std::string& doc_id) const;

    std::size_t size() const;  // number of judged pairs
    bool has_query(const std::string& query_id) const;
    /// Sorted by doc_id for deterministic downstream sampling.
    std::vector<std::pair<std::string, int>> judgments_for(const std::string& query_id) const;
    /// Doc ids with grade >= threshold, sorted.
    std::vector<std::string> relevant_docs(const std::string& query_id, int threshold = 1) const;
    /// Sorted query ids.
    std::vector<std::string> query_ids() const;

private:
    std::unordered_map<std::string, std::unordered_map<std::string, int>> grades_;
};

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    int rank = 0;  // 1-based
    double score = 0.0;
    std::string tag;

    bool operator==(const RunEntry&) const = default;
};

struct RunFile {
    std::vector<RunEntry> entries;

    bool operator==(const RunFile&) const = default;
};

/// Checks the run invariants: per query, ranks are 1..n in order of
/// appearance, scores non-increasing with rank, no duplicate doc ids.
/// Throws ValidationError on the first violation.
void validate_run(const RunFile& run);

// --- loaders / writers -----------------------------------------------------
//
// Corpus and queries are line-delimited JSON (`_id`, `title`, `text`;
// queries omit `title`). Qrels are whitespace-separated TREC rows
// `query_id 0 doc_id grade`. Runs are TREC `query_id Q0 doc_id rank score
// tag`; lines starting with '#' are provenance comments and are skipped
// on read. All inputs must be valid UTF-8.

DocumentStore load_corpus(const std::filesystem::path& path);
QuerySet load_queries(const std::filesystem::path& path,
                      const std::string& default_variant_tag = "");
Qrels load_qrels(const std::filesystem::path& path);

RunFile read_run(const std::filesystem::path& path);
void write_run(const RunFile& run, const std::filesystem::path& path,
               const std::vector<std::string>& header_comments = {});

}  // namespace rankbed
