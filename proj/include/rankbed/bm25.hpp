#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankbed/corpus.hpp"

namespace rankbed {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

struct Posting {
    std::uint32_t doc = 0;  // index into doc_ids()
    std::uint32_t tf = 0;
};

/// Inverted index over title+body tokens. Immutable once built; retrieval
/// over it is safe from any number of threads.
class InvertedIndex {
public:
    static InvertedIndex build(const DocumentStore& store);  // throws on empty store

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::uint32_t doc_length(std::uint32_t doc) const { return lengths_[doc]; }
    bool has_doc(const std::string& doc_id) const;
    std::uint32_t doc_index(const std::string& doc_id) const;  // throws if absent
    const std::vector<Posting>* postings(const std::string& term) const;
    std::size_t term_count() const { return postings_.size(); }

    /// Versioned binary persistence ("RBIX" magic, little-endian). The
    /// format is documented in the README; loading a foreign or newer
    /// version fails with ParseError.
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::uint32_t> doc_index_;
    std::vector<std::uint32_t> lengths_;
    std::map<std::string, std::vector<Posting>> postings_;  // sorted terms
    double avgdl_ = 0.0;

    void finish();
};

struct Candidate {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const Candidate&) const = default;
};

/// A query with its ordered first-stage candidates. Scores are
/// non-increasing and doc ids unique; holds at most `k` entries.
struct CandidatePool {
    std::string query_id;
    std::vector<Candidate> candidates;
    std::size_t k = 0;
};

/// Okapi BM25 for one document against a query-term multiset: each term
/// occurrence contributes idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avgdl))
/// with idf(t) = ln(1 + (N-df+0.5)/(df+0.5)); absent terms contribute 0.
/// Throws ValidationError for unknown doc ids.
double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const Bm25Params& params = {});

/// Top-k by BM25 score, descending, ties broken by ascending doc_id.
/// Documents scoring 0 (no shared term) never enter the pool, so the pool
/// may be shorter than k.
CandidatePool retrieve_top_k(const InvertedIndex& index, const Query& query, std::size_t k,
                             const Bm25Params& params = {});

}  // namespace rankbed
