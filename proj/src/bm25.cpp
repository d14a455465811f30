#include "rankbed/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

constexpr char kIndexMagic[4] = {'R', 'B', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

double idf(std::size_t n_docs, std::size_t df) {
    return std::log(1.0 + (static_cast<double>(n_docs) - static_cast<double>(df) + 0.5) /
                              (static_cast<double>(df) + 0.5));
}

double term_weight(double tf, double doc_len, double avgdl, const Bm25Params& p) {
    return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_len / avgdl));
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("index file truncated");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw ParseError("index file truncated");
    return s;
}

}  // namespace

void InvertedIndex::finish() {
    doc_index_.clear();
    doc_index_.reserve(doc_ids_.size());
    for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) {
        doc_index_.emplace(doc_ids_[i], i);
    }
    double total = 0.0;
    for (auto len : lengths_) total += static_cast<double>(len);
    avgdl_ = doc_ids_.empty() ? 0.0 : total / static_cast<double>(doc_ids_.size());
}

InvertedIndex InvertedIndex::build(const DocumentStore& store) {
    if (store.empty()) throw ValidationError("cannot build index over an empty store");
    InvertedIndex index;
    index.doc_ids_.reserve(store.size());
    index.lengths_.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const Document& doc = store.at(i);
        std::string text = doc.title;
        if (!text.empty() && !doc.body.empty()) text.push_back(' ');
        text += doc.body;
        const auto tokens = tokenize(text);

        const auto doc_idx = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.doc_ids_.push_back(doc.doc_id);
        index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));

        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back(Posting{doc_idx, count});
        }
    }
    index.finish();
    return index;
}

bool InvertedIndex::has_doc(const std::string& doc_id) const {
    return doc_index_.find(doc_id) != doc_index_.end();
}

std::uint32_t InvertedIndex::doc_index(const std::string& doc_id) const {
    auto it = doc_index_.find(doc_id);
    if (it == doc_index_.end()) throw ValidationError("doc_id not indexed: " + doc_id);
    return it->second;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                  const std::string& doc_id, const Bm25Params& params) {
    const std::uint32_t doc = index.doc_index(doc_id);
    const double len = static_cast<double>(index.doc_length(doc));
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto* plist = index.postings(term);
        if (plist == nullptr) continue;
        const auto it = std::lower_bound(plist->begin(), plist->end(), doc,
                                         [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (it == plist->end() || it->doc != doc) continue;
        score += idf(index.doc_count(), plist->size()) *
                 term_weight(static_cast<double>(it->tf), len, index.avgdl(), params);
    }
    return score;
}

CandidatePool retrieve_top_k(const InvertedIndex& index, const Query& query, std::size_t k,
                             const Bm25Params& params) {
    CandidatePool pool;
    pool.query_id = query.query_id;
    pool.k = k;
    if (k == 0) return pool;

    const auto terms = tokenize(query.text);
    // Term-at-a-time accumulation; per-document addition order matches
    // bm25_score's term order, so both paths agree bitwise.
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : terms) {
        const auto* plist = index.postings(term);
        if (plist == nullptr) continue;
        const double w = idf(index.doc_count(), plist->size());
        for (const auto& p : *plist) {
            acc[p.doc] += w * term_weight(static_cast<double>(p.tf),
                                          static_cast<double>(index.doc_length(p.doc)),
                                          index.avgdl(), params);
        }
    }

    std::vector<Candidate> scored;
    scored.reserve(acc.size());
    for (const auto& [doc, score] : acc) {
        if (score > 0.0) scored.push_back(Candidate{index.doc_ids()[doc], score});
    }
    std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > k) scored.resize(k);
    pool.candidates = std::move(scored);
    return pool;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write index: " + path.string());
    out.write(kIndexMagic, sizeof(kIndexMagic));
    write_pod(out, kIndexVersion);
    write_pod<std::uint64_t>(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        write_string(out, doc_ids_[i]);
        write_pod<std::uint32_t>(out, lengths_[i]);
    }
    write_pod<std::uint64_t>(out, postings_.size());
    for (const auto& [term, plist] : postings_) {
        write_string(out, term);
        write_pod<std::uint64_t>(out, plist.size());
        for (const auto& p : plist) {
            write_pod(out, p.doc);
            write_pod(out, p.tf);
        }
    }
    if (!out) throw ValidationError("index write failed: " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open index: " + path.string());
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
        throw ParseError("not a rankbed index file: " + path.string());
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kIndexVersion) {
        throw ParseError("unsupported index version " + std::to_string(version));
    }
    InvertedIndex index;
    const auto n_docs = read_pod<std::uint64_t>(in);
    index.doc_ids_.reserve(n_docs);
    index.lengths_.reserve(n_docs);
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        index.doc_ids_.push_back(read_string(in));
        index.lengths_.push_back(read_pod<std::uint32_t>(in));
    }
    const auto n_terms = read_pod<std::uint64_t>(in);
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        auto term = read_string(in);
        const auto n_postings = read_pod<std::uint64_t>(in);
        std::vector<Posting> plist;
        plist.reserve(n_postings);
        for (std::uint64_t p = 0; p < n_postings; ++p) {
            Posting post;
            post.doc = read_pod<std::uint32_t>(in);
            post.tf = read_pod<std::uint32_t>(in);
            if (post.doc >= n_docs) throw ParseError("index posting references unknown doc");
            plist.push_back(post);
        }
        index.postings_.emplace(std::move(term), std::move(plist));
    }
    index.finish();
    return index;
}

}  // namespace rankbed
