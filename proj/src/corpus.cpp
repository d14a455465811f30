#include "rankbed/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rankbed/errors.hpp"
#include "rankbed/text.hpp"

namespace rankbed {

namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    return in;
}

// _id fields in benchmark dumps are sometimes bare integers.
std::string id_field(const json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key)) {
        throw ParseError("line " + std::to_string(line_no) + ": missing key '" + key + "'");
    }
    const json& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError("line " + std::to_string(line_no) + ": key '" + key +
                     "' must be a string");
}

std::string text_field(const json& j, const char* key, std::size_t line_no, bool required) {
    if (!j.contains(key)) {
        if (required) {
            throw ParseError("line " + std::to_string(line_no) + ": missing key '" + key + "'");
        }
        return "";
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
        throw ParseError("line " + std::to_string(line_no) + ": key '" + key +
                         "' must be a string");
    }
    return v.get<std::string>();
}

void check_utf8(const std::string& line, std::size_t line_no) {
    if (!utf8_valid(line)) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid UTF-8");
    }
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(std::move(f));
    return fields;
}

}  // namespace

void DocumentStore::add(Document doc) {
    if (doc.doc_id.empty()) throw ValidationError("document with empty doc_id");
    auto [it, inserted] = by_id_.emplace(doc.doc_id, docs_.size());
    if (!inserted) throw ValidationError("duplicate doc_id: " + doc.doc_id);
    docs_.push_back(std::move(doc));
}

bool DocumentStore::contains(const std::string& doc_id) const {
    return by_id_.find(doc_id) != by_id_.end();
}

const Document& DocumentStore::get(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    if (it == by_id_.end()) throw ValidationError("unknown doc_id: " + doc_id);
    return docs_[it->second];
}

void QuerySet::add(Query query) {
    if (query.query_id.empty()) throw ValidationError("query with empty query_id");
    auto [it, inserted] = by_id_.emplace(query.query_id, queries_.size());
    if (!inserted) throw ValidationError("duplicate query_id: " + query.query_id);
    queries_.push_back(std::move(query));
}

bool QuerySet::contains(const std::string& query_id) const {
    return by_id_.find(query_id) != by_id_.end();
}

const Query& QuerySet::get(const std::string& query_id) const {
    auto it = by_id_.find(query_id);
    if (it == by_id_.end()) throw ValidationError("unknown query_id: " + query_id);
    return queries_[it->second];
}

void Qrels::set_grade(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) {
        throw ValidationError("negative relevance grade for (" + query_id + ", " + doc_id + ")");
    }
    auto& per_query = grades_[query_id];
    auto it = per_query.find(doc_id);
    if (it != per_query.end()) {
        if (it->second != grade) {
            throw ValidationError("conflicting grades for pair (" + query_id + ", " + doc_id +
                                  ")");
        }
        return;
    }
    per_query.emplace(doc_id, grade);
}

bool Qrels::judged(const std::string& query_id, const std::string& doc_id) const {
    auto it = grades_.find(query_id);
    if (it == grades_.end()) return false;
    return it->second.find(doc_id) != it->second.end();
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto it = grades_.find(query_id);
    if (it == grades_.end()) return 0;
    auto jt = it->second.find(doc_id);
    return jt == it->second.end() ? 0 : jt->second;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [q, m] : grades_) n += m.size();
    return n;
}

bool Qrels::has_query(const std::string& query_id) const {
    return grades_.find(query_id) != grades_.end();
}

std::vector<std::pair<std::string, int>> Qrels::judgments_for(const std::string& query_id) const {
    std::vector<std::pair<std::string, int>> out;
    auto it = grades_.find(query_id);
    if (it == grades_.end()) return out;
    out.assign(it->second.begin(), it->second.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Qrels::relevant_docs(const std::string& query_id, int threshold) const {
    std::vector<std::string> out;
    auto it = grades_.find(query_id);
    if (it == grades_.end()) return out;
    for (const auto& [doc, g] : it->second) {
        if (g >= threshold) out.push_back(doc);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Qrels::query_ids() const {
    std::vector<std::string> out;
    out.reserve(grades_.size());
    for (const auto& [q, m] : grades_) out.push_back(q);
    std::sort(out.begin(), out.end());
    return out;
}

void validate_run(const RunFile& run) {
    struct QueryState {
        int last_rank = 0;
        double last_score = 0.0;
        std::unordered_map<std::string, bool> seen_docs;
    };
    std::unordered_map<std::string, QueryState> states;
    for (const auto& e : run.entries) {
        auto& st = states[e.query_id];
        if (e.rank != st.last_rank + 1) {
            throw ValidationError("run invariant: query " + e.query_id + " has rank " +
                                  std::to_string(e.rank) + " after rank " +
                                  std::to_string(st.last_rank));
        }
        if (st.last_rank > 0 && e.score > st.last_score) {
            throw ValidationError("run invariant: query " + e.query_id +
                                  " scores increase at rank " + std::to_string(e.rank));
        }
        if (!st.seen_docs.emplace(e.doc_id, true).second) {
            throw ValidationError("run invariant: query " + e.query_id + " lists doc " +
                                  e.doc_id + " twice");
        }
        st.last_rank = e.rank;
        st.last_score = e.score;
    }
}

DocumentStore load_corpus(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    DocumentStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        check_utf8(line, line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed record: " +
                             e.what());
        }
        if (!j.is_object()) {
            throw ParseError("line " + std::to_string(line_no) + ": record is not an object");
        }
        Document doc;
        doc.doc_id = id_field(j, "_id", line_no);
        doc.title = text_field(j, "title", line_no, /*required=*/false);
        doc.body = text_field(j, "text", line_no, /*required=*/true);
        try {
            store.add(std::move(doc));
        } catch (const ValidationError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

QuerySet load_queries(const std::filesystem::path& path, const std::string& default_variant_tag) {
    auto in = open_or_throw(path);
    QuerySet queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        check_utf8(line, line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed record: " +
                             e.what());
        }
        Query q;
        q.query_id = id_field(j, "_id", line_no);
        q.text = text_field(j, "text", line_no, /*required=*/true);
        q.variant_tag = text_field(j, "variant_tag", line_no, /*required=*/false);
        if (q.variant_tag.empty()) q.variant_tag = default_variant_tag;
        try {
            queries.add(std::move(q));
        } catch (const ValidationError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return queries;
}

Qrels load_qrels(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    Qrels qrels;
    std::string line;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        check_utf8(line, row_no);
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 4) {
            throw ParseError("row " + std::to_string(row_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        }
        int grade = 0;
        try {
            std::size_t pos = 0;
            grade = std::stoi(fields[3], &pos);
            if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError("row " + std::to_string(row_no) + ": grade '" + fields[3] +
                             "' is not an integer");
        }
        try {
            qrels.set_grade(fields[0], fields[2], grade);
        } catch (const ValidationError& e) {
            throw ParseError("row " + std::to_string(row_no) + ": " + e.what());
        }
    }
    return qrels;
}

RunFile read_run(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    RunFile run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // provenance comments
        check_utf8(line, line_no);
        const auto fields = split_ws(line);
        if (fields.size() != 6) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 6 fields, got " +
                             std::to_string(fields.size()));
        }
        RunEntry e;
        e.query_id = fields[0];
        e.doc_id = fields[2];
        try {
            std::size_t pos = 0;
            e.rank = std::stoi(fields[3], &pos);
            if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
            e.score = std::stod(fields[4], &pos);
            if (pos != fields[4].size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad rank or score");
        }
        e.tag = fields[5];
        run.entries.push_back(std::move(e));
    }
    validate_run(run);
    return run;
}

void write_run(const RunFile& run, const std::filesystem::path& path,
               const std::vector<std::string>& header_comments) {
    validate_run(run);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    for (const auto& comment : header_comments) {
        out << "# " << comment << "\n";
    }
    for (const auto& e : run.entries) {
        out << e.query_id << " Q0 " << e.doc_id << " " << e.rank << " " << format_double(e.score)
            << " " << e.tag << "\n";
    }
    if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace rankbed
