#pragma once

// Documents, sentences and relevance groups, plus the line-oriented corpus
// file format:
//
//   groups=<G>
//   #doc <id> <group>
//   <raw sentence>
//   <raw sentence>
//   <blank line>
//
// Lines starting with "%" are comments and are ignored everywhere.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace grevo {

struct Sentence
{
    std::vector<std::string> terms;

    std::size_t size() const { return terms.size(); }
    bool empty() const { return terms.empty(); }
    const std::string& operator[](std::size_t i) const { return terms[i]; }

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Document
{
    std::string id;
    std::size_t group = 0;
    std::vector<Sentence> sentences;

    friend bool operator==(const Document&, const Document&) = default;
};

class Corpus
{
public:
    Corpus() = default;

    /// Throws ConfigError if any invariant is violated.
    Corpus(std::vector<Document> documents, std::size_t groups)
        : documents_(std::move(documents)), groups_(groups)
    {
        if (groups_ < 2) throw ConfigError("corpus needs at least 2 groups");
        std::vector<std::size_t> sizes(groups_, 0);
        for (const auto& doc : documents_) {
            if (doc.group >= groups_)
                throw ConfigError("document " + doc.id + ": group index out of range");
            if (doc.sentences.empty())
                throw ConfigError("document " + doc.id + " has no sentences");
            for (const auto& s : doc.sentences) {
                if (s.empty()) throw ConfigError("document " + doc.id + " has an empty sentence");
                for (const auto& t : s.terms) vocabulary_.push_back(t);
            }
            ++sizes[doc.group];
        }
        for (std::size_t g = 0; g < groups_; ++g)
            if (sizes[g] == 0) throw ConfigError("group " + std::to_string(g) + " is empty");
        std::sort(vocabulary_.begin(), vocabulary_.end());
        vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
    }

    const std::vector<Document>& documents() const { return documents_; }
    std::size_t groups() const { return groups_; }
    std::size_t size() const { return documents_.size(); }

    /// Sorted distinct terms.
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

    std::size_t sentence_count() const
    {
        std::size_t n = 0;
        for (const auto& d : documents_) n += d.sentences.size();
        return n;
    }

    std::size_t group_size(std::size_t g) const
    {
        return static_cast<std::size_t>(std::count_if(documents_.begin(), documents_.end(),
                                                      [g](const Document& d) { return d.group == g; }));
    }

    /// Copy keeping only the first sentence of each document.
    Corpus first_sentences() const
    {
        auto docs = documents_;
        for (auto& d : docs) d.sentences.resize(1);
        return Corpus(std::move(docs), groups_);
    }

    friend bool operator==(const Corpus& a, const Corpus& b)
    {
        return a.groups_ == b.groups_ && a.documents_ == b.documents_;
    }

private:
    std::vector<Document> documents_;
    std::size_t groups_ = 0;
    std::vector<std::string> vocabulary_;
};

inline bool is_strippable_punct(char c)
{
    return std::string_view(".,;:!?\"()[]").find(c) != std::string_view::npos;
}

/// Lowercase, split on whitespace, strip edge punctuation, drop empties.
inline Sentence tokenize(std::string_view raw)
{
    Sentence out;
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
        std::size_t j = i;
        while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
        std::size_t b = i, e = j;
        while (b < e && is_strippable_punct(raw[b])) ++b;
        while (e > b && is_strippable_punct(raw[e - 1])) --e;
        if (b < e) {
            std::string tok(raw.substr(b, e - b));
            for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.terms.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

namespace detail {

inline bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

inline std::vector<std::string> split_ws(std::string_view line)
{
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

inline bool parse_count(const std::string& s, std::size_t& out)
{
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return false;
    try {
        out = std::stoul(s);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

} // namespace detail

/// Parse a corpus from a stream. `source` names the input in error messages.
inline Corpus read_corpus(std::istream& in, const std::string& source, bool first_sentence_only = false)
{
    std::string line;
    std::size_t lineno = 0;
    std::size_t groups = 0;
    bool have_header = false;
    std::vector<Document> docs;
    std::vector<std::size_t> doc_lines;
    bool in_record = false;

    auto close_record = [&] {
        if (in_record && docs.back().sentences.empty())
            throw FormatError(source, doc_lines.back(), "document " + docs.back().id + " has zero sentences");
        in_record = false;
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '%') continue;
        if (!have_header) {
            if (detail::is_blank(line)) continue;
            const auto fields = detail::split_ws(line);
            if (fields.size() != 1 || fields[0].rfind("groups=", 0) != 0 ||
                !detail::parse_count(fields[0].substr(7), groups))
                throw FormatError(source, lineno, "expected header 'groups=<G>'");
            if (groups < 2) throw FormatError(source, lineno, "groups must be >= 2");
            have_header = true;
            continue;
        }
        if (detail::is_blank(line)) {
            close_record();
            continue;
        }
        if (line.rfind("#doc", 0) == 0) {
            close_record();
            const auto fields = detail::split_ws(line);
            std::size_t g = 0;
            if (fields.size() != 3 || fields[0] != "#doc" || !detail::parse_count(fields[2], g))
                throw FormatError(source, lineno, "malformed record header, expected '#doc <id> <group>'");
            if (g >= groups) throw FormatError(source, lineno, "group index out of range");
            docs.push_back(Document{fields[1], g, {}});
            doc_lines.push_back(lineno);
            in_record = true;
            continue;
        }
        if (!in_record) throw FormatError(source, lineno, "sentence outside of a '#doc' record");
        Sentence s = tokenize(line);
        if (s.empty()) continue;
        if (first_sentence_only && !docs.back().sentences.empty()) continue;
        docs.back().sentences.push_back(std::move(s));
    }
    if (!have_header) throw FormatError(source, lineno, "missing header 'groups=<G>'");
    close_record();

    std::vector<bool> seen(groups, false);
    for (const auto& d : docs) seen[d.group] = true;
    for (std::size_t g = 0; g < groups; ++g)
        if (!seen[g]) throw FormatError(source, lineno, "group " + std::to_string(g) + " is empty");
    return Corpus(std::move(docs), groups);
}

inline Corpus load_corpus(const std::string& path, bool first_sentence_only = false)
{
    std::ifstream in(path);
    if (!in) throw FormatError(path, 0, "cannot open corpus file");
    return read_corpus(in, path, first_sentence_only);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus)
{
    out << "groups=" << corpus.groups() << '\n';
    for (const auto& d : corpus.documents()) {
        out << "#doc " << d.id << ' ' << d.group << '\n';
        for (const auto& s : d.sentences) {
            for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
            out << '\n';
        }
        out << '\n';
    }
}

inline void save_corpus(const std::string& path, const Corpus& corpus)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write corpus file " + path);
    write_corpus(out, corpus);
}

} // namespace grevo
