#pragma once

// Unified interchange format: one JSON object per line, one sentence per
// line, UTF-8, LF line endings. Field layout:
//   {id, text_id, tokens:[{i,form,lemma?,pos?,pos2?,morph?}],
//    tree?:[{id,label,edge?,parent?,span:[...]}], meta:{...}}

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diachron/corpus.hpp"
#include "diachron/errors.hpp"

namespace diachron {

struct MalformedLine : DataError {
    MalformedLine(size_t line, std::string why)
        : DataError("MalformedLine", "line " + std::to_string(line) + ": " + std::move(why)),
          line_number(line) {}
    size_t line_number;
};

using ojson = nlohmann::ordered_json;

inline ojson sentence_to_json(const AnnotatedSentence& s) {
    ojson j;
    j["id"] = s.id;
    j["text_id"] = s.text_id;
    ojson toks = ojson::array();
    for (const auto& t : s.tokens) {
        ojson tj;
        tj["i"] = t.index;
        tj["form"] = t.form;
        if (t.lemma) tj["lemma"] = *t.lemma;
        if (t.pos) tj["pos"] = *t.pos;
        if (t.pos2) tj["pos2"] = *t.pos2;
        if (t.morph) tj["morph"] = *t.morph;
        toks.push_back(std::move(tj));
    }
    j["tokens"] = std::move(toks);
    if (!s.tree.empty()) {
        ojson tree = ojson::array();
        for (const auto& n : s.tree) {
            ojson nj;
            nj["id"] = n.id;
            nj["label"] = n.label;
            if (n.edge_label) nj["edge"] = *n.edge_label;
            if (n.parent) nj["parent"] = *n.parent;
            nj["span"] = std::vector<int>(n.token_span.begin(), n.token_span.end());
            tree.push_back(std::move(nj));
        }
        j["tree"] = std::move(tree);
    }
    ojson meta = ojson::object();
    for (const auto& [k, v] : s.meta) meta[k] = v;
    j["meta"] = std::move(meta);
    return j;
}

inline AnnotatedSentence sentence_from_json(const ojson& j, size_t line) {
    auto need = [&](const char* field) -> const ojson& {
        auto it = j.find(field);
        if (it == j.end()) throw MalformedLine(line, std::string("missing field '") + field + "'");
        return *it;
    };
    AnnotatedSentence s;
    try {
        s.id = need("id").get<std::string>();
        s.text_id = need("text_id").get<std::string>();
        for (const auto& tj : need("tokens")) {
            Token t;
            t.index = tj.at("i").get<int>();
            t.form = tj.at("form").get<std::string>();
            if (tj.contains("lemma")) t.lemma = tj["lemma"].get<std::string>();
            if (tj.contains("pos")) t.pos = tj["pos"].get<std::string>();
            if (tj.contains("pos2")) t.pos2 = tj["pos2"].get<std::string>();
            if (tj.contains("morph")) t.morph = tj["morph"].get<std::string>();
            s.tokens.push_back(std::move(t));
        }
        if (j.contains("tree")) {
            for (const auto& nj : j["tree"]) {
                SyntaxNode n;
                n.id = nj.at("id").get<std::string>();
                n.label = nj.at("label").get<std::string>();
                if (nj.contains("edge")) n.edge_label = nj["edge"].get<std::string>();
                if (nj.contains("parent")) n.parent = nj["parent"].get<std::string>();
                for (const auto& i : nj.at("span")) n.token_span.insert(i.get<int>());
                s.tree.push_back(std::move(n));
            }
        }
        if (j.contains("meta"))
            for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it)
                s.meta[it.key()] = it.value().is_string()
                                       ? it.value().get<std::string>()
                                       : it.value().dump();
    } catch (const ojson::exception& e) {
        throw MalformedLine(line, e.what());
    }
    return s;
}

inline std::string write_unified(const std::vector<AnnotatedSentence>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        out += sentence_to_json(s).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<AnnotatedSentence> read_unified(const std::string& bytes) {
    std::vector<AnnotatedSentence> out;
    size_t pos = 0, lineno = 0;
    while (pos < bytes.size()) {
        size_t nl = bytes.find('\n', pos);
        std::string line = bytes.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? bytes.size() : nl + 1;
        ++lineno;
        if (line.empty()) continue;
        ojson j = ojson::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(lineno, "not valid JSON");
        out.push_back(sentence_from_json(j, lineno));
    }
    return out;
}

} // namespace diachron
