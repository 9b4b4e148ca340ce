#pragma once

// Clause coding: the dependent OV/VO variable, word-order pattern labels,
// and the independent factors (position, verb class, heaviness, animacy,
// information structure, frequency, sociolinguistic metadata). Works on
// clause subtrees delivered by the query engine.
//
// Conventions the coder relies on (all configurable in CodingScheme):
//   - the object is a non-pronoun, non-empty NP-ACC* inside the clause;
//   - OV/VO is decided by the head noun's position relative to the
//     infinitive, so split NPs follow their noun;
//   - objects scrambled out of the clause are excluded, as are pronoun and
//     empty-category objects;
//   - explicit subjects are NP-SBJ* nodes; patterns with a subject never
//     mark X slots (the inventory distinguishes S-patterns only);
//   - with no subject, X occupancy in the pre/mid/post slots maps into the
//     fixed inventory; a mid-slot X that has no literal label collapses into
//     the nearest outer occupied slot (audit note: the inventory has XOVX
//     but no OXVX or XOXV).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/errors.hpp"
#include "diachron/table.hpp"
#include "diachron/treequery.hpp"

namespace diachron {

struct NoInfinitive : DataError {
    explicit NoInfinitive(const std::string& id)
        : DataError("NoInfinitive", "clause " + id + " has no infinitive token") {}
};

struct NoObject : DataError {
    explicit NoObject(const std::string& id)
        : DataError("NoObject", "clause " + id + " has no candidate object") {}
};

struct DuplicateSidecarKey : DataError {
    DuplicateSidecarKey(const std::string& text_id, const std::string& clause_id)
        : DataError("DuplicateSidecarKey", text_id + "/" + clause_id) {}
};

// tag/label pattern sets; entries may end in "*" for prefix matching
struct CodingScheme {
    std::vector<std::string> infinitive_pos = {"VX", "VB"};
    std::vector<std::string> finite_verb_pos = {"VJ", "VBP", "VBD", "V-"};
    std::vector<std::string> noun_pos = {"N*"};
    std::vector<std::string> pronoun_pos = {"PRO*"};
    std::vector<std::string> determiner_pos = {"D", "DET"};
    std::vector<std::string> preposition_pos = {"P", "R-", "IN"};
    std::vector<std::string> conjunction_pos = {"CONJ*", "CC", "C-"};
    std::vector<std::string> punctuation_pos = {"PON*", ",", "."};
    std::string object_label = "NP-ACC*";
    std::string subject_label = "NP-SBJ*";
    std::vector<std::string> postmodifier_labels = {"CP*", "PP*", "NP-PRN*", "IP-REL*"};

    static bool match_one(const std::string& pat, const std::string& tag) {
        if (!pat.empty() && pat.back() == '*')
            return tag.compare(0, pat.size() - 1, pat, 0, pat.size() - 1) == 0;
        return tag == pat;
    }
    static bool match(const std::vector<std::string>& pats, const std::string& tag) {
        for (const auto& p : pats)
            if (match_one(p, tag)) return true;
        return false;
    }
    bool is_empty_form(const std::string& form) const {
        return form.empty() || form[0] == '*' || form == "0";
    }
};

enum class Order { OV, VO };
inline const char* to_string(Order o) { return o == Order::OV ? "OV" : "VO"; }

struct OvvoResult {
    bool excluded = false;
    std::string exclusion_reason;  // "pronoun", "empty", "scrambled", ...
    Order order = Order::OV;
    int head_noun_index = -1;
    int infinitive_index = -1;
    std::string object_node;  // node id of the chosen object
};

namespace coding_detail {

inline std::vector<const SyntaxNode*> subtree_nodes(const AnnotatedSentence& s,
                                                    const std::string& root_id) {
    std::vector<const SyntaxNode*> out;
    for (const auto& n : s.tree) {
        const SyntaxNode* cur = &n;
        std::set<std::string> seen;
        while (cur) {
            if (cur->id == root_id) {
                out.push_back(&n);
                break;
            }
            if (!cur->parent || !seen.insert(cur->id).second) break;
            cur = s.node(*cur->parent);
        }
    }
    return out;
}

inline int first_token_with_pos(const AnnotatedSentence& s, const std::set<int>& span,
                                const std::vector<std::string>& pats, const CodingScheme& sch) {
    for (int i : span) {
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(pats, *t.pos)) return i;
    }
    return -1;
}

} // namespace coding_detail

// object = non-pronoun non-empty NP-ACC* in the clause; order by the head
// noun's linear position relative to the infinitive
inline OvvoResult code_ovvo(const AnnotatedSentence& s, const std::string& clause_root,
                            const CodingScheme& sch = {}) {
    using namespace coding_detail;
    const SyntaxNode* root = s.node(clause_root);
    if (!root) throw NoInfinitive(clause_root);
    OvvoResult res;
    res.infinitive_index = first_token_with_pos(s, root->token_span, sch.infinitive_pos, sch);
    if (res.infinitive_index < 0) throw NoInfinitive(clause_root);

    auto nodes = subtree_nodes(s, clause_root);
    std::vector<const SyntaxNode*> candidates;
    for (const auto* n : nodes)
        if (CodingScheme::match_one(sch.object_label, n->label) &&
            !CodingScheme::match_one(sch.subject_label, n->label))
            candidates.push_back(n);
    if (candidates.empty()) throw NoObject(clause_root);

    std::string first_reason;
    for (const auto* obj : candidates) {
        // scrambled out: the object is not inside the clause span
        bool inside = std::includes(root->token_span.begin(), root->token_span.end(),
                                    obj->token_span.begin(), obj->token_span.end());
        std::string reason;
        int head = -1;
        if (!inside) {
            reason = "scrambled";
        } else {
            bool all_empty = true, all_pron = true;
            for (int i : obj->token_span) {
                const Token& t = s.tokens[i];
                if (!sch.is_empty_form(t.form)) all_empty = false;
                if (!(t.pos && CodingScheme::match(sch.pronoun_pos, *t.pos)) &&
                    !sch.is_empty_form(t.form))
                    all_pron = false;
            }
            if (all_empty) reason = "empty";
            else if (all_pron) reason = "pronoun";
            else {
                head = first_token_with_pos(s, obj->token_span, sch.noun_pos, sch);
                if (head < 0) {
                    // no noun inside: fall back to the last content token
                    for (int i : obj->token_span) {
                        const Token& t = s.tokens[i];
                        if (sch.is_empty_form(t.form)) continue;
                        if (t.pos && (CodingScheme::match(sch.determiner_pos, *t.pos) ||
                                      CodingScheme::match(sch.preposition_pos, *t.pos)))
                            continue;
                        head = i;
                    }
                }
                if (head < 0) reason = "no-head";
            }
        }
        if (reason.empty()) {
            res.head_noun_index = head;
            res.object_node = obj->id;
            res.order = head < res.infinitive_index ? Order::OV : Order::VO;
            return res;
        }
        if (first_reason.empty()) first_reason = reason;
    }
    res.excluded = true;
    res.exclusion_reason = first_reason;
    return res;
}

// fixed pattern inventory
inline const std::set<std::string>& pattern_inventory() {
    static const std::set<std::string> inv = {"OV",  "VO",  "OVX",  "OXV",  "VOX",  "VXO",
                                              "XOV", "XVO", "XOVX", "XVOX", "SOV",  "SVO",
                                              "OSV", "OVS", "VSO",  "VOS"};
    return inv;
}

inline std::string classify_pattern(const AnnotatedSentence& s, const std::string& clause_root,
                                    const OvvoResult& ovvo, const CodingScheme& sch = {}) {
    using namespace coding_detail;
    const SyntaxNode* root = s.node(clause_root);
    int O = ovvo.head_noun_index, V = ovvo.infinitive_index;
    const SyntaxNode* obj = s.node(ovvo.object_node);

    // explicit subject: its head position, if any
    int S = -1;
    for (const auto* n : subtree_nodes(s, clause_root)) {
        if (!CodingScheme::match_one(sch.subject_label, n->label)) continue;
        int head = first_token_with_pos(s, n->token_span, sch.noun_pos, sch);
        if (head < 0) head = first_token_with_pos(s, n->token_span, sch.pronoun_pos, sch);
        if (head >= 0) {
            S = head;
            break;
        }
    }
    if (S >= 0) {
        std::vector<std::pair<int, char>> pos{{S, 'S'}, {O, 'O'}, {V, 'V'}};
        std::sort(pos.begin(), pos.end());
        std::string label;
        for (auto& [p, c] : pos) label += c;
        return label;
    }

    // the clause-introducing preposition is a subordinator, not a constituent
    int intro_end = -1;
    for (int i : root->token_span) {
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(sch.punctuation_pos, *t.pos)) continue;
        if (t.pos && CodingScheme::match(sch.preposition_pos, *t.pos)) {
            intro_end = i;
            continue;
        }
        break;
    }
    // X slots: any non-punctuation content token outside the object NP and
    // the infinitive itself
    bool pre = false, mid = false, post = false;
    int lo = std::min(O, V), hi = std::max(O, V);
    for (int i : root->token_span) {
        if (i == V || i <= intro_end) continue;
        if (obj && obj->token_span.count(i)) continue;
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(sch.punctuation_pos, *t.pos)) continue;
        if (i < lo) pre = true;
        else if (i > hi) post = true;
        else mid = true;
    }
    std::string core = O < V ? "OV" : "VO";
    std::string label = std::string(pre ? "X" : "") +
                        std::string(1, core[0]) + std::string(mid ? "X" : "") +
                        std::string(1, core[1]) + std::string(post ? "X" : "");
    if (pattern_inventory().count(label)) return label;
    // collapse the mid X into the nearest outer occupied slot
    if (post) label = std::string(pre ? "X" : "") + core + "X";
    else label = "X" + core;
    return label;
}

struct Heaviness {
    int word_count = 1;
    bool heavy = false;
};

// word count excludes determiners, prepositions, and coordination markers;
// heavy = coordinated NP or NP carrying a postmodifier
inline Heaviness measure_heaviness(const AnnotatedSentence& s, const std::string& np_id,
                                   const CodingScheme& sch = {}) {
    const SyntaxNode* np = s.node(np_id);
    Heaviness h;
    if (!np) return h;
    int count = 0;
    bool coordinated = false;
    for (int i : np->token_span) {
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos) {
            if (CodingScheme::match(sch.conjunction_pos, *t.pos)) {
                coordinated = true;
                continue;
            }
            if (CodingScheme::match(sch.determiner_pos, *t.pos) ||
                CodingScheme::match(sch.preposition_pos, *t.pos) ||
                CodingScheme::match(sch.punctuation_pos, *t.pos))
                continue;
        }
        ++count;
    }
    h.word_count = std::max(1, count);
    bool postmodified = false;
    for (const auto& n : s.tree)
        if (n.parent && *n.parent == np->id)
            for (const auto& lab : sch.postmodifier_labels)
                if (CodingScheme::match_one(lab, n.label)) postmodified = true;
    h.heavy = coordinated || postmodified;
    return h;
}

enum class InfPosition { Preposed, Postposed, Independent, Prepositional };
inline const char* to_string(InfPosition p) {
    switch (p) {
        case InfPosition::Preposed: return "preposed";
        case InfPosition::Postposed: return "postposed";
        case InfPosition::Independent: return "independent";
        default: return "prepositional";
    }
}

// matrix verb: nearest finite verb outside the clause span (if any)
inline std::optional<int> find_matrix_verb(const AnnotatedSentence& s,
                                           const SyntaxNode& clause, const CodingScheme& sch) {
    std::optional<int> best;
    int inf = clause.token_span.empty() ? 0 : *clause.token_span.begin();
    for (const auto& t : s.tokens) {
        if (clause.token_span.count(t.index)) continue;
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(sch.finite_verb_pos, *t.pos)) {
            if (!best || std::abs(t.index - inf) < std::abs(*best - inf)) best = t.index;
        }
    }
    return best;
}

inline InfPosition code_inf_position(const AnnotatedSentence& s, const std::string& clause_root,
                                     int infinitive_index, std::optional<int> matrix_index,
                                     const CodingScheme& sch = {}) {
    const SyntaxNode* root = s.node(clause_root);
    // prepositional: the clause opens with a preposition
    for (int i : root->token_span) {
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(sch.punctuation_pos, *t.pos)) continue;
        if (t.pos && CodingScheme::match(sch.preposition_pos, *t.pos)) return InfPosition::Prepositional;
        break;
    }
    if (!matrix_index) return InfPosition::Independent;
    return infinitive_index < *matrix_index ? InfPosition::Preposed : InfPosition::Postposed;
}

enum class VerbClass { Aci, Restructuring, Control, Raising, Simple, Prepositional };
inline const char* to_string(VerbClass v) {
    switch (v) {
        case VerbClass::Aci: return "aci";
        case VerbClass::Restructuring: return "restructuring";
        case VerbClass::Control: return "control";
        case VerbClass::Raising: return "raising";
        case VerbClass::Simple: return "simple";
        default: return "prepositional";
    }
}
inline std::optional<VerbClass> verb_class_from(const std::string& s) {
    if (s == "aci") return VerbClass::Aci;
    if (s == "restructuring") return VerbClass::Restructuring;
    if (s == "control") return VerbClass::Control;
    if (s == "raising") return VerbClass::Raising;
    if (s == "simple") return VerbClass::Simple;
    if (s == "prepositional") return VerbClass::Prepositional;
    return std::nullopt;
}

struct VerbLexicon {
    std::map<std::string, VerbClass> classes;
    VerbClass default_class = VerbClass::Simple;
    mutable int warnings = 0;

    VerbClass classify(const std::string& lemma) const {
        auto it = classes.find(lemma);
        if (it != classes.end()) return it->second;
        ++warnings;
        return default_class;
    }

    static VerbLexicon from_tsv(const std::string& text) {
        VerbLexicon lex;
        size_t pos = 0;
        while (pos < text.size()) {
            size_t nl = text.find('\n', pos);
            std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
            pos = nl == std::string::npos ? text.size() : nl + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            size_t tab = line.find('\t');
            if (tab == std::string::npos) continue;
            auto cls = verb_class_from(line.substr(tab + 1));
            if (cls) lex.classes[line.substr(0, tab)] = *cls;
        }
        return lex;
    }
};

struct FrequencyLexicon {
    std::map<std::string, long long> counts;

    // lexicon count, else the lemma's own corpus count (at least 1)
    long long lookup(const std::string& lemma,
                     const std::map<std::string, long long>& corpus_counts) const {
        if (auto it = counts.find(lemma); it != counts.end()) return it->second;
        if (auto it = corpus_counts.find(lemma); it != corpus_counts.end())
            return std::max(1LL, it->second);
        return 1;
    }

    static FrequencyLexicon from_tsv(const std::string& text) {
        FrequencyLexicon lex;
        size_t pos = 0;
        while (pos < text.size()) {
            size_t nl = text.find('\n', pos);
            std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
            pos = nl == std::string::npos ? text.size() : nl + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            size_t tab = line.find('\t');
            if (tab == std::string::npos) continue;
            lex.counts[line.substr(0, tab)] = std::stoll(line.substr(tab + 1));
        }
        return lex;
    }
};

struct PeriodMap {
    struct Entry {
        std::string label;
        double lo, hi;  // inclusive date_median range
        int index;      // continuous time coding
    };
    std::vector<Entry> entries;

    std::pair<std::string, int> lookup(double date) const {
        for (const auto& e : entries)
            if (date >= e.lo && date <= e.hi) return {e.label, e.index};
        return {"unknown", 0};
    }
};

struct ClauseRecord {
    std::string id;
    std::string text_id;
    std::string language;     // latin | oldfrench
    double date_median = 0;
    std::string period_cluster;
    int period_index = 0;
    Order order = Order::OV;
    std::string pattern;
    bool split = false;
    bool intervening = false;
    bool subject_explicit = false;
    InfPosition inf_position = InfPosition::Postposed;
    VerbClass verb_class = VerbClass::Simple;
    std::string tense;        // present | past | none
    int heaviness_words = 1;
    bool heavy = false;
    std::string animacy;         // human | nonhuman
    std::string info_status;     // given | accessible | new
    std::string info_relevance;  // contrast | infofocus
    std::string genre, theme;
    bool metric = false;
    std::string lemma;        // infinitive lemma
    long long lemma_freq = 1;
    bool annotated = false;   // sidecar row found
};

struct CodedClause {
    bool excluded = false;
    std::string exclusion_reason;
    ClauseRecord record;
};

// full coding of one extracted clause
inline CodedClause code_clause(const AnnotatedSentence& s, const ExtractRecord& ex,
                               const VerbLexicon& verbs, const FrequencyLexicon& freqs,
                               const std::map<std::string, long long>& corpus_counts,
                               const PeriodMap& periods, const CodingScheme& sch = {}) {
    CodedClause out;
    OvvoResult ov = code_ovvo(s, ex.clause_root, sch);
    if (ov.excluded) {
        out.excluded = true;
        out.exclusion_reason = ov.exclusion_reason;
        return out;
    }
    ClauseRecord& r = out.record;
    r.id = s.id + ":" + ex.clause_root;
    r.text_id = s.text_id;
    if (auto it = s.meta.find("language"); it != s.meta.end()) r.language = it->second;
    if (auto it = s.meta.find("date_median"); it != s.meta.end()) r.date_median = std::stod(it->second);
    auto [plabel, pindex] = periods.lookup(r.date_median);
    r.period_cluster = plabel;
    r.period_index = pindex;
    r.order = ov.order;
    r.pattern = classify_pattern(s, ex.clause_root, ov, sch);

    const SyntaxNode* obj = s.node(ov.object_node);
    const SyntaxNode* root = s.node(ex.clause_root);
    // split NP: the object's covered indices are not contiguous
    if (obj && obj->token_span.size() > 1) {
        int prev = -2;
        for (int i : obj->token_span) {
            if (prev != -2 && i != prev + 1) r.split = true;
            prev = i;
        }
    }
    // intervening material between the head noun and the infinitive
    int lo = std::min(ov.head_noun_index, ov.infinitive_index);
    int hi = std::max(ov.head_noun_index, ov.infinitive_index);
    for (int i = lo + 1; i < hi; ++i) {
        if (obj && obj->token_span.count(i)) continue;
        if (!root->token_span.count(i)) continue;
        const Token& t = s.tokens[i];
        if (sch.is_empty_form(t.form)) continue;
        if (t.pos && CodingScheme::match(sch.punctuation_pos, *t.pos)) continue;
        r.intervening = true;
    }
    // explicit subject
    for (const auto* n : coding_detail::subtree_nodes(s, ex.clause_root))
        if (CodingScheme::match_one(sch.subject_label, n->label)) {
            bool content = false;
            for (int i : n->token_span)
                if (!sch.is_empty_form(s.tokens[i].form)) content = true;
            if (content) r.subject_explicit = true;
        }
    auto matrix = find_matrix_verb(s, *root, sch);
    r.inf_position = code_inf_position(s, ex.clause_root, ov.infinitive_index, matrix, sch);

    // matrix verb class via its lemma (or surface form when unlemmatized)
    if (r.inf_position == InfPosition::Prepositional) {
        r.verb_class = VerbClass::Prepositional;
    } else if (matrix) {
        const Token& mv = s.tokens[*matrix];
        r.verb_class = verbs.classify(mv.lemma.value_or(mv.form));
    } else {
        r.verb_class = VerbClass::Aci;  // independent infinitives pattern with AcI
    }

    const Token& inf = s.tokens[ov.infinitive_index];
    r.lemma = inf.lemma.value_or(inf.form);
    r.lemma_freq = freqs.lookup(r.lemma, corpus_counts);
    // tense marking exists only for Latin (past infinitives in -isse)
    if (r.language == "latin")
        r.tense = inf.form.size() >= 4 && inf.form.substr(inf.form.size() - 4) == "isse"
                      ? "past"
                      : "present";
    else
        r.tense = "none";
    if (obj) {
        auto h = measure_heaviness(s, obj->id, sch);
        r.heaviness_words = h.word_count;
        r.heavy = h.heavy;
    }
    if (auto it = s.meta.find("genre"); it != s.meta.end()) r.genre = it->second;
    if (auto it = s.meta.find("theme"); it != s.meta.end()) r.theme = it->second;
    if (auto it = s.meta.find("metric"); it != s.meta.end()) r.metric = it->second == "true";
    return out;
}

// annotation sidecar: rows keyed by (text_id, clause id)
struct SidecarRow {
    std::string text_id, clause_id;
    std::string info_status, info_relevance, animacy;
};

inline void attach_annotations(std::vector<ClauseRecord>& records,
                               const std::vector<SidecarRow>& sidecar) {
    std::map<std::pair<std::string, std::string>, const SidecarRow*> index;
    for (const auto& row : sidecar) {
        auto key = std::make_pair(row.text_id, row.clause_id);
        if (index.count(key)) throw DuplicateSidecarKey(row.text_id, row.clause_id);
        index[key] = &row;
    }
    for (auto& r : records) {
        auto it = index.find({r.text_id, r.id});
        if (it == index.end()) {
            r.annotated = false;  // flagged, not dropped
            continue;
        }
        r.annotated = true;
        r.info_status = it->second->info_status;
        r.info_relevance = it->second->info_relevance;
        r.animacy = it->second->animacy;
    }
}

inline const std::vector<std::string>& factor_table_columns() {
    static const std::vector<std::string> cols = {
        "id",          "text_id",        "language",       "date_median", "period_cluster",
        "period_index", "order",         "pattern",        "split",       "intervening",
        "subject",     "inf_position",   "verb_class",     "tense",       "heaviness_words",
        "heaviness_syn", "animacy",      "info_status",    "info_relevance", "genre",
        "theme",       "metric",         "lemma",          "lemma_freq",  "annotated"};
    return cols;
}

inline FactorTable build_factor_table(const std::vector<ClauseRecord>& records) {
    FactorTable t;
    t.response = "order";
    auto col = [&](const std::string& name, CellType ty, auto getter) {
        std::vector<std::string> cells;
        cells.reserve(records.size());
        for (const auto& r : records) cells.push_back(getter(r));
        t.add_column(name, ty, std::move(cells));
    };
    col("id", CellType::Categorical, [](const ClauseRecord& r) { return r.id; });
    col("text_id", CellType::Categorical, [](const ClauseRecord& r) { return r.text_id; });
    col("language", CellType::Categorical, [](const ClauseRecord& r) { return r.language; });
    col("date_median", CellType::Real, [](const ClauseRecord& r) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", r.date_median);
        return std::string(buf);
    });
    col("period_cluster", CellType::Categorical,
        [](const ClauseRecord& r) { return r.period_cluster; });
    col("period_index", CellType::Integer,
        [](const ClauseRecord& r) { return std::to_string(r.period_index); });
    col("order", CellType::Categorical,
        [](const ClauseRecord& r) { return std::string(to_string(r.order)); });
    col("pattern", CellType::Categorical, [](const ClauseRecord& r) { return r.pattern; });
    col("split", CellType::Boolean,
        [](const ClauseRecord& r) { return std::string(r.split ? "true" : "false"); });
    col("intervening", CellType::Boolean,
        [](const ClauseRecord& r) { return std::string(r.intervening ? "true" : "false"); });
    col("subject", CellType::Categorical,
        [](const ClauseRecord& r) { return std::string(r.subject_explicit ? "explicit" : "absent"); });
    col("inf_position", CellType::Categorical,
        [](const ClauseRecord& r) { return std::string(to_string(r.inf_position)); });
    col("verb_class", CellType::Categorical,
        [](const ClauseRecord& r) { return std::string(to_string(r.verb_class)); });
    col("tense", CellType::Categorical, [](const ClauseRecord& r) { return r.tense; });
    col("heaviness_words", CellType::Integer,
        [](const ClauseRecord& r) { return std::to_string(r.heaviness_words); });
    col("heaviness_syn", CellType::Categorical,
        [](const ClauseRecord& r) { return std::string(r.heavy ? "heavy" : "light"); });
    col("animacy", CellType::Categorical, [](const ClauseRecord& r) { return r.animacy; });
    col("info_status", CellType::Categorical, [](const ClauseRecord& r) { return r.info_status; });
    col("info_relevance", CellType::Categorical,
        [](const ClauseRecord& r) { return r.info_relevance; });
    col("genre", CellType::Categorical, [](const ClauseRecord& r) { return r.genre; });
    col("theme", CellType::Categorical, [](const ClauseRecord& r) { return r.theme; });
    col("metric", CellType::Boolean,
        [](const ClauseRecord& r) { return std::string(r.metric ? "true" : "false"); });
    col("lemma", CellType::Categorical, [](const ClauseRecord& r) { return r.lemma; });
    col("lemma_freq", CellType::Integer,
        [](const ClauseRecord& r) { return std::to_string(r.lemma_freq); });
    col("annotated", CellType::Boolean,
        [](const ClauseRecord& r) { return std::string(r.annotated ? "true" : "false"); });
    return t;
}

} // namespace diachron
