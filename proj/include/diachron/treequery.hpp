#pragma once

// One query language covering the three source idioms: bracketed-corpus
// dominance queries ("iDominates"), TIGER node/edge constraints
// (#n0:[cat="IP"]>INF #n1), and multi-layer token queries (#1 _=_ #2).
//
//   query   := term ("&" term)*
//   term    := operand ((">" [LABEL] | ">>" | "iDominates" | "Dominates"
//              | "_=_") operand)*
//   operand := "#" VAR [":" "[" constraint "]"]
//            | "[" constraint "]"       (anonymous variable)
//            | constraint               (bare layer term, numbered #1, #2, ...)
//   constraint := attr ("=" | "!=") pattern
//   attr    := cat | pos | pos2 | word | lemma | edge | morph
//   pattern := "..." with "*" wildcards | /regex/
//
// "*" in a quoted pattern matches any substring, including further hyphens:
// "IP-INF*" matches IP-INF-SPE. /regex/ must match the whole value; the
// supported dialect is the std::regex ECMAScript grammar (alternation,
// classes, anchors, dot, star and friends). Attributes address nodes (cat,
// edge) or lexical entries (pos, pos2, word, lemma, morph); on sentences
// with a tree, lexical attributes are answered by leaf nodes, otherwise by
// the tokens themselves. "_=_" holds when two variables cover the same
// token span.

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/errors.hpp"

namespace diachron {

struct SyntaxError : DataError {
    SyntaxError(size_t pos, std::string expected)
        : DataError("SyntaxError",
                    "at position " + std::to_string(pos) + ": expected " + expected),
          position(pos) {}
    size_t position;
};

struct MissingLayer : DataError {
    explicit MissingLayer(std::string attr)
        : DataError("MissingLayer", "query addresses absent layer '" + attr + "'"),
          attr(std::move(attr)) {}
    std::string attr;
};

struct QueryPattern {
    enum class Kind { Glob, Regex } kind = Kind::Glob;
    std::string text;
    std::shared_ptr<std::regex> re;  // compiled for Kind::Regex

    bool matches(const std::string& value) const {
        if (kind == Kind::Regex) return std::regex_match(value, *re);
        return glob_match(text, 0, value, 0);
    }

    static bool glob_match(const std::string& p, size_t pi, const std::string& v, size_t vi) {
        while (pi < p.size() && p[pi] != '*') {
            if (vi >= v.size() || p[pi] != v[vi]) return false;
            ++pi, ++vi;
        }
        if (pi == p.size()) return vi == v.size();
        // p[pi] == '*': try every split
        for (size_t k = vi; k <= v.size(); ++k)
            if (glob_match(p, pi + 1, v, k)) return true;
        return false;
    }
};

struct NodeConstraint {
    std::string var;
    std::string attr;
    bool negated = false;
    QueryPattern pattern;
};

struct EdgeConstraint {
    std::string parent_var;
    std::string child_var;
    std::optional<std::string> label;  // only for immediate dominance
    bool transitive = false;
};

struct AlignConstraint {
    std::string a, b;
};

struct QueryAst {
    std::vector<NodeConstraint> constraints;
    std::vector<EdgeConstraint> edges;
    std::vector<AlignConstraint> aligns;
    std::vector<std::string> vars;  // in first-mention order

    void mention(const std::string& v) {
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
};

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

namespace query_detail {

struct Cursor {
    const std::string& s;
    size_t i = 0;

    void ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(const char* tok) {
        ws();
        size_t n = std::string::traits_type::length(tok);
        if (s.compare(i, n, tok) == 0) {
            i += n;
            return true;
        }
        return false;
    }
    bool peek(const char* tok) {
        ws();
        return s.compare(i, std::string::traits_type::length(tok), tok) == 0;
    }
    std::string ident() {
        ws();
        size_t st = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
                                s[i] == '-'))
            ++i;
        if (i == st) throw SyntaxError(st, "identifier");
        return s.substr(st, i - st);
    }
    bool done() {
        ws();
        return i >= s.size();
    }
};

inline QueryPattern pattern(Cursor& c) {
    c.ws();
    QueryPattern p;
    if (c.i < c.s.size() && c.s[c.i] == '"') {
        ++c.i;
        size_t st = c.i;
        while (c.i < c.s.size() && c.s[c.i] != '"') ++c.i;
        if (c.i >= c.s.size()) throw SyntaxError(st, "closing '\"'");
        p.kind = QueryPattern::Kind::Glob;
        p.text = c.s.substr(st, c.i - st);
        ++c.i;
        return p;
    }
    if (c.i < c.s.size() && c.s[c.i] == '/') {
        ++c.i;
        size_t st = c.i;
        while (c.i < c.s.size() && c.s[c.i] != '/') ++c.i;
        if (c.i >= c.s.size()) throw SyntaxError(st, "closing '/'");
        p.kind = QueryPattern::Kind::Regex;
        p.text = c.s.substr(st, c.i - st);
        ++c.i;
        try {
            p.re = std::make_shared<std::regex>(p.text, std::regex::ECMAScript);
        } catch (const std::regex_error&) {
            throw SyntaxError(st, "valid regex");
        }
        return p;
    }
    throw SyntaxError(c.i, "quoted pattern or /regex/");
}

inline const std::set<std::string>& known_attrs() {
    static const std::set<std::string> a = {"cat", "pos", "pos2", "word", "lemma", "edge", "morph"};
    return a;
}

// attr ("="|"!=") pattern, appended to `ast` for `var`
inline void constraint_body(Cursor& c, QueryAst& ast, const std::string& var) {
    std::string attr = c.ident();
    if (!known_attrs().count(attr)) throw SyntaxError(c.i, "attribute (cat|pos|pos2|word|lemma|edge|morph)");
    bool neg = false;
    if (c.eat("!=")) neg = true;
    else if (!c.eat("=")) throw SyntaxError(c.i, "'=' or '!='");
    // CorpusSearch-style "!PRO*" negation inside the pattern
    c.ws();
    if (c.i < c.s.size() && c.s[c.i] == '!') {
        neg = !neg;
        ++c.i;
    }
    QueryPattern p = pattern(c);
    ast.constraints.push_back({var, attr, neg, std::move(p)});
}

inline void constraint_block(Cursor& c, QueryAst& ast, const std::string& var) {
    if (!c.eat("[")) throw SyntaxError(c.i, "'['");
    constraint_body(c, ast, var);
    if (!c.eat("]")) throw SyntaxError(c.i, "']'");
}

struct VarCounters {
    int anon = 0;   // [ ... ] blocks without a variable
    int layer = 0;  // bare layer terms, numbered like ANNIS (#1, #2, ...)
};

inline bool at_bare_constraint(Cursor& c) {
    c.ws();
    size_t save = c.i;
    bool yes = false;
    try {
        std::string id = c.ident();
        c.ws();
        yes = known_attrs().count(id) && c.i < c.s.size() && (c.s[c.i] == '=' || c.s[c.i] == '!');
    } catch (const SyntaxError&) {
    }
    c.i = save;
    return yes;
}

// operand: "#" var [":" block] | block (anonymous) | bare constraint
inline std::string operand(Cursor& c, QueryAst& ast, VarCounters& vc) {
    c.ws();
    if (c.i < c.s.size() && c.s[c.i] == '#') {
        ++c.i;
        std::string var = c.ident();
        ast.mention(var);
        if (c.eat(":")) constraint_block(c, ast, var);
        return var;
    }
    if (c.peek("[")) {
        std::string var = "_anon" + std::to_string(vc.anon++);
        ast.mention(var);
        constraint_block(c, ast, var);
        return var;
    }
    if (at_bare_constraint(c)) {
        std::string var = std::to_string(++vc.layer);
        ast.mention(var);
        constraint_body(c, ast, var);
        return var;
    }
    throw SyntaxError(c.i, "'#var', '[...]' or 'attr=pattern'");
}

} // namespace query_detail

inline QueryAst parse_query(const std::string& text) {
    using namespace query_detail;
    Cursor c{text};
    QueryAst ast;
    VarCounters vc;
    while (true) {
        std::string lhs = operand(c, ast, vc);
        // chain of dominance / alignment operators
        while (true) {
            c.ws();
            if (c.eat(">>") || c.eat("Dominates")) {
                std::string rhs = operand(c, ast, vc);
                ast.edges.push_back({lhs, rhs, std::nullopt, true});
                lhs = rhs;
            } else if (c.peek(">")) {
                c.eat(">");
                std::optional<std::string> label;
                c.ws();
                if (c.i < c.s.size() && c.s[c.i] != '#' && c.s[c.i] != '[' &&
                    !at_bare_constraint(c) &&
                    (std::isalnum(static_cast<unsigned char>(c.s[c.i])) || c.s[c.i] == '_'))
                    label = c.ident();
                std::string rhs = operand(c, ast, vc);
                ast.edges.push_back({lhs, rhs, label, false});
                lhs = rhs;
            } else if (c.eat("iDominates")) {
                std::string rhs = operand(c, ast, vc);
                ast.edges.push_back({lhs, rhs, std::nullopt, false});
                lhs = rhs;
            } else if (c.eat("_=_")) {
                std::string rhs = operand(c, ast, vc);
                ast.aligns.push_back({lhs, rhs});
                lhs = rhs;
            } else {
                break;
            }
        }
        if (c.done()) break;
        if (!c.eat("&")) throw SyntaxError(c.i, "'&' or end of query");
    }
    return ast;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

// An entity a variable can bind: a tree node or (treeless sentences) a token.
struct Entity {
    bool is_token = false;
    int token_index = -1;     // for tokens
    const SyntaxNode* node = nullptr;

    std::string id() const {
        return is_token ? "t" + std::to_string(token_index) : node->id;
    }
};

using Assignment = std::map<std::string, std::string>;  // var -> entity id

struct MatchSet {
    std::vector<Assignment> assignments;
};

namespace query_detail {

struct SentenceIndex {
    const AnnotatedSentence& s;
    std::vector<Entity> entities;
    std::map<std::string, int> node_pos;  // node id -> entities index

    explicit SentenceIndex(const AnnotatedSentence& sent) : s(sent) {
        if (s.has_tree()) {
            for (const auto& n : s.tree) {
                node_pos[n.id] = static_cast<int>(entities.size());
                entities.push_back({false, -1, &n});
            }
        } else {
            for (const auto& t : s.tokens) entities.push_back({true, t.index, nullptr});
        }
    }

    bool is_leaf(const SyntaxNode& n) const {
        for (const auto& m : s.tree)
            if (m.parent && *m.parent == n.id) return false;
        return true;
    }

    std::optional<std::string> attr(const Entity& e, const std::string& name) const {
        if (e.is_token) {
            const Token& t = s.tokens[e.token_index];
            if (name == "word") return t.form;
            if (name == "pos") return t.pos;
            if (name == "pos2") return t.pos2;
            if (name == "lemma") return t.lemma;
            if (name == "morph") return t.morph;
            return std::nullopt;  // cat/edge are node-only
        }
        const SyntaxNode& n = *e.node;
        if (name == "cat") return n.label;
        if (name == "edge") return n.edge_label;
        // lexical attributes delegate to the covered token on leaves
        if (n.token_span.size() == 1 && is_leaf(n)) {
            const Token& t = s.tokens[*n.token_span.begin()];
            if (name == "word") return t.form;
            if (name == "pos") return t.pos;
            if (name == "pos2") return t.pos2;
            if (name == "lemma") return t.lemma;
            if (name == "morph") return t.morph;
        }
        return std::nullopt;
    }

    bool layer_present(const std::string& name) const {
        for (const auto& e : entities)
            if (attr(e, name)) return true;
        return false;
    }

    bool immediate(const Entity& p, const Entity& ch, const std::optional<std::string>& label) const {
        if (p.is_token || ch.is_token) return false;
        if (!ch.node->parent || *ch.node->parent != p.node->id) return false;
        if (label) return ch.node->edge_label && *ch.node->edge_label == *label;
        return true;
    }

    bool dominates(const Entity& p, const Entity& ch) const {
        if (p.is_token || ch.is_token) return false;
        const SyntaxNode* cur = ch.node;
        std::set<std::string> seen;
        while (cur->parent && seen.insert(cur->id).second) {
            if (*cur->parent == p.node->id) return true;
            auto it = node_pos.find(*cur->parent);
            if (it == node_pos.end()) break;
            cur = entities[it->second].node;
        }
        return false;
    }

    std::set<int> span(const Entity& e) const {
        if (e.is_token) return {e.token_index};
        return e.node->token_span;
    }
};

} // namespace query_detail

inline MatchSet eval_query(const QueryAst& ast, const AnnotatedSentence& sentence) {
    using query_detail::SentenceIndex;
    SentenceIndex ix(sentence);

    // layer presence check for every attribute the query touches
    for (const auto& nc : ast.constraints)
        if (!ix.layer_present(nc.attr)) throw MissingLayer(nc.attr);

    // candidates per variable
    std::map<std::string, std::vector<int>> cand;
    for (const auto& v : ast.vars) {
        std::vector<int> list;
        for (size_t e = 0; e < ix.entities.size(); ++e) {
            bool ok = true;
            for (const auto& nc : ast.constraints) {
                if (nc.var != v) continue;
                auto val = ix.attr(ix.entities[e], nc.attr);
                bool m = val && (nc.pattern.matches(*val) != nc.negated);
                if (!m) {
                    ok = false;
                    break;
                }
            }
            if (ok) list.push_back(static_cast<int>(e));
        }
        cand[v] = std::move(list);
    }

    // most selective variable first
    std::vector<std::string> order = ast.vars;
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        return cand[a].size() < cand[b].size();
    });

    std::map<std::string, int> bound;
    MatchSet out;

    auto constraints_ok = [&]() {
        for (const auto& ec : ast.edges) {
            auto p = bound.find(ec.parent_var);
            auto ch = bound.find(ec.child_var);
            if (p == bound.end() || ch == bound.end()) continue;
            const auto& pe = ix.entities[p->second];
            const auto& ce = ix.entities[ch->second];
            bool ok = ec.transitive ? ix.dominates(pe, ce) : ix.immediate(pe, ce, ec.label);
            if (!ok) return false;
        }
        for (const auto& ac : ast.aligns) {
            auto a = bound.find(ac.a);
            auto b = bound.find(ac.b);
            if (a == bound.end() || b == bound.end()) continue;
            if (ix.span(ix.entities[a->second]) != ix.span(ix.entities[b->second])) return false;
        }
        return true;
    };

    std::function<void(size_t)> rec = [&](size_t vi) {
        if (vi == order.size()) {
            Assignment a;
            for (const auto& v : ast.vars) a[v] = ix.entities[bound[v]].id();
            out.assignments.push_back(std::move(a));
            return;
        }
        const std::string& v = order[vi];
        for (int e : cand[v]) {
            bound[v] = e;
            if (constraints_ok()) rec(vi + 1);
            bound.erase(v);
        }
    };
    if (!ast.vars.empty()) rec(0);

    // canonical order + dedup
    std::sort(out.assignments.begin(), out.assignments.end());
    out.assignments.erase(std::unique(out.assignments.begin(), out.assignments.end()),
                          out.assignments.end());
    return out;
}

struct ExtractRecord {
    std::string sentence_id;
    Assignment bindings;
    std::string clause_root;      // entity id bound to the first query variable
    std::set<int> clause_span;    // token indices of that subtree
    std::vector<std::string> clause_nodes;  // node ids of the subtree
};

inline std::vector<ExtractRecord> extract(const Treebank& tb, const QueryAst& ast) {
    std::vector<ExtractRecord> out;
    if (ast.vars.empty()) return out;
    const std::string& head = ast.vars.front();
    for (const auto& s : tb.sentences) {
        MatchSet ms = eval_query(ast, s);
        for (const auto& a : ms.assignments) {
            ExtractRecord r;
            r.sentence_id = s.id;
            r.bindings = a;
            r.clause_root = a.at(head);
            if (const SyntaxNode* root = s.node(r.clause_root)) {
                r.clause_span = root->token_span;
                for (const auto& n : s.tree) {
                    // subtree membership: walk parents to the root
                    const SyntaxNode* cur = &n;
                    std::set<std::string> seen;
                    while (cur) {
                        if (cur->id == root->id) {
                            r.clause_nodes.push_back(n.id);
                            break;
                        }
                        if (!cur->parent || !seen.insert(cur->id).second) break;
                        cur = s.node(*cur->parent);
                    }
                }
            } else if (!r.clause_root.empty() && r.clause_root[0] == 't') {
                r.clause_span = {std::stoi(r.clause_root.substr(1))};
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace diachron
