#pragma once

// In-memory representation of annotated sentences and constituency/dependency
// trees, shared by every other module. All types are plain immutable-by-
// convention value types; validation is pure.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diachron/errors.hpp"

namespace diachron {

struct Token {
    int index = 0;                 // 0-based position in the sentence
    std::string form;
    std::optional<std::string> lemma;
    std::optional<std::string> pos;   // reduced tagset
    std::optional<std::string> pos2;  // fine-grained tagset
    std::optional<std::string> morph;
};

// Node of a labeled tree. Ids are strings so that source ids (e.g. TIGER's
// "p766469") survive a round trip; Penn nodes get synthesized ids.
// token_span is a set of token indices, which permits discontinuous
// constituents. Empty categories keep their source form (leading "*" or "0")
// and are excluded at coding time, not here.
struct SyntaxNode {
    std::string id;
    std::string label;
    std::optional<std::string> edge_label;
    std::optional<std::string> parent;
    std::set<int> token_span;
};

struct AnnotatedSentence {
    std::string id;
    std::string text_id;
    std::vector<Token> tokens;
    std::vector<SyntaxNode> tree;  // empty = no tree
    std::map<std::string, std::string> meta;

    bool has_tree() const { return !tree.empty(); }
    const SyntaxNode* node(const std::string& node_id) const {
        for (const auto& n : tree)
            if (n.id == node_id) return &n;
        return nullptr;
    }
};

enum class SourceFormat { Penn, Tiger, Lines };

inline const char* to_string(SourceFormat f) {
    switch (f) {
        case SourceFormat::Penn: return "penn";
        case SourceFormat::Tiger: return "tiger";
        default: return "lines";
    }
}

struct Treebank {
    std::vector<AnnotatedSentence> sentences;
    SourceFormat source_format = SourceFormat::Lines;
};

struct Violation {
    std::string sentence_id;
    std::string rule;     // e.g. "dangling-parent", "span-out-of-range"
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

inline void validate_sentence(const AnnotatedSentence& s, ValidationReport& rep) {
    auto add = [&](const char* rule, std::string detail) {
        rep.violations.push_back({s.id, rule, std::move(detail)});
    };

    for (size_t i = 0; i < s.tokens.size(); ++i) {
        const Token& t = s.tokens[i];
        if (t.form.empty()) add("empty-form", "token " + std::to_string(i));
        if (t.index != static_cast<int>(i))
            add("non-contiguous-index",
                "token " + std::to_string(i) + " has index " + std::to_string(t.index));
    }

    if (s.tree.empty()) return;

    std::map<std::string, const SyntaxNode*> byid;
    for (const auto& n : s.tree) {
        if (!byid.emplace(n.id, &n).second) add("duplicate-node-id", n.id);
    }

    int roots = 0;
    for (const auto& n : s.tree) {
        if (!n.parent) {
            ++roots;
            continue;
        }
        if (!byid.count(*n.parent)) add("dangling-parent", n.id + " -> " + *n.parent);
    }
    if (roots == 0 && !s.tree.empty()) add("no-root", "");
    if (roots > 1) add("multiple-roots", std::to_string(roots) + " roots");

    // cycle check by walking parent chains
    for (const auto& n : s.tree) {
        std::set<std::string> seen;
        const SyntaxNode* cur = &n;
        while (cur->parent) {
            if (!seen.insert(cur->id).second) {
                add("parent-cycle", n.id);
                break;
            }
            auto it = byid.find(*cur->parent);
            if (it == byid.end()) break;
            cur = it->second;
        }
    }

    std::map<std::string, std::set<int>> child_union;
    std::map<std::string, bool> has_children;
    for (const auto& n : s.tree) {
        for (int i : n.token_span)
            if (i < 0 || i >= static_cast<int>(s.tokens.size()))
                add("span-out-of-range", n.id + " index " + std::to_string(i));
        if (n.parent && byid.count(*n.parent)) {
            auto& u = child_union[*n.parent];
            u.insert(n.token_span.begin(), n.token_span.end());
            has_children[*n.parent] = true;
        }
    }
    // Constituency nodes cover exactly the union of their children's spans;
    // dependency-style nodes may add their own lexical token on top of it.
    // Either way a child index missing from the parent is a violation, and a
    // childless node must cover a single index.
    for (const auto& n : s.tree) {
        if (has_children.count(n.id)) {
            const auto& u = child_union[n.id];
            if (!std::includes(n.token_span.begin(), n.token_span.end(), u.begin(), u.end()))
                add("span-not-union-of-children", n.id);
        } else if (n.token_span.size() != 1) {
            add("leaf-span-not-single", n.id);
        }
    }
}

} // namespace detail

// Pure, idempotent. Violations are data, not failures.
inline ValidationReport validate(const Treebank& tb) {
    ValidationReport rep;
    std::set<std::string> ids;
    for (const auto& s : tb.sentences) {
        if (!ids.insert(s.id).second)
            rep.violations.push_back({s.id, "duplicate-sentence-id", ""});
        detail::validate_sentence(s, rep);
    }
    return rep;
}

struct InvalidTree : DataError {
    explicit InvalidTree(std::string msg) : DataError("InvalidTree", std::move(msg)) {}
};

// Surface order of the tokens covered by a tree. The span-set representation
// already fixes the order, but overlapping sibling spans (spans that are
// neither disjoint nor nested) mean the tree has no consistent leaf
// traversal and are rejected.
inline std::vector<Token> linearize(const std::vector<SyntaxNode>& tree,
                                    const std::vector<Token>& tokens) {
    for (size_t a = 0; a < tree.size(); ++a) {
        for (size_t b = a + 1; b < tree.size(); ++b) {
            const auto& x = tree[a].token_span;
            const auto& y = tree[b].token_span;
            std::set<int> inter;
            std::set_intersection(x.begin(), x.end(), y.begin(), y.end(),
                                  std::inserter(inter, inter.begin()));
            if (inter.empty()) continue;
            bool x_in_y = std::includes(y.begin(), y.end(), x.begin(), x.end());
            bool y_in_x = std::includes(x.begin(), x.end(), y.begin(), y.end());
            if (!x_in_y && !y_in_x)
                throw InvalidTree("overlapping spans: " + tree[a].id + " / " + tree[b].id);
        }
    }
    std::set<int> covered;
    for (const auto& n : tree) covered.insert(n.token_span.begin(), n.token_span.end());
    std::vector<Token> out;
    for (int i : covered) {
        if (i < 0 || i >= static_cast<int>(tokens.size()))
            throw InvalidTree("span index out of range: " + std::to_string(i));
        out.push_back(tokens[i]);
    }
    return out;
}

inline std::string surface(const std::vector<Token>& toks) {
    std::string s;
    for (const auto& t : toks) {
        if (!s.empty()) s += ' ';
        s += t.form;
    }
    return s;
}

} // namespace diachron
