#pragma once

// Parsers for the three source corpus formats: Penn-style bracketed
// constituency (with optional (ID ...) trailer), TIGER-XML node/edge
// fragments, and one-token-per-line tagged text. All parsers are pure and
// lossless: function tags stay whole, punctuation stays in, empty categories
// keep their source form.

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/errors.hpp"

namespace diachron {

struct UnbalancedBrackets : DataError {
    explicit UnbalancedBrackets(size_t pos)
        : DataError("UnbalancedBrackets", "at byte " + std::to_string(pos)), position(pos) {}
    size_t position;
};

struct EmptyLabel : DataError {
    explicit EmptyLabel(size_t pos)
        : DataError("EmptyLabel", "at byte " + std::to_string(pos)), position(pos) {}
    size_t position;
};

struct MalformedXml : DataError {
    explicit MalformedXml(std::string why) : DataError("MalformedXml", std::move(why)) {}
};

struct DanglingEdgeRef : DataError {
    explicit DanglingEdgeRef(std::string id)
        : DataError("DanglingEdgeRef", "idref " + id + " is not declared"), idref(std::move(id)) {}
    std::string idref;
};

using Meta = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Penn bracketed format
// ---------------------------------------------------------------------------

namespace penn_detail {

struct SExpr {
    bool is_atom = false;
    std::string atom;
    std::vector<SExpr> children;
    size_t pos = 0;
};

struct Lexer {
    const std::string& text;
    size_t i = 0;

    void skip_ws() {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    }
    bool done() {
        skip_ws();
        return i >= text.size();
    }
};

inline SExpr parse_group(Lexer& lx) {
    lx.skip_ws();
    size_t start = lx.i;
    if (lx.i >= lx.text.size() || lx.text[lx.i] != '(') throw UnbalancedBrackets(start);
    ++lx.i;
    SExpr g;
    g.pos = start;
    while (true) {
        lx.skip_ws();
        if (lx.i >= lx.text.size()) throw UnbalancedBrackets(start);
        char c = lx.text[lx.i];
        if (c == ')') {
            ++lx.i;
            return g;
        }
        if (c == '(') {
            g.children.push_back(parse_group(lx));
            continue;
        }
        SExpr a;
        a.is_atom = true;
        a.pos = lx.i;
        while (lx.i < lx.text.size() && !std::isspace(static_cast<unsigned char>(lx.text[lx.i])) &&
               lx.text[lx.i] != '(' && lx.text[lx.i] != ')')
            a.atom += lx.text[lx.i++];
        g.children.push_back(std::move(a));
    }
}

struct Builder {
    AnnotatedSentence& s;
    int next_node = 0;

    std::string build(const SExpr& g, const std::optional<std::string>& parent) {
        if (g.children.empty() || !g.children.front().is_atom) throw EmptyLabel(g.pos);
        SyntaxNode n;
        n.id = "n" + std::to_string(next_node++);
        n.label = g.children.front().atom;
        n.parent = parent;
        size_t self = s.tree.size();
        s.tree.push_back(n);
        for (size_t k = 1; k < g.children.size(); ++k) {
            const SExpr& ch = g.children[k];
            if (ch.is_atom) {
                Token t;
                t.index = static_cast<int>(s.tokens.size());
                t.form = ch.atom;
                t.pos = s.tree[self].label;  // preterminal label
                s.tree[self].token_span.insert(t.index);
                s.tokens.push_back(std::move(t));
            } else {
                std::string cid = build(ch, s.tree[self].id);
                const SyntaxNode* cn = s.node(cid);
                s.tree[self].token_span.insert(cn->token_span.begin(), cn->token_span.end());
            }
        }
        return s.tree[self].id;
    }
};

// propagate child spans upward once more (grand-descendant spans were added
// into parents as children finished, but a child finished before its own
// children only when nested; one fixpoint pass keeps it simple and right)
inline void close_spans(AnnotatedSentence& s) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& n : s.tree) {
            if (!n.parent) continue;
            for (auto& p : s.tree) {
                if (p.id != *n.parent) continue;
                size_t before = p.token_span.size();
                p.token_span.insert(n.token_span.begin(), n.token_span.end());
                if (p.token_span.size() != before) changed = true;
            }
        }
    }
}

} // namespace penn_detail

inline std::vector<AnnotatedSentence> parse_penn(const std::string& text, const Meta& meta = {}) {
    using namespace penn_detail;
    std::vector<AnnotatedSentence> out;
    Lexer lx{text};
    int auto_id = 0;
    while (!lx.done()) {
        SExpr top = parse_group(lx);
        AnnotatedSentence s;
        s.meta = meta;
        if (auto it = meta.find("text_id"); it != meta.end()) s.text_id = it->second;

        std::vector<const SExpr*> roots;
        std::optional<std::string> id;
        if (!top.children.empty() && top.children.front().is_atom) {
            roots.push_back(&top);  // "(X y)" form: the group is itself the root
        } else {
            for (const auto& ch : top.children) {
                if (ch.is_atom) throw EmptyLabel(ch.pos);
                if (ch.children.size() == 2 && ch.children[0].is_atom &&
                    ch.children[0].atom == "ID" && ch.children[1].is_atom) {
                    id = ch.children[1].atom;
                } else {
                    roots.push_back(&ch);
                }
            }
        }
        Builder b{s};
        for (const SExpr* r : roots) b.build(*r, std::nullopt);
        close_spans(s);
        s.id = id ? *id : (s.text_id.empty() ? "s" : s.text_id + ",") + std::to_string(++auto_id);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// TIGER-XML
// ---------------------------------------------------------------------------

namespace xml_detail {

struct XmlElement {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlElement> children;

    std::optional<std::string> attr(const std::string& k) const {
        for (const auto& [a, v] : attrs)
            if (a == k) return v;
        return std::nullopt;
    }
};

struct XmlParser {
    const std::string& text;
    size_t i = 0;

    void error(const std::string& why) const {
        throw MalformedXml(why + " at byte " + std::to_string(i));
    }
    void skip_ws() {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    }
    bool starts_with(const char* s) const {
        return text.compare(i, std::string::traits_type::length(s), s) == 0;
    }
    void skip_misc() {
        // prolog, comments, processing instructions, doctype, stray text
        while (i < text.size()) {
            skip_ws();
            if (starts_with("<!--")) {
                size_t e = text.find("-->", i);
                if (e == std::string::npos) error("unterminated comment");
                i = e + 3;
            } else if (starts_with("<?")) {
                size_t e = text.find("?>", i);
                if (e == std::string::npos) error("unterminated processing instruction");
                i = e + 2;
            } else if (starts_with("<!")) {
                size_t e = text.find('>', i);
                if (e == std::string::npos) error("unterminated declaration");
                i = e + 1;
            } else if (i < text.size() && text[i] != '<') {
                ++i;  // character data is not meaningful in this format
            } else {
                break;
            }
        }
    }
    std::string name_token() {
        size_t start = i;
        while (i < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_' ||
                text[i] == '-' || text[i] == ':' || text[i] == '.'))
            ++i;
        if (i == start) error("expected name");
        return text.substr(start, i - start);
    }
    static std::string decode_entities(const std::string& v, size_t where) {
        std::string out;
        for (size_t k = 0; k < v.size(); ++k) {
            if (v[k] != '&') {
                out += v[k];
                continue;
            }
            size_t semi = v.find(';', k);
            if (semi == std::string::npos) throw MalformedXml("bad entity at byte " + std::to_string(where));
            std::string ent = v.substr(k + 1, semi - k - 1);
            if (ent == "amp") out += '&';
            else if (ent == "lt") out += '<';
            else if (ent == "gt") out += '>';
            else if (ent == "quot") out += '"';
            else if (ent == "apos") out += '\'';
            else if (!ent.empty() && ent[0] == '#') {
                int code = std::stoi(ent.substr(ent[1] == 'x' || ent[1] == 'X' ? 2 : 1), nullptr,
                                     ent[1] == 'x' || ent[1] == 'X' ? 16 : 10);
                // UTF-8 encode
                if (code < 0x80) out += static_cast<char>(code);
                else if (code < 0x800) {
                    out += static_cast<char>(0xC0 | (code >> 6));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                } else {
                    out += static_cast<char>(0xE0 | (code >> 12));
                    out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                    out += static_cast<char>(0x80 | (code & 0x3F));
                }
            } else {
                throw MalformedXml("unknown entity &" + ent + ";");
            }
            k = semi;
        }
        return out;
    }

    XmlElement element() {
        skip_misc();
        if (i >= text.size() || text[i] != '<') error("expected element");
        ++i;
        XmlElement el;
        el.name = name_token();
        while (true) {
            skip_ws();
            if (i >= text.size()) error("unterminated tag");
            if (text[i] == '/') {
                if (i + 1 >= text.size() || text[i + 1] != '>') error("bad empty-element tag");
                i += 2;
                return el;  // self-closing
            }
            if (text[i] == '>') {
                ++i;
                break;
            }
            std::string an = name_token();
            skip_ws();
            if (i >= text.size() || text[i] != '=') error("expected '='");
            ++i;
            skip_ws();
            if (i >= text.size() || (text[i] != '"' && text[i] != '\'')) error("expected quote");
            char q = text[i++];
            size_t vs = i;
            while (i < text.size() && text[i] != q) ++i;
            if (i >= text.size()) error("unterminated attribute value");
            el.attrs.emplace_back(an, decode_entities(text.substr(vs, i - vs), vs));
            ++i;
        }
        // content until matching close tag
        while (true) {
            skip_misc();
            if (i >= text.size()) error("missing </" + el.name + ">");
            if (starts_with("</")) {
                i += 2;
                std::string cn = name_token();
                skip_ws();
                if (cn != el.name) error("mismatched close tag </" + cn + ">");
                if (i >= text.size() || text[i] != '>') error("expected '>'");
                ++i;
                return el;
            }
            el.children.push_back(element());
        }
    }

    std::vector<XmlElement> parse_all() {
        std::vector<XmlElement> out;
        while (true) {
            skip_misc();
            if (i >= text.size()) break;
            out.push_back(element());
        }
        return out;
    }
};

} // namespace xml_detail

namespace tiger_detail {

using xml_detail::XmlElement;

inline void collect_lexical(const XmlElement& el, std::vector<const XmlElement*>& out) {
    if (el.name == "t" || el.name == "nt") out.push_back(&el);
    for (const auto& ch : el.children) collect_lexical(ch, out);
}

inline AnnotatedSentence build_sentence(const std::vector<const XmlElement*>& els,
                                        const std::string& sid, const Meta& meta) {
    AnnotatedSentence s;
    s.id = sid;
    s.meta = meta;
    if (auto it = meta.find("text_id"); it != meta.end()) s.text_id = it->second;

    std::map<std::string, int> token_of_decl;   // declared id -> token index
    std::map<std::string, size_t> node_of;      // nt id -> tree index
    int anon = 0;

    // first pass: create tokens (document order) and nodes
    for (const XmlElement* el : els) {
        std::string id = el->attr("id").value_or("x" + std::to_string(anon++));
        if (el->name == "t") {
            Token t;
            t.index = static_cast<int>(s.tokens.size());
            t.form = el->attr("word").value_or(el->attr("form").value_or(""));
            if (auto v = el->attr("lemma")) t.lemma = *v;
            if (auto v = el->attr("pos")) t.pos = *v;
            token_of_decl[id] = t.index;
            s.tokens.push_back(std::move(t));
        } else {  // nt
            SyntaxNode n;
            n.id = id;
            n.label = el->attr("cat").value_or(el->attr("pos").value_or("--"));
            if (el->attr("word")) {
                Token t;
                t.index = static_cast<int>(s.tokens.size());
                t.form = *el->attr("word");
                if (auto v = el->attr("lemma")) t.lemma = *v;
                if (auto v = el->attr("pos")) t.pos = *v;
                std::string morph;
                for (const auto& [k, v] : el->attrs) {
                    if (k == "id" || k == "lemma" || k == "pos" || k == "word") continue;
                    if (!morph.empty()) morph += '|';
                    morph += k + "=" + v;
                }
                if (!morph.empty()) t.morph = morph;
                n.token_span.insert(t.index);
                s.tokens.push_back(std::move(t));
            }
            node_of[n.id] = s.tree.size();
            s.tree.push_back(std::move(n));
        }
    }

    // second pass: edges. An idref either names a declared nt (child link),
    // a declared t (the node covers that token), or (PROIEL fragments)
    // the node's own terminal, undeclared but sharing the node id's numeric
    // part ("p766469" declares its word, edges point at "w766469").
    auto digits = [](const std::string& v) {
        size_t k = 0;
        while (k < v.size() && !std::isdigit(static_cast<unsigned char>(v[k]))) ++k;
        return v.substr(k);
    };
    for (const XmlElement* el : els) {
        if (el->name != "nt") continue;
        std::string id = el->attr("id").value_or("");
        size_t self = node_of.at(id);
        for (const auto& ch : el->children) {
            if (ch.name != "edge") continue;
            auto idref = ch.attr("idref");
            if (!idref) throw MalformedXml("edge without idref");
            auto label = ch.attr("label");
            if (auto nit = node_of.find(*idref); nit != node_of.end()) {
                s.tree[nit->second].parent = s.tree[self].id;
                if (label && *label != "--") s.tree[nit->second].edge_label = *label;
            } else if (auto tit = token_of_decl.find(*idref); tit != token_of_decl.end()) {
                s.tree[self].token_span.insert(tit->second);
            } else if (!s.tree[self].token_span.empty() && !digits(id).empty() &&
                       digits(id) == digits(*idref)) {
                // own-terminal link, token already created from the word attr
            } else {
                throw DanglingEdgeRef(*idref);
            }
        }
    }

    // spans: union of descendants, to fixpoint
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& n : s.tree) {
            if (!n.parent) continue;
            auto pit = node_of.find(*n.parent);
            if (pit == node_of.end()) continue;
            auto& p = s.tree[pit->second];
            size_t before = p.token_span.size();
            p.token_span.insert(n.token_span.begin(), n.token_span.end());
            if (p.token_span.size() != before) changed = true;
        }
    }
    return s;
}

inline void collect_sentences(const XmlElement& el, std::vector<const XmlElement*>& out) {
    if (el.name == "s") {
        out.push_back(&el);
        return;
    }
    for (const auto& ch : el.children) collect_sentences(ch, out);
}

} // namespace tiger_detail

inline std::vector<AnnotatedSentence> parse_tiger_xml(const std::string& text,
                                                      const Meta& meta = {}) {
    xml_detail::XmlParser p{text};
    std::vector<xml_detail::XmlElement> tops = p.parse_all();

    std::vector<const xml_detail::XmlElement*> sents;
    for (const auto& el : tops) tiger_detail::collect_sentences(el, sents);

    std::vector<AnnotatedSentence> out;
    if (sents.empty()) {
        // a bare fragment of nt/t elements is one sentence
        std::vector<const xml_detail::XmlElement*> lex;
        for (const auto& el : tops) tiger_detail::collect_lexical(el, lex);
        if (!lex.empty() || !tops.empty())
            out.push_back(tiger_detail::build_sentence(lex, "s1", meta));
    } else {
        int n = 0;
        for (const auto* sel : sents) {
            std::vector<const xml_detail::XmlElement*> lex;
            for (const auto& ch : sel->children) tiger_detail::collect_lexical(ch, lex);
            std::string sid = sel->attr("id").value_or("s" + std::to_string(++n));
            out.push_back(tiger_detail::build_sentence(lex, sid, meta));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// One token per line: form [pos [pos2 [extra...]]]; blank line ends a sentence
// ---------------------------------------------------------------------------

inline std::vector<AnnotatedSentence> parse_token_lines(const std::string& text,
                                                        const Meta& meta = {}) {
    std::vector<AnnotatedSentence> out;
    AnnotatedSentence cur;
    int n = 0;
    auto flush = [&]() {
        if (cur.tokens.empty()) return;
        cur.id = "s" + std::to_string(++n);
        cur.meta = meta;
        if (auto it = meta.find("text_id"); it != meta.end()) cur.text_id = it->second;
        out.push_back(std::move(cur));
        cur = AnnotatedSentence{};
    };
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cols;
        size_t k = 0;
        while (k < line.size()) {
            while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
            size_t st = k;
            while (k < line.size() && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
            if (k > st) cols.push_back(line.substr(st, k - st));
        }
        if (cols.empty()) {
            flush();
        } else {
            Token t;
            t.index = static_cast<int>(cur.tokens.size());
            t.form = cols[0];
            if (cols.size() > 1) t.pos = cols[1];
            if (cols.size() > 2) t.pos2 = cols[2];
            if (cols.size() > 3) {
                std::string extra;
                for (size_t c = 3; c < cols.size(); ++c) {
                    if (!extra.empty()) extra += '|';
                    extra += cols[c];
                }
                t.morph = extra;
            }
            cur.tokens.push_back(std::move(t));
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    flush();
    return out;
}

} // namespace diachron
