#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "diachron/corpus.hpp"
#include "diachron/jsonl.hpp"

using namespace diachron;

namespace {

AnnotatedSentence simple_sentence() {
    AnnotatedSentence s;
    s.id = "s1";
    s.text_id = "t1";
    s.tokens = {{0, "Li", {}, "D", {}, {}}, {1, "reis", {}, "NCS", {}, {}}};
    SyntaxNode np{"n0", "NP-SBJ", {}, {}, {0, 1}};
    SyntaxNode d{"n1", "D", {}, std::string("n0"), {0}};
    SyntaxNode n{"n2", "NCS", {}, std::string("n0"), {1}};
    s.tree = {np, d, n};
    return s;
}

// random valid tree over n tokens: recursively split the index range
void grow(std::mt19937_64& rng, AnnotatedSentence& s, int lo, int hi,
          const std::optional<std::string>& parent) {
    SyntaxNode node;
    node.id = "n" + std::to_string(s.tree.size());
    node.label = "X" + std::to_string(s.tree.size());
    node.parent = parent;
    for (int i = lo; i < hi; ++i) node.token_span.insert(i);
    s.tree.push_back(node);
    std::string id = node.id;
    if (hi - lo <= 1) return;
    if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) return;  // leave flat
    int mid = std::uniform_int_distribution<int>(lo + 1, hi - 1)(rng);
    grow(rng, s, lo, mid, id);
    grow(rng, s, mid, hi, id);
}

} // namespace

TEST_CASE("validate: well-formed treebank yields empty report") {
    Treebank tb;
    tb.sentences = {simple_sentence()};
    auto rep = validate(tb);
    CHECK(rep.ok());
    // idempotent and pure
    CHECK(validate(tb).violations.size() == rep.violations.size());
}

TEST_CASE("validate: dangling parent id") {
    Treebank tb;
    auto s = simple_sentence();
    s.tree[1].parent = "missing";
    tb.sentences = {s};
    auto rep = validate(tb);
    bool found = false;
    for (auto& v : rep.violations)
        if (v.rule == "dangling-parent") found = true;
    CHECK(found);
}

TEST_CASE("validate: span out of range") {
    Treebank tb;
    AnnotatedSentence s;
    s.id = "s1";
    s.tokens = {{0, "a", {}, {}, {}, {}}, {1, "b", {}, {}, {}, {}}, {2, "c", {}, {}, {}, {}}};
    s.tree = {{"n0", "NP", {}, {}, {7}}};
    tb.sentences = {s};
    auto rep = validate(tb);
    REQUIRE_FALSE(rep.ok());
    bool found = false;
    for (auto& v : rep.violations)
        if (v.rule == "span-out-of-range") found = true;
    CHECK(found);
}

TEST_CASE("validate: duplicate sentence ids") {
    Treebank tb;
    tb.sentences = {simple_sentence(), simple_sentence()};
    auto rep = validate(tb);
    bool found = false;
    for (auto& v : rep.violations)
        if (v.rule == "duplicate-sentence-id") found = true;
    CHECK(found);
}

TEST_CASE("linearize: single leaf") {
    std::vector<Token> toks = {{0, "y", {}, "X", {}, {}}};
    std::vector<SyntaxNode> tree = {{"n0", "X", {}, {}, {0}}};
    auto out = linearize(tree, toks);
    REQUIRE(out.size() == 1);
    CHECK(out[0].form == "y");
}

TEST_CASE("linearize: identity on token order for random valid trees") {
    std::mt19937_64 rng(20260810);
    for (int rep = 0; rep < 100; ++rep) {
        AnnotatedSentence s;
        int n = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < n; ++i)
            s.tokens.push_back({i, "w" + std::to_string(i), {}, {}, {}, {}});
        grow(rng, s, 0, n, std::nullopt);
        auto out = linearize(s.tree, s.tokens);
        REQUIRE(out.size() == static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) CHECK(out[i].index == i);
    }
}

TEST_CASE("linearize: rejects non-hierarchical overlap") {
    std::vector<Token> toks = {{0, "a", {}, {}, {}, {}},
                               {1, "b", {}, {}, {}, {}},
                               {2, "c", {}, {}, {}, {}}};
    std::vector<SyntaxNode> tree = {{"n0", "A", {}, {}, {0, 1}}, {"n1", "B", {}, {}, {1, 2}}};
    CHECK_THROWS_AS(linearize(tree, toks), InvalidTree);
}

TEST_CASE("unified format round trip is structural identity") {
    Treebank tb;
    tb.sentences = {simple_sentence()};
    tb.sentences[0].meta = {{"author", "anon"}, {"date_median", "-50"}};
    std::string once = write_unified(tb.sentences);
    auto back = read_unified(once);
    std::string twice = write_unified(back);
    CHECK(once == twice);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == "s1");
    CHECK(back[0].tokens.size() == 2);
    CHECK(back[0].tree.size() == 3);
    CHECK(back[0].meta.at("date_median") == "-50");
}

TEST_CASE("read_unified: malformed line reports line number") {
    try {
        read_unified("{\"id\":\"a\",\"text_id\":\"t\",\"tokens\":[]}\nnot json\n");
        FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
        CHECK(e.line_number == 2);
    }
}

TEST_CASE("write_unified: zero sentences give empty output") {
    CHECK(write_unified({}).empty());
}
