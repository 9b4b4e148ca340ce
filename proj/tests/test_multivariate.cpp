#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "diachron/ca.hpp"
#include "diachron/citree.hpp"
#include "diachron/cluster.hpp"
#include "diachron/forest.hpp"
#include "diachron/glm.hpp"

using namespace diachron;

namespace {

// 4 periods x 5 subject-patterns and 4 periods x 8 other-constituent patterns
Matrix table_periods_by_spatterns() {
    return Matrix::from_rows({{5, 0, 33, 3, 0},
                              {1, 2, 22, 7, 2},
                              {3, 2, 20, 19, 1},
                              {2, 0, 12, 7, 1}});
}
Matrix table_periods_by_xpatterns() {
    return Matrix::from_rows({{40, 1, 1, 1, 32, 1, 0, 0},
                              {251, 14, 7, 10, 207, 16, 13, 14},
                              {36, 21, 1, 0, 74, 23, 11, 0},
                              {171, 19, 7, 3, 392, 106, 23, 17}});
}

Matrix row_proportions(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (size_t i = 0; i < m.rows(); ++i) {
        double s = 0;
        for (size_t j = 0; j < m.cols(); ++j) s += m(i, j);
        for (size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / s;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// correspondence analysis
// ---------------------------------------------------------------------------

TEST_CASE("ca: independence table has zero inertia") {
    // outer product of margins
    Matrix m(3, 4);
    double r[3] = {2, 3, 5}, c[4] = {1, 2, 3, 4};
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 4; ++j) m(i, j) = r[i] * c[j];
    auto sol = correspondence_analysis(m);
    CHECK(sol.total_inertia == Catch::Approx(0.0).margin(1e-12));
    for (double s : sol.inertia_share) CHECK(s == 0.0);
}

TEST_CASE("ca: period-by-pattern shares match the published figure") {
    auto sol = correspondence_analysis(row_proportions(table_periods_by_spatterns()));
    REQUIRE(sol.inertia_share.size() == 3);
    CHECK(sol.inertia_share[0] == Catch::Approx(0.6996).margin(0.002));
    CHECK(sol.inertia_share[1] == Catch::Approx(0.2366).margin(0.002));
    // raw counts give a different decomposition (frozen external value)
    auto raw = correspondence_analysis(table_periods_by_spatterns());
    CHECK(raw.inertia_share[0] == Catch::Approx(0.7523).margin(0.002));
    CHECK(raw.inertia_share[1] == Catch::Approx(0.2004).margin(0.002));
}

TEST_CASE("ca: two leading dimensions dominate the 8-pattern table") {
    auto sol = correspondence_analysis(row_proportions(table_periods_by_xpatterns()));
    CHECK(sol.inertia_share[0] + sol.inertia_share[1] >= 0.93);
    CHECK(sol.inertia_share[0] + sol.inertia_share[1] == Catch::Approx(0.9476).margin(0.003));
}

TEST_CASE("ca: invariants (share sum, chi-square link, centered rows)") {
    std::mt19937_64 rng(314);
    for (int rep = 0; rep < 20; ++rep) {
        size_t r = std::uniform_int_distribution<size_t>(2, 6)(rng);
        size_t c = std::uniform_int_distribution<size_t>(2, 6)(rng);
        Matrix m(r, c);
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j)
                m(i, j) = std::uniform_int_distribution<int>(1, 50)(rng);
        auto sol = correspondence_analysis(m);
        double share_sum = 0;
        for (double s : sol.inertia_share) share_sum += s;
        CHECK(share_sum == Catch::Approx(1.0).margin(1e-9));
        // total inertia * N = chi-square statistic
        double N = m.sum();
        CHECK(sol.total_inertia * N == Catch::Approx(chi_square(m).stat).margin(1e-6));
        // mass-weighted row centroid at the origin
        for (size_t k = 0; k < sol.inertia_share.size(); ++k) {
            double cen = 0;
            for (size_t i = 0; i < r; ++i) cen += sol.row_mass[i] * sol.row_coords(i, k);
            CHECK(cen == Catch::Approx(0.0).margin(1e-9));
        }
    }
}

TEST_CASE("ca: degenerate inputs") {
    CHECK_THROWS_AS(correspondence_analysis(Matrix(1, 4, 1.0)), DegenerateRank);
    Matrix zm(2, 2);
    zm(0, 0) = 1;  // second column margin is zero
    zm(1, 0) = 2;
    CHECK_THROWS_AS(correspondence_analysis(zm), ZeroMargin);
}

TEST_CASE("ca: axis signs are canonical") {
    auto a = correspondence_analysis(table_periods_by_spatterns());
    for (size_t k = 0; k < a.inertia_share.size(); ++k) {
        double lead = 0;
        for (size_t i = 0; i < a.row_coords.rows() && lead == 0; ++i)
            if (std::abs(a.row_coords(i, k)) > 1e-12) lead = a.row_coords(i, k);
        CHECK(lead >= 0);
    }
}

// ---------------------------------------------------------------------------
// hierarchical clustering
// ---------------------------------------------------------------------------

namespace hc_oracle {

// naive agglomerator recomputing cluster dissimilarity from raw members
struct Result {
    std::vector<Merge> merges;
};

double dist2(const Matrix& pts, int a, int b) {
    double s = 0;
    for (size_t k = 0; k < pts.cols(); ++k) {
        double d = pts(a, k) - pts(b, k);
        s += d * d;
    }
    return s;
}

double cluster_cost(const Matrix& pts, const std::vector<int>& A, const std::vector<int>& B,
                    Linkage link) {
    if (link == Linkage::Ward) {
        // 2 |A||B|/(|A|+|B|) * ||mean_A - mean_B||^2
        std::vector<double> ma(pts.cols(), 0), mb(pts.cols(), 0);
        for (int i : A)
            for (size_t k = 0; k < pts.cols(); ++k) ma[k] += pts(i, k);
        for (int i : B)
            for (size_t k = 0; k < pts.cols(); ++k) mb[k] += pts(i, k);
        double d = 0;
        for (size_t k = 0; k < pts.cols(); ++k) {
            double diff = ma[k] / A.size() - mb[k] / B.size();
            d += diff * diff;
        }
        double na = A.size(), nb = B.size();
        return 2.0 * na * nb / (na + nb) * d;
    }
    double best = link == Linkage::Single ? 1e300 : -1e300;
    for (int a : A)
        for (int b : B) {
            double d = std::sqrt(dist2(pts, a, b));
            if (link == Linkage::Single) best = std::min(best, d);
            else best = std::max(best, d);
        }
    return best;
}

Result run(const Matrix& pts, Linkage link) {
    size_t n = pts.rows();
    std::vector<std::vector<int>> clusters(n);
    std::vector<int> ids(n);
    for (size_t i = 0; i < n; ++i) {
        clusters[i] = {static_cast<int>(i)};
        ids[i] = static_cast<int>(i);
    }
    Result res;
    int next = static_cast<int>(n);
    while (clusters.size() > 1) {
        size_t bi = 0, bj = 1;
        double best = 1e300;
        for (size_t i = 0; i < clusters.size(); ++i)
            for (size_t j = i + 1; j < clusters.size(); ++j) {
                double c = cluster_cost(pts, clusters[i], clusters[j], link);
                if (c < best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        res.merges.push_back({ids[bi], ids[bj], best});
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        ids[bi] = next++;
        clusters.erase(clusters.begin() + static_cast<long>(bj));
        ids.erase(ids.begin() + static_cast<long>(bj));
    }
    return res;
}

} // namespace hc_oracle

TEST_CASE("hclust: two identical points merge at height zero") {
    Matrix pts(2, 1);
    pts(0, 0) = pts(1, 0) = 3.5;
    for (auto link : {Linkage::Single, Linkage::Complete, Linkage::Ward}) {
        auto d = hclust(pts, link);
        REQUIRE(d.merges.size() == 1);
        CHECK(d.merges[0].height == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("hclust: top split separates two well-separated blobs") {
    std::mt19937_64 rng(808);
    Matrix pts(20, 2);
    for (int i = 0; i < 20; ++i) {
        double cx = i < 10 ? 0.0 : 50.0;
        pts(i, 0) = cx + std::normal_distribution<double>(0, 1)(rng);
        pts(i, 1) = std::normal_distribution<double>(0, 1)(rng);
    }
    for (auto link : {Linkage::Single, Linkage::Complete, Linkage::Ward}) {
        auto d = hclust(pts, link);
        auto cut = d.cut(2);
        for (int i = 1; i < 10; ++i) CHECK(cut[i] == cut[0]);
        for (int i = 11; i < 20; ++i) CHECK(cut[i] == cut[10]);
        CHECK(cut[0] != cut[10]);
    }
}

TEST_CASE("hclust: merges equal the naive agglomerator oracle") {
    std::mt19937_64 rng(220);
    for (int rep = 0; rep < 30; ++rep) {
        Matrix pts(5, 2);
        for (int i = 0; i < 5; ++i) {
            pts(i, 0) = std::uniform_real_distribution<double>(0, 10)(rng);
            pts(i, 1) = std::uniform_real_distribution<double>(0, 10)(rng);
        }
        for (auto link : {Linkage::Single, Linkage::Complete, Linkage::Ward}) {
            auto got = hclust(pts, link);
            auto want = hc_oracle::run(pts, link);
            REQUIRE(got.merges.size() == want.merges.size());
            for (size_t k = 0; k < got.merges.size(); ++k) {
                CHECK(std::min(got.merges[k].left, got.merges[k].right) ==
                      std::min(want.merges[k].left, want.merges[k].right));
                CHECK(std::max(got.merges[k].left, got.merges[k].right) ==
                      std::max(want.merges[k].left, want.merges[k].right));
                CHECK(got.merges[k].height == Catch::Approx(want.merges[k].height).margin(1e-9));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// variability-based neighbor clustering
// ---------------------------------------------------------------------------

namespace vnc_oracle {

// same greedy criterion, recomputed from the raw series at every step with a
// full scan over adjacent-merge candidates (no incremental state)
std::vector<Merge> run(const std::vector<double>& series) {
    size_t n = series.size();
    std::vector<std::pair<int, std::pair<int, int>>> segs;  // id, [lo, hi)
    for (size_t i = 0; i < n; ++i)
        segs.push_back({static_cast<int>(i), {static_cast<int>(i), static_cast<int>(i + 1)}});
    auto sd = [&](int lo, int hi) {
        double mean = 0;
        for (int i = lo; i < hi; ++i) mean += series[i];
        mean /= (hi - lo);
        double var = 0;
        for (int i = lo; i < hi; ++i) var += (series[i] - mean) * (series[i] - mean);
        return hi - lo > 1 ? std::sqrt(var / (hi - lo - 1)) : 0.0;
    };
    std::vector<Merge> out;
    int next = static_cast<int>(n);
    while (segs.size() > 1) {
        size_t best_i = 0;
        double best = 1e300;
        for (size_t i = 0; i + 1 < segs.size(); ++i) {
            double c = sd(segs[i].second.first, segs[i + 1].second.second);
            if (c < best) {
                best = c;
                best_i = i;
            }
        }
        out.push_back({segs[best_i].first, segs[best_i + 1].first, best});
        segs[best_i] = {next++, {segs[best_i].second.first, segs[best_i + 1].second.second}};
        segs.erase(segs.begin() + static_cast<long>(best_i) + 1);
    }
    return out;
}

} // namespace vnc_oracle

TEST_CASE("vnc: designed break between the two plateaus") {
    std::vector<std::vector<double>> series = {{1}, {1}, {1}, {9}, {9}, {9}};
    auto d = vnc(series);
    REQUIRE(d.merges.size() == 5);
    // final merge joins the two halves
    auto cut = d.cut(2);
    CHECK(cut == std::vector<int>{0, 0, 0, 1, 1, 1});
    // full merge sequence matches the from-scratch oracle
    auto want = vnc_oracle::run({1, 1, 1, 9, 9, 9});
    for (size_t k = 0; k < want.size(); ++k) {
        CHECK(std::min(d.merges[k].left, d.merges[k].right) ==
              std::min(want[k].left, want[k].right));
        CHECK(d.merges[k].height == Catch::Approx(want[k].height).margin(1e-12));
    }
}

TEST_CASE("vnc: matches oracle on random series") {
    std::mt19937_64 rng(606);
    for (int rep = 0; rep < 50; ++rep) {
        int n = std::uniform_int_distribution<int>(2, 9)(rng);
        std::vector<double> flat(n);
        std::vector<std::vector<double>> series(n);
        for (int i = 0; i < n; ++i) {
            flat[i] = std::uniform_real_distribution<double>(0, 10)(rng);
            series[i] = {flat[i]};
        }
        auto got = vnc(series);
        auto want = vnc_oracle::run(flat);
        REQUIRE(got.merges.size() == want.size());
        for (size_t k = 0; k < want.size(); ++k) {
            CHECK(got.merges[k].left == want[k].left);
            CHECK(got.merges[k].right == want[k].right);
            CHECK(got.merges[k].height == Catch::Approx(want[k].height).margin(1e-12));
        }
    }
}

TEST_CASE("vnc: constant series merges at height zero") {
    std::vector<std::vector<double>> series(5, std::vector<double>{4.2});
    auto d = vnc(series);
    for (const auto& m : d.merges) CHECK(m.height == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("vnc: reversing time mirrors the dendrogram") {
    std::vector<std::vector<double>> series = {{1}, {2}, {7}, {8.5}, {20}};
    std::vector<std::vector<double>> rev(series.rbegin(), series.rend());
    auto d1 = vnc(series);
    auto d2 = vnc(rev);
    int n = static_cast<int>(series.size());
    // the set of (cluster membership, height) pairs must be mirror images;
    // the merge order itself may differ when costs tie
    auto m1 = d1.membership(), m2 = d2.membership();
    std::set<std::pair<std::vector<int>, double>> s1, s2;
    for (size_t k = 0; k < d1.merges.size(); ++k) {
        s1.insert({m1[n + k], std::round(d1.merges[k].height * 1e9)});
        std::vector<int> mirrored;
        for (int leaf : m2[n + k]) mirrored.push_back(n - 1 - leaf);
        std::sort(mirrored.begin(), mirrored.end());
        s2.insert({mirrored, std::round(d2.merges[k].height * 1e9)});
    }
    CHECK(s1 == s2);
}

TEST_CASE("vnc: only adjacent clusters merge; order matters") {
    std::mt19937_64 rng(7070);
    for (int rep = 0; rep < 20; ++rep) {
        int n = std::uniform_int_distribution<int>(3, 8)(rng);
        std::vector<std::vector<double>> series(n);
        for (int i = 0; i < n; ++i)
            series[i] = {std::uniform_real_distribution<double>(0, 10)(rng)};
        auto d = vnc(series);
        auto mem = d.membership();
        for (size_t c = n; c < mem.size(); ++c) {
            // contiguous member range
            for (size_t i = 1; i < mem[c].size(); ++i) CHECK(mem[c][i] == mem[c][i - 1] + 1);
        }
    }
    // swapping non-adjacent elements changes the tree: no hidden global sort
    auto a = vnc({{1}, {9}, {1.1}, {9.1}});
    auto b = vnc({{1}, {1.1}, {9}, {9.1}});
    bool same = true;
    for (size_t k = 0; k < a.merges.size(); ++k)
        if (a.merges[k].left != b.merges[k].left || a.merges[k].right != b.merges[k].right)
            same = false;
    CHECK_FALSE(same);
}

// ---------------------------------------------------------------------------
// conditional inference tree
// ---------------------------------------------------------------------------

namespace {

FactorTable noise_table(std::mt19937_64& rng, int n) {
    FactorTable t;
    std::vector<std::string> y(n), a(n), b(n), c(n);
    const char* al[] = {"x", "y", "z"};
    for (int i = 0; i < n; ++i) {
        y[i] = std::uniform_int_distribution<int>(0, 1)(rng) ? "VO" : "OV";
        a[i] = al[std::uniform_int_distribution<int>(0, 2)(rng)];
        b[i] = std::uniform_int_distribution<int>(0, 1)(rng) ? "p" : "q";
        c[i] = std::to_string(std::uniform_real_distribution<double>(0, 1)(rng));
    }
    t.add_column("order", CellType::Categorical, y);
    t.add_column("a", CellType::Categorical, a);
    t.add_column("b", CellType::Categorical, b);
    t.add_column("c", CellType::Real, c);
    return t;
}

} // namespace

TEST_CASE("citree: single-row table is a leaf") {
    FactorTable t;
    t.add_column("order", CellType::Categorical, {"OV"});
    t.add_column("a", CellType::Categorical, {"x"});
    auto tree = citree(t, "order", {"a"}, {0.05, 99, 20, 1});
    CHECK(tree.root->is_leaf);
    CHECK(tree.root->n == 1);
}

TEST_CASE("citree: a perfectly predictive factor splits the root with tiny p") {
    std::mt19937_64 rng(11);
    int n = 200;
    FactorTable t;
    std::vector<std::string> y(n), a(n), b(n);
    for (int i = 0; i < n; ++i) {
        bool vo = std::uniform_int_distribution<int>(0, 1)(rng);
        y[i] = vo ? "VO" : "OV";
        a[i] = vo ? "post" : "pre";  // deterministic
        b[i] = std::uniform_int_distribution<int>(0, 1)(rng) ? "p" : "q";
    }
    t.add_column("order", CellType::Categorical, y);
    t.add_column("position", CellType::Categorical, a);
    t.add_column("noise", CellType::Categorical, b);
    auto tree = citree(t, "order", {"position", "noise"}, {0.05, 1999, 20, 7});
    REQUIRE_FALSE(tree.root->is_leaf);
    CHECK(tree.root->predictor == "position");
    CHECK(tree.root->p_adjusted < 0.001 + 1e-9);
    // children are pure
    CHECK(tree.root->left->response_counts.size() == 1);
    CHECK(tree.root->right->response_counts.size() == 1);
}

TEST_CASE("citree: numeric predictor splits by threshold") {
    int n = 300;
    FactorTable t;
    std::vector<std::string> y(n), x(n), z(n);
    std::mt19937_64 rng(17);
    for (int i = 0; i < n; ++i) {
        double v = std::uniform_real_distribution<double>(0, 1)(rng);
        x[i] = std::to_string(v);
        y[i] = v < 0.5 ? "OV" : "VO";
        z[i] = std::uniform_int_distribution<int>(0, 1)(rng) ? "m" : "f";
    }
    t.add_column("order", CellType::Categorical, y);
    t.add_column("date", CellType::Real, x);
    t.add_column("noise", CellType::Categorical, z);
    auto tree = citree(t, "order", {"date", "noise"}, {0.05, 999, 20, 3});
    REQUIRE_FALSE(tree.root->is_leaf);
    CHECK(tree.root->predictor == "date");
    CHECK(tree.root->numeric_split);
    CHECK(tree.root->threshold == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("citree: null data keeps the root a leaf in at least 90% of replicates") {
    int split = 0;
    const int R = 200;
    for (int rep = 0; rep < R; ++rep) {
        std::mt19937_64 rng(42000 + rep);
        auto t = noise_table(rng, 400);
        auto tree = citree(t, "order", {"a", "b", "c"},
                           {0.05, 199, 20, static_cast<std::uint64_t>(rep)});
        if (!tree.root->is_leaf) ++split;
    }
    double rate = static_cast<double>(split) / R;
    CHECK(rate <= 0.05 + 0.03);
    CHECK(rate <= 0.10);
}

TEST_CASE("citree: min_node stops recursion") {
    std::mt19937_64 rng(5);
    auto t = noise_table(rng, 10);
    auto tree = citree(t, "order", {"a", "b"}, {0.05, 99, 20, 1});
    CHECK(tree.root->is_leaf);  // n < min_node, no test even attempted
}

// ---------------------------------------------------------------------------
// random forest importance
// ---------------------------------------------------------------------------

TEST_CASE("rf: deterministic given the seed") {
    std::mt19937_64 rng(808);
    auto t = noise_table(rng, 200);
    ForestConfig cfg{50, 0, 5, 99, 1};
    auto r1 = rf_importance(t, "order", {"a", "b", "c"}, cfg);
    auto r2 = rf_importance(t, "order", {"a", "b", "c"}, cfg);
    REQUIRE(r1.importance.size() == r2.importance.size());
    for (size_t i = 0; i < r1.importance.size(); ++i)
        CHECK(r1.importance[i] == r2.importance[i]);  // bit identical
    CHECK(r1.threshold == r2.threshold);
    // and thread count does not change the result
    ForestConfig cfg2{50, 0, 5, 99, 2};
    auto r3 = rf_importance(t, "order", {"a", "b", "c"}, cfg2);
    for (size_t i = 0; i < r1.importance.size(); ++i)
        CHECK(r1.importance[i] == r3.importance[i]);
}

TEST_CASE("rf: noise importance near zero, deterministic predictor dominates") {
    std::mt19937_64 rng(9009);
    int n = 300;
    FactorTable t;
    std::vector<std::string> y(n), signal(n), noise1(n), noise2(n);
    for (int i = 0; i < n; ++i) {
        bool vo = std::uniform_int_distribution<int>(0, 1)(rng);
        y[i] = vo ? "VO" : "OV";
        signal[i] = vo ? "post" : "pre";
        noise1[i] = std::uniform_int_distribution<int>(0, 2)(rng) == 0 ? "a" : "b";
        noise2[i] = std::to_string(std::uniform_real_distribution<double>(0, 1)(rng));
    }
    t.add_column("order", CellType::Categorical, y);
    t.add_column("signal", CellType::Categorical, signal);
    t.add_column("noise1", CellType::Categorical, noise1);
    t.add_column("noise2", CellType::Real, noise2);
    auto rep = rf_importance(t, "order", {"signal", "noise1", "noise2"}, {500, 0, 5, 3, 2});
    REQUIRE(rep.predictors.size() == 3);
    CHECK(rep.importance[0] > rep.importance[1]);
    CHECK(rep.importance[0] > rep.importance[2]);
    CHECK(rep.importance[0] > 0.3);  // permuting the only signal destroys accuracy
    CHECK(std::abs(rep.importance[1]) < 0.01);
    CHECK(std::abs(rep.importance[2]) < 0.01);
    CHECK(rep.ranking()[0] == 0);
    // threshold is |most negative importance|
    double most_neg = std::min({rep.importance[0], rep.importance[1], rep.importance[2], 0.0});
    CHECK(rep.threshold == Catch::Approx(std::abs(most_neg)));
}
