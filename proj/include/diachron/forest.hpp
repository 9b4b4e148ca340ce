#pragma once

// Random forest permutation importance for a binary response. Trees are
// CART-style (Gini impurity, random predictor subsets of size mtry, grown on
// bootstrap samples); importance is the mean out-of-bag accuracy drop when a
// predictor's OOB values are permuted. The significance threshold is the
// magnitude of the most negative importance. Per-tree seeds derive from the
// master seed, and per-tree results are stored by index before aggregation,
// so a fixed seed produces a bit-identical report regardless of thread count.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "diachron/rng.hpp"
#include "diachron/table.hpp"

namespace diachron {

struct ForestConfig {
    int trees = 500;
    int mtry = 0;  // 0 = ceil(sqrt(#predictors))
    int min_node = 5;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ImportanceReport {
    std::vector<std::string> predictors;
    std::vector<double> importance;  // mean OOB accuracy drop per predictor
    double threshold = 0;            // |most negative importance|, 0 if none negative
    double oob_accuracy = 0;         // mean per-tree OOB accuracy

    std::vector<size_t> ranking() const {
        std::vector<size_t> idx(predictors.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return importance[a] > importance[b];
        });
        return idx;
    }
};

namespace forest_detail {

struct Dataset {
    std::vector<std::vector<double>> x;  // predictor-major, levels as codes
    std::vector<std::vector<double>> level_rate;  // response rate per level (cat ordering)
    std::vector<bool> numeric;
    std::vector<int> y;
    size_t n() const { return y.size(); }
};

struct TreeNode {
    int pred = -1;
    double threshold = 0;          // numeric: x <= thr left; categorical: rate(x) <= thr left
    bool by_rate = false;          // categorical split via response-rate ordering
    int left = -1, right = -1;
    int leaf_class = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    int classify(const Dataset& d, const std::vector<double>& xrow) const {
        int cur = 0;
        while (nodes[cur].leaf_class < 0) {
            const auto& nd = nodes[cur];
            double v = xrow[nd.pred];
            if (nd.by_rate) v = d.level_rate[nd.pred][static_cast<size_t>(v)];
            cur = v <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[cur].leaf_class;
    }
};

inline double gini(double n1, double n) {
    if (n <= 0) return 0;
    double p = n1 / n;
    return 2 * p * (1 - p) * n;
}

struct Builder {
    const Dataset& d;
    Rng& rng;
    int mtry, min_node;
    Tree tree;

    int grow(std::vector<int> rows) {
        int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double n1 = 0;
        for (int r : rows) n1 += d.y[r];
        double n = static_cast<double>(rows.size());
        if (n1 == 0 || n1 == n || n < min_node) {
            tree.nodes[id].leaf_class = n1 * 2 > n ? 1 : 0;
            return id;
        }
        // random predictor subset
        std::vector<int> preds(d.x.size());
        for (size_t i = 0; i < preds.size(); ++i) preds[i] = static_cast<int>(i);
        rng.shuffle(preds);
        preds.resize(std::min<size_t>(mtry, preds.size()));

        double base = gini(n1, n);
        double best_gain = 1e-12;
        int best_pred = -1;
        double best_thr = 0;
        bool best_rate = false;
        for (int j : preds) {
            // order values: numeric directly, categorical by response rate
            // (optimal for Gini with a binary response)
            std::vector<double> vals;
            vals.reserve(rows.size());
            for (int r : rows) {
                double v = d.x[j][r];
                if (!d.numeric[j]) v = d.level_rate[j][static_cast<size_t>(v)];
                vals.push_back(v);
            }
            std::vector<double> uniq = vals;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            for (size_t k = 0; k + 1 < uniq.size(); ++k) {
                double thr = (uniq[k] + uniq[k + 1]) / 2;
                double ln = 0, ln1 = 0;
                for (size_t i = 0; i < rows.size(); ++i)
                    if (vals[i] <= thr) {
                        ln += 1;
                        ln1 += d.y[rows[i]];
                    }
                double rn = n - ln, rn1 = n1 - ln1;
                double gain = base - gini(ln1, ln) - gini(rn1, rn);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_pred = j;
                    best_thr = thr;
                    best_rate = !d.numeric[j];
                }
            }
        }
        if (best_pred < 0) {
            tree.nodes[id].leaf_class = n1 * 2 > n ? 1 : 0;
            return id;
        }
        std::vector<int> lrows, rrows;
        for (int r : rows) {
            double v = d.x[best_pred][r];
            if (best_rate) v = d.level_rate[best_pred][static_cast<size_t>(v)];
            (v <= best_thr ? lrows : rrows).push_back(r);
        }
        tree.nodes[id].pred = best_pred;
        tree.nodes[id].threshold = best_thr;
        tree.nodes[id].by_rate = best_rate;
        int l = grow(std::move(lrows));
        int r = grow(std::move(rrows));
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }
};

} // namespace forest_detail

inline ImportanceReport rf_importance(const FactorTable& t, const std::string& response,
                                      const std::vector<std::string>& predictors,
                                      const ForestConfig& cfg = {}) {
    using namespace forest_detail;
    if (predictors.size() < 2)
        throw DataError("TooFewPredictors", "importance needs at least 2 predictors");
    Dataset d;
    auto rl = t.levels(response);
    if (rl.size() != 2) throw DataError("NonBinaryResponse", "forest needs a binary response");
    const auto& rc = t.column(response);
    d.y.resize(t.n_rows());
    for (size_t i = 0; i < t.n_rows(); ++i) d.y[i] = rc.cells[i] == rl[1] ? 1 : 0;
    for (const auto& p : predictors) {
        const auto& c = t.column(p);
        bool num =
            c.type == CellType::Integer || c.type == CellType::Real || c.type == CellType::Boolean;
        d.numeric.push_back(num);
        std::vector<double> col(t.n_rows());
        std::vector<double> rates;
        if (num) {
            for (size_t i = 0; i < t.n_rows(); ++i) col[i] = t.as_real(p, i);
        } else {
            auto lv = t.levels(p);
            std::vector<double> n1(lv.size(), 0), nt(lv.size(), 0);
            for (size_t i = 0; i < t.n_rows(); ++i) {
                size_t code = std::lower_bound(lv.begin(), lv.end(), c.cells[i]) - lv.begin();
                col[i] = static_cast<double>(code);
                nt[code] += 1;
                n1[code] += d.y[i];
            }
            rates.resize(lv.size());
            for (size_t k = 0; k < lv.size(); ++k)
                rates[k] = nt[k] > 0 ? n1[k] / nt[k] : 0.0;
        }
        d.x.push_back(std::move(col));
        d.level_rate.push_back(std::move(rates));
    }

    int P = static_cast<int>(predictors.size());
    int mtry = cfg.mtry > 0 ? cfg.mtry : static_cast<int>(std::ceil(std::sqrt(P)));
    size_t n = d.n();

    std::vector<std::vector<double>> drop(cfg.trees, std::vector<double>(P, 0.0));
    std::vector<std::vector<int>> used(cfg.trees, std::vector<int>(P, 0));
    std::vector<double> oob_acc(cfg.trees, 0.0);
    std::vector<int> oob_valid(cfg.trees, 0);

    auto run_tree = [&](int ti) {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(ti));
        std::vector<int> bag(n);
        std::vector<bool> in_bag(n, false);
        for (size_t i = 0; i < n; ++i) {
            bag[i] = static_cast<int>(rng.below(n));
            in_bag[bag[i]] = true;
        }
        Builder b{d, rng, mtry, cfg.min_node, {}};
        b.grow(bag);
        std::vector<int> oob;
        for (size_t i = 0; i < n; ++i)
            if (!in_bag[i]) oob.push_back(static_cast<int>(i));
        if (oob.empty()) return;
        oob_valid[ti] = 1;
        double correct = 0;
        std::vector<double> xrow(P);
        for (int r : oob) {
            for (int j = 0; j < P; ++j) xrow[j] = d.x[j][r];
            if (b.tree.classify(d, xrow) == d.y[r]) correct += 1;
        }
        double acc = correct / static_cast<double>(oob.size());
        oob_acc[ti] = acc;
        for (int j = 0; j < P; ++j) {
            std::vector<int> perm = oob;
            rng.shuffle(perm);
            double c2 = 0;
            for (size_t k = 0; k < oob.size(); ++k) {
                for (int jj = 0; jj < P; ++jj) xrow[jj] = d.x[jj][oob[k]];
                xrow[j] = d.x[j][perm[k]];
                if (b.tree.classify(d, xrow) == d.y[oob[k]]) c2 += 1;
            }
            drop[ti][j] = acc - c2 / static_cast<double>(oob.size());
            used[ti][j] = 1;
        }
    };

    int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1) {
        for (int ti = 0; ti < cfg.trees; ++ti) run_tree(ti);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&, w]() {
                for (int ti = w; ti < cfg.trees; ti += n_threads) run_tree(ti);
            });
        for (auto& th : pool) th.join();
    }

    ImportanceReport rep;
    rep.predictors = predictors;
    rep.importance.assign(P, 0.0);
    double acc_sum = 0;
    int acc_n = 0;
    for (int ti = 0; ti < cfg.trees; ++ti) {
        if (!oob_valid[ti]) continue;
        acc_sum += oob_acc[ti];
        ++acc_n;
    }
    rep.oob_accuracy = acc_n ? acc_sum / acc_n : 0.0;
    for (int j = 0; j < P; ++j) {
        double s = 0;
        int m = 0;
        for (int ti = 0; ti < cfg.trees; ++ti)
            if (used[ti][j]) {
                s += drop[ti][j];
                ++m;
            }
        rep.importance[j] = m ? s / m : 0.0;
    }
    double most_negative = 0;
    for (double v : rep.importance) most_negative = std::min(most_negative, v);
    rep.threshold = std::abs(most_negative);
    return rep;
}

} // namespace diachron
