#pragma once

// Conditional inference tree for a binary response. At every node each
// predictor gets a permutation p-value (chi-square statistic for categorical
// predictors, absolute centered covariance for numeric ones), Bonferroni-
// corrected over the predictors; the node splits on the smallest-p predictor
// while p < alpha and the node holds at least min_node rows. Categorical
// splits search all binary level subsets (up to 10 levels); numeric splits
// scan thresholds. Both maximize the split-vs-response chi-square.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diachron/rng.hpp"
#include "diachron/table.hpp"

namespace diachron {

struct CiTreeConfig {
    double alpha = 0.05;
    int permutations = 9999;
    int min_node = 20;
    std::uint64_t seed = 1;
};

struct CiNode {
    // internal
    std::string predictor;
    double p_adjusted = 1.0;
    bool numeric_split = false;
    double threshold = 0;                      // numeric: x <= threshold goes left
    std::vector<std::string> left_levels;      // categorical: these levels go left
    std::unique_ptr<CiNode> left, right;
    // leaf
    bool is_leaf = true;
    int n = 0;
    std::map<std::string, int> response_counts;

    int depth() const {
        if (is_leaf) return 1;
        return 1 + std::max(left->depth(), right->depth());
    }
    int n_internal() const {
        if (is_leaf) return 0;
        return 1 + left->n_internal() + right->n_internal();
    }
};

struct CiTree {
    std::unique_ptr<CiNode> root;
    std::vector<std::string> response_levels;
};

namespace citree_detail {

// 2 x k chi-square statistic of response (binary, as 0/1) against groups
inline double group_chi2(const std::vector<int>& group, const std::vector<int>& y, int k) {
    std::vector<double> n1(k, 0.0), nt(k, 0.0);
    double tot1 = 0, tot = 0;
    for (size_t i = 0; i < group.size(); ++i) {
        nt[group[i]] += 1;
        tot += 1;
        if (y[i]) {
            n1[group[i]] += 1;
            tot1 += 1;
        }
    }
    if (tot1 == 0 || tot1 == tot) return 0.0;
    double stat = 0;
    double p1 = tot1 / tot;
    for (int g = 0; g < k; ++g) {
        if (nt[g] == 0) continue;
        double e1 = nt[g] * p1, e0 = nt[g] * (1 - p1);
        double o1 = n1[g], o0 = nt[g] - n1[g];
        stat += (o1 - e1) * (o1 - e1) / e1 + (o0 - e0) * (o0 - e0) / e0;
    }
    return stat;
}

inline double numeric_stat(const std::vector<double>& x, const std::vector<int>& y) {
    double xbar = 0, ybar = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= static_cast<double>(x.size());
    ybar /= static_cast<double>(x.size());
    double cov = 0;
    for (size_t i = 0; i < x.size(); ++i) cov += (x[i] - xbar) * (y[i] - ybar);
    return std::abs(cov);
}

} // namespace citree_detail

class CiTreeBuilder {
public:
    CiTreeBuilder(const FactorTable& t, const std::string& response,
                  std::vector<std::string> predictors, CiTreeConfig cfg)
        : t_(t), cfg_(cfg), predictors_(std::move(predictors)) {
        auto lv = t.levels(response);
        if (lv.size() > 2)
            throw DataError("NonBinaryResponse", "citree needs a binary response");
        levels_ = lv;
        const auto& rc = t.column(response);
        y_.resize(t.n_rows());
        for (size_t i = 0; i < t.n_rows(); ++i)
            y_[i] = lv.size() == 2 && rc.cells[i] == lv[1] ? 1 : 0;
        for (const auto& p : predictors_) {
            const auto& c = t.column(p);
            bool num = c.type == CellType::Integer || c.type == CellType::Real ||
                       c.type == CellType::Boolean;
            numeric_.push_back(num);
            if (num) {
                std::vector<double> v(t.n_rows());
                for (size_t i = 0; i < t.n_rows(); ++i) v[i] = t.as_real(p, i);
                num_vals_.push_back(std::move(v));
                cat_vals_.emplace_back();
                cat_levels_.emplace_back();
            } else {
                auto plv = t.levels(p);
                if (plv.size() > 10)
                    throw DataError("TooManyLevels", "predictor '" + p + "' has more than 10 levels");
                std::vector<int> v(t.n_rows());
                for (size_t i = 0; i < t.n_rows(); ++i)
                    v[i] = static_cast<int>(
                        std::lower_bound(plv.begin(), plv.end(), c.cells[i]) - plv.begin());
                cat_vals_.push_back(std::move(v));
                cat_levels_.push_back(plv);
                num_vals_.emplace_back();
            }
        }
    }

    CiTree build() {
        std::vector<int> rows(t_.n_rows());
        for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        CiTree tree;
        tree.response_levels = levels_;
        Rng rng = Rng::derive(cfg_.seed, 0);
        tree.root = grow(rows, rng);
        return tree;
    }

private:
    std::unique_ptr<CiNode> grow(const std::vector<int>& rows, Rng& rng) {
        auto node = std::make_unique<CiNode>();
        node->n = static_cast<int>(rows.size());
        for (int r : rows) node->response_counts[levels_[y_[r]]] += 1;

        bool pure = node->response_counts.size() < 2;
        if (static_cast<int>(rows.size()) < cfg_.min_node || pure) return node;

        // permutation p per predictor, Bonferroni over predictors
        std::vector<int> y(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) y[i] = y_[rows[i]];
        double best_p = 2.0;
        int best_j = -1;
        for (size_t j = 0; j < predictors_.size(); ++j) {
            double obs = stat_for(j, rows, y);
            std::vector<int> perm = y;
            int ge = 0;
            for (int b = 0; b < cfg_.permutations; ++b) {
                rng.shuffle(perm);
                if (stat_for(j, rows, perm) >= obs - 1e-12) ++ge;
            }
            double p = (1.0 + ge) / (cfg_.permutations + 1.0);
            if (p < best_p) {
                best_p = p;
                best_j = static_cast<int>(j);
            }
        }
        double p_adj = std::min(1.0, best_p * static_cast<double>(predictors_.size()));
        if (best_j < 0 || p_adj >= cfg_.alpha) return node;

        // build the split on the winning predictor
        std::vector<int> left_rows, right_rows;
        if (numeric_[best_j]) {
            double thr = best_threshold(best_j, rows, y);
            node->numeric_split = true;
            node->threshold = thr;
            for (size_t i = 0; i < rows.size(); ++i)
                (num_vals_[best_j][rows[i]] <= thr ? left_rows : right_rows).push_back(rows[i]);
        } else {
            auto subset = best_subset(best_j, rows, y);
            if (subset.empty()) return node;
            for (int lv : subset) node->left_levels.push_back(cat_levels_[best_j][lv]);
            std::vector<bool> in_left(cat_levels_[best_j].size(), false);
            for (int lv : subset) in_left[lv] = true;
            for (size_t i = 0; i < rows.size(); ++i)
                (in_left[cat_vals_[best_j][rows[i]]] ? left_rows : right_rows).push_back(rows[i]);
        }
        if (left_rows.empty() || right_rows.empty()) return node;

        node->is_leaf = false;
        node->predictor = predictors_[best_j];
        node->p_adjusted = p_adj;
        node->left = grow(left_rows, rng);
        node->right = grow(right_rows, rng);
        return node;
    }

    double stat_for(size_t j, const std::vector<int>& rows, const std::vector<int>& y) const {
        if (numeric_[j]) {
            std::vector<double> x(rows.size());
            for (size_t i = 0; i < rows.size(); ++i) x[i] = num_vals_[j][rows[i]];
            return citree_detail::numeric_stat(x, y);
        }
        std::vector<int> g(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) g[i] = cat_vals_[j][rows[i]];
        return citree_detail::group_chi2(g, y, static_cast<int>(cat_levels_[j].size()));
    }

    double best_threshold(size_t j, const std::vector<int>& rows, const std::vector<int>& y) const {
        std::vector<double> xs;
        for (int r : rows) xs.push_back(num_vals_[j][r]);
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        double best_stat = -1, best_thr = sorted.front();
        for (size_t k = 0; k + 1 < sorted.size(); ++k) {
            double thr = (sorted[k] + sorted[k + 1]) / 2;
            std::vector<int> g(rows.size());
            for (size_t i = 0; i < rows.size(); ++i) g[i] = xs[i] <= thr ? 0 : 1;
            double s = citree_detail::group_chi2(g, y, 2);
            if (s > best_stat) {
                best_stat = s;
                best_thr = thr;
            }
        }
        return best_thr;
    }

    std::vector<int> best_subset(size_t j, const std::vector<int>& rows,
                                 const std::vector<int>& y) const {
        int k = static_cast<int>(cat_levels_[j].size());
        // only levels that occur in this node matter
        std::vector<int> present;
        {
            std::vector<bool> seen(k, false);
            for (int r : rows) seen[cat_vals_[j][r]] = true;
            for (int lv = 0; lv < k; ++lv)
                if (seen[lv]) present.push_back(lv);
        }
        if (present.size() < 2) return {};
        double best_stat = -1;
        std::vector<int> best;
        int m = static_cast<int>(present.size());
        for (unsigned mask = 1; mask < (1u << (m - 1)); ++mask) {  // fix last level right
            std::vector<bool> in_left(k, false);
            std::vector<int> subset;
            for (int b = 0; b < m; ++b)
                if (mask & (1u << b)) {
                    in_left[present[b]] = true;
                    subset.push_back(present[b]);
                }
            std::vector<int> g(rows.size());
            for (size_t i = 0; i < rows.size(); ++i)
                g[i] = in_left[cat_vals_[j][rows[i]]] ? 0 : 1;
            double s = citree_detail::group_chi2(g, y, 2);
            if (s > best_stat) {
                best_stat = s;
                best = subset;
            }
        }
        return best;
    }

    const FactorTable& t_;
    CiTreeConfig cfg_;
    std::vector<std::string> predictors_;
    std::vector<bool> numeric_;
    std::vector<std::vector<double>> num_vals_;
    std::vector<std::vector<int>> cat_vals_;
    std::vector<std::vector<std::string>> cat_levels_;
    std::vector<std::string> levels_;
    std::vector<int> y_;
};

inline CiTree citree(const FactorTable& t, const std::string& response,
                     const std::vector<std::string>& predictors, const CiTreeConfig& cfg = {}) {
    return CiTreeBuilder(t, response, predictors, cfg).build();
}

} // namespace diachron
