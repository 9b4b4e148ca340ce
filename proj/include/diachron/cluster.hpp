#pragma once

// Agglomerative clustering. hclust merges by Lance-Williams updates over a
// distance matrix (single, complete, or Ward on squared Euclidean input);
// vnc is the temporally constrained variant for periodization: only
// chronologically adjacent clusters may merge, and the merge cost is the
// variability (sd, or coefficient of variation) of the merged cluster.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "diachron/errors.hpp"
#include "diachron/linalg.hpp"

namespace diachron {

enum class Linkage { Single, Complete, Ward };

struct Merge {
    int left = 0, right = 0;  // cluster ids: 0..n-1 leaves, then n, n+1, ...
    double height = 0;
};

struct Dendrogram {
    std::vector<std::string> leaves;  // labels in input (temporal) order
    std::vector<Merge> merges;        // n-1 entries

    // members of every cluster id
    std::vector<std::vector<int>> membership() const {
        size_t n = leaves.size();
        std::vector<std::vector<int>> m(n + merges.size());
        for (size_t i = 0; i < n; ++i) m[i] = {static_cast<int>(i)};
        for (size_t k = 0; k < merges.size(); ++k) {
            auto& dst = m[n + k];
            dst = m[merges[k].left];
            dst.insert(dst.end(), m[merges[k].right].begin(), m[merges[k].right].end());
            std::sort(dst.begin(), dst.end());
        }
        return m;
    }

    // leaf -> cluster index (0..k-1) after cutting to k clusters
    std::vector<int> cut(int k) const {
        size_t n = leaves.size();
        int live = static_cast<int>(n);
        std::vector<int> owner(n + merges.size());
        for (size_t i = 0; i < owner.size(); ++i) owner[i] = static_cast<int>(i);
        auto mem = membership();
        std::vector<bool> active(n + merges.size(), false);
        for (size_t i = 0; i < n; ++i) active[i] = true;
        for (size_t m = 0; m < merges.size() && live > k; ++m) {
            active[merges[m].left] = false;
            active[merges[m].right] = false;
            active[n + m] = true;
            --live;
        }
        std::vector<int> out(n, -1);
        int next = 0;
        for (size_t c = 0; c < active.size(); ++c) {
            if (!active[c]) continue;
            for (int leaf : mem[c]) out[leaf] = next;
            ++next;
        }
        return out;
    }
};

inline Matrix euclidean_distances(const Matrix& points, bool squared) {
    size_t n = points.rows();
    Matrix d(n, n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double s = 0;
            for (size_t k = 0; k < points.cols(); ++k) {
                double diff = points(i, k) - points(j, k);
                s += diff * diff;
            }
            d(i, j) = d(j, i) = squared ? s : std::sqrt(s);
        }
    return d;
}

// Lance-Williams agglomeration over a precomputed dissimilarity matrix.
// For Ward, pass squared Euclidean distances; heights are then the increase
// in within-cluster sum of squares at each merge (times 2).
inline Dendrogram hclust_dist(Matrix d, Linkage linkage, std::vector<std::string> labels = {}) {
    size_t n = d.rows();
    if (n < 2) throw DataError("TooFewItems", "clustering needs at least 2 items");
    Dendrogram out;
    out.leaves = labels.empty() ? std::vector<std::string>(n) : std::move(labels);
    if (labels.empty())
        for (size_t i = 0; i < n; ++i) out.leaves[i] = std::to_string(i);

    std::vector<int> id(n);       // current cluster id at each slot
    std::vector<double> size(n, 1.0);
    std::vector<bool> alive(n, true);
    for (size_t i = 0; i < n; ++i) id[i] = static_cast<int>(i);

    for (size_t step = 0; step + 1 < n; ++step) {
        // closest live pair; ties go to the smallest (i, j)
        size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        out.merges.push_back({id[bi], id[bj], best});
        double ni = size[bi], nj = size[bj];
        for (size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi || k == bj) continue;
            double dik = d(std::min(bi, k), std::max(bi, k));
            double djk = d(std::min(bj, k), std::max(bj, k));
            double upd;
            switch (linkage) {
                case Linkage::Single: upd = std::min(dik, djk); break;
                case Linkage::Complete: upd = std::max(dik, djk); break;
                default: {
                    double nk = size[k], tot = ni + nj + nk;
                    upd = ((ni + nk) * dik + (nj + nk) * djk - nk * best) / tot;
                }
            }
            d(std::min(bi, k), std::max(bi, k)) = upd;
        }
        id[bi] = static_cast<int>(n + step);
        size[bi] = ni + nj;
        alive[bj] = false;
    }
    return out;
}

inline Dendrogram hclust(const Matrix& points, Linkage linkage,
                         std::vector<std::string> labels = {}) {
    return hclust_dist(euclidean_distances(points, linkage == Linkage::Ward), linkage,
                       std::move(labels));
}

// ---------------------------------------------------------------------------
// variability-based neighbor clustering
// ---------------------------------------------------------------------------

enum class VncCost { Sd, Cv };

// sample standard deviation; profiles score the sum over components
inline double vnc_cost(const std::vector<std::vector<double>>& rows, VncCost kind) {
    size_t dims = rows[0].size();
    double total = 0;
    for (size_t k = 0; k < dims; ++k) {
        double mean = 0;
        for (const auto& r : rows) mean += r[k];
        mean /= static_cast<double>(rows.size());
        double var = 0;
        for (const auto& r : rows) var += (r[k] - mean) * (r[k] - mean);
        double sd = rows.size() > 1 ? std::sqrt(var / static_cast<double>(rows.size() - 1)) : 0.0;
        total += kind == VncCost::Cv ? (mean != 0 ? sd / std::abs(mean) : sd) : sd;
    }
    return total;
}

// Only temporally adjacent clusters merge; at each step the pair whose merged
// cluster has the smallest variability wins. Input rows are in time order.
inline Dendrogram vnc(const std::vector<std::vector<double>>& series,
                      std::vector<std::string> labels = {}, VncCost kind = VncCost::Sd) {
    size_t n = series.size();
    if (n < 2) throw DataError("TooFewItems", "vnc needs at least 2 time points");
    Dendrogram out;
    out.leaves = labels.empty() ? std::vector<std::string>(n) : std::move(labels);
    if (labels.empty())
        for (size_t i = 0; i < n; ++i) out.leaves[i] = std::to_string(i);

    struct Seg {
        int id;
        std::vector<std::vector<double>> rows;
    };
    std::vector<Seg> segs;
    for (size_t i = 0; i < n; ++i) segs.push_back({static_cast<int>(i), {series[i]}});

    for (size_t step = 0; step + 1 < n; ++step) {
        size_t best_i = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i + 1 < segs.size(); ++i) {
            std::vector<std::vector<double>> merged = segs[i].rows;
            merged.insert(merged.end(), segs[i + 1].rows.begin(), segs[i + 1].rows.end());
            double cost = vnc_cost(merged, kind);
            if (cost < best) {
                best = cost;
                best_i = i;
            }
        }
        out.merges.push_back({segs[best_i].id, segs[best_i + 1].id, best});
        segs[best_i].rows.insert(segs[best_i].rows.end(), segs[best_i + 1].rows.begin(),
                                 segs[best_i + 1].rows.end());
        segs[best_i].id = static_cast<int>(n + step);
        segs.erase(segs.begin() + static_cast<long>(best_i) + 1);
    }
    return out;
}

} // namespace diachron
