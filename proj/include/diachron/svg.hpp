#pragma once

// Minimal SVG emission for the five report plot kinds: rate (observed logits
// + fitted line), ca biplot, dendrogram, posterior density with HDI bar, and
// importance dotchart. Deliberately unthemed; every text node is escaped so
// the output is well-formed XML.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "diachron/ca.hpp"
#include "diachron/cluster.hpp"
#include "diachron/errors.hpp"
#include "diachron/forest.hpp"
#include "diachron/glm.hpp"

namespace diachron {

struct KindMismatch : DataError {
    explicit KindMismatch(const std::string& kind)
        : DataError("KindMismatch", "no result of kind '" + kind + "' to plot") {}
};

namespace svg_detail {

inline std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Canvas {
    double w, h;
    std::string body;

    void line(double x1, double y1, double x2, double y2, const std::string& style) {
        body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                "\" y2=\"" + num(y2) + "\" " + style + "/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill) {
        body += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, const std::string& t, int size = 10) {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
                std::to_string(size) + "\">" + esc(t) + "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
        body += "<polyline points=\"";
        for (auto& [x, y] : pts) body += num(x) + "," + num(y) + " ";
        body += "\" " + style + "/>\n";
    }
    std::string finish() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
               "width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " +
               num(h) + "\">\n" + body + "</svg>\n";
    }
};

struct Scale {
    double lo, hi, out_lo, out_hi;
    double operator()(double v) const {
        double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        return out_lo + t * (out_hi - out_lo);
    }
};

} // namespace svg_detail

// observed per-period logits as points plus the fitted line k + s t
inline std::string emit_rate_plot(const RateFit& fit, const std::vector<double>& t,
                                  const std::vector<double>& successes,
                                  const std::vector<double>& trials) {
    using namespace svg_detail;
    Canvas cv{420, 300, ""};
    double tmin = *std::min_element(t.begin(), t.end());
    double tmax = *std::max_element(t.begin(), t.end());
    std::vector<double> logits;
    for (size_t i = 0; i < t.size(); ++i) {
        // empirical logit keeps degenerate cells on the map
        double p = (successes[i] + 0.5) / (trials[i] + 1.0);
        logits.push_back(std::log(p / (1 - p)));
    }
    double ylo = std::min(*std::min_element(logits.begin(), logits.end()),
                          fit.intercept + fit.slope * tmin);
    double yhi = std::max(*std::max_element(logits.begin(), logits.end()),
                          fit.intercept + fit.slope * tmax);
    double pad = 0.1 * std::max(1e-9, yhi - ylo);
    Scale sx{tmin, tmax, 50, 390};
    Scale sy{ylo - pad, yhi + pad, 270, 20};
    cv.line(sx(tmin), sy(fit.intercept + fit.slope * tmin), sx(tmax),
            sy(fit.intercept + fit.slope * tmax), "stroke=\"red\" stroke-width=\"1.5\"");
    for (size_t i = 0; i < t.size(); ++i) cv.circle(sx(t[i]), sy(logits[i]), 3.5, "black");
    cv.text(10, 15, "logit vs time; slope " + num(fit.slope) + " (exp " + num(fit.exp_slope) + ")");
    return cv.finish();
}

inline std::string emit_ca_plot(const CaSolution& sol, const std::vector<std::string>& row_labels,
                                const std::vector<std::string>& col_labels) {
    using namespace svg_detail;
    Canvas cv{460, 380, ""};
    if (sol.row_coords.cols() < 1) throw KindMismatch("ca");
    bool two = sol.row_coords.cols() >= 2;
    double lo = 0, hi = 0;
    auto upd = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (size_t i = 0; i < sol.row_coords.rows(); ++i) {
        upd(sol.row_coords(i, 0));
        if (two) upd(sol.row_coords(i, 1));
    }
    for (size_t i = 0; i < sol.col_coords.rows(); ++i) {
        upd(sol.col_coords(i, 0));
        if (two) upd(sol.col_coords(i, 1));
    }
    double pad = 0.1 * std::max(1e-9, hi - lo);
    Scale sx{lo - pad, hi + pad, 40, 440};
    Scale sy{lo - pad, hi + pad, 340, 30};
    cv.line(sx(0), 340, sx(0), 30, "stroke=\"#ccc\"");
    cv.line(40, sy(0), 440, sy(0), "stroke=\"#ccc\"");
    for (size_t i = 0; i < sol.row_coords.rows(); ++i) {
        double x = sx(sol.row_coords(i, 0)), y = sy(two ? sol.row_coords(i, 1) : 0);
        cv.circle(x, y, 3, "steelblue");
        cv.text(x + 4, y - 3, i < row_labels.size() ? row_labels[i] : "r" + std::to_string(i));
    }
    for (size_t i = 0; i < sol.col_coords.rows(); ++i) {
        double x = sx(sol.col_coords(i, 0)), y = sy(two ? sol.col_coords(i, 1) : 0);
        cv.circle(x, y, 3, "firebrick");
        cv.text(x + 4, y - 3, i < col_labels.size() ? col_labels[i] : "c" + std::to_string(i));
    }
    std::string title = "dim1 " + num(100 * sol.inertia_share[0]) + "%";
    if (two) title += ", dim2 " + num(100 * sol.inertia_share[1]) + "%";
    cv.text(10, 15, title);
    return cv.finish();
}

inline std::string emit_dendrogram(const Dendrogram& d) {
    using namespace svg_detail;
    size_t n = d.leaves.size();
    Canvas cv{std::max(200.0, 60.0 * n), 320, ""};
    double hmax = 0;
    for (const auto& m : d.merges) hmax = std::max(hmax, m.height);
    if (hmax <= 0) hmax = 1;
    Scale sy{0, hmax, 260, 30};
    // leaf x positions in input order
    std::vector<double> x(n + d.merges.size()), y(n + d.merges.size(), 260);
    for (size_t i = 0; i < n; ++i) {
        x[i] = 40 + 55.0 * i;
        cv.text(x[i] - 15, 285, d.leaves[i]);
        cv.line(x[i], 260, x[i], 268, "stroke=\"black\"");
    }
    for (size_t k = 0; k < d.merges.size(); ++k) {
        const auto& m = d.merges[k];
        double yk = sy(m.height);
        cv.line(x[m.left], y[m.left], x[m.left], yk, "stroke=\"black\"");
        cv.line(x[m.right], y[m.right], x[m.right], yk, "stroke=\"black\"");
        cv.line(x[m.left], yk, x[m.right], yk, "stroke=\"black\"");
        x[n + k] = (x[m.left] + x[m.right]) / 2;
        y[n + k] = yk;
    }
    return cv.finish();
}

// histogram-smoothed density with the 95% HDI bar
inline std::string emit_posterior_plot(const std::string& name, std::vector<double> draws,
                                       double hdi_lo, double hdi_hi) {
    using namespace svg_detail;
    Canvas cv{420, 260, ""};
    std::sort(draws.begin(), draws.end());
    double lo = draws.front(), hi = draws.back();
    if (hi <= lo) {
        lo -= 1;
        hi += 1;
    }
    const int bins = 40;
    std::vector<double> counts(bins, 0);
    for (double v : draws) {
        int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
        counts[std::max(0, b)] += 1;
    }
    double cmax = *std::max_element(counts.begin(), counts.end());
    Scale sx{lo, hi, 40, 400};
    Scale sy{0, cmax, 220, 30};
    std::vector<std::pair<double, double>> pts;
    for (int b = 0; b < bins; ++b)
        pts.push_back({sx(lo + (b + 0.5) * (hi - lo) / bins), sy(counts[b])});
    cv.polyline(pts, "fill=\"none\" stroke=\"black\"");
    cv.line(sx(hdi_lo), 235, sx(hdi_hi), 235, "stroke=\"black\" stroke-width=\"4\"");
    if (lo < 0 && hi > 0) cv.line(sx(0), 220, sx(0), 30, "stroke=\"#999\" stroke-dasharray=\"4\"");
    cv.text(10, 15, name + "  95% HDI [" + num(hdi_lo) + ", " + num(hdi_hi) + "]");
    return cv.finish();
}

inline std::string emit_importance_plot(const ImportanceReport& rep) {
    using namespace svg_detail;
    auto order = rep.ranking();
    size_t n = order.size();
    Canvas cv{440, 60.0 + 24.0 * n, ""};
    double lo = std::min(0.0, -rep.threshold), hi = 0;
    for (double v : rep.importance) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double pad = 0.1 * std::max(1e-9, hi - lo);
    Scale sx{lo - pad, hi + pad, 140, 420};
    for (size_t k = 0; k < n; ++k) {
        size_t j = order[k];  // largest importance at the top
        double yy = 40.0 + 24.0 * k;
        cv.text(10, yy + 4, rep.predictors[j]);
        cv.line(140, yy, 420, yy, "stroke=\"#eee\"");
        cv.circle(sx(rep.importance[j]), yy, 4, "black");
    }
    cv.line(sx(rep.threshold), 25, sx(rep.threshold), 40.0 + 24.0 * n,
            "stroke=\"black\" stroke-dasharray=\"5\"");
    cv.text(10, 15, "permutation importance (dashed: significance threshold)");
    return cv.finish();
}

} // namespace diachron
