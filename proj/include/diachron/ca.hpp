#pragma once

// Correspondence analysis of a contingency table. The standardized residual
// matrix S = Dr^{-1/2} (P - r c^T) Dc^{-1/2} is decomposed by one-sided
// Jacobi SVD; principal coordinates are the mass-normalized singular vectors
// scaled by the singular values, and each dimension's inertia share is
// sigma_i^2 / sum sigma^2. Total inertia times N equals the Pearson
// chi-square statistic of the table.

#include <cmath>
#include <vector>

#include "diachron/glm.hpp"
#include "diachron/linalg.hpp"

namespace diachron {

struct DegenerateRank : NumericError {
    explicit DegenerateRank(std::string msg) : NumericError("DegenerateRank", std::move(msg)) {}
};

struct CaSolution {
    Matrix row_coords;   // r x d principal coordinates
    Matrix col_coords;   // c x d
    std::vector<double> singular_values;  // d, descending
    std::vector<double> inertia_share;    // d, sums to 1 (all zero if no inertia)
    double total_inertia = 0;
    std::vector<double> row_mass, col_mass;
};

inline CaSolution correspondence_analysis(const Matrix& counts) {
    size_t r = counts.rows(), c = counts.cols();
    if (r < 2 || c < 2) throw DegenerateRank("need at least 2 rows and 2 columns");
    double total = 0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            if (counts(i, j) < 0) throw DataError("NegativeCount", "counts must be nonnegative");
            total += counts(i, j);
        }
    if (total <= 0) throw ZeroMargin();

    std::vector<double> rm(r, 0.0), cm(c, 0.0);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            rm[i] += counts(i, j) / total;
            cm[j] += counts(i, j) / total;
        }
    for (double v : rm)
        if (v <= 0) throw ZeroMargin();
    for (double v : cm)
        if (v <= 0) throw ZeroMargin();

    Matrix S(r, c);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            double p = counts(i, j) / total;
            S(i, j) = (p - rm[i] * cm[j]) / std::sqrt(rm[i] * cm[j]);
        }

    Svd svd = jacobi_svd(S);
    size_t d = std::min(r, c) - 1;  // the trivial dimension is gone by centering

    CaSolution out;
    out.row_mass = rm;
    out.col_mass = cm;
    out.singular_values.assign(svd.sigma.begin(), svd.sigma.begin() + d);
    out.total_inertia = 0;
    for (size_t k = 0; k < d; ++k) out.total_inertia += svd.sigma[k] * svd.sigma[k];
    out.inertia_share.assign(d, 0.0);
    if (out.total_inertia > 1e-14)
        for (size_t k = 0; k < d; ++k)
            out.inertia_share[k] = svd.sigma[k] * svd.sigma[k] / out.total_inertia;

    out.row_coords = Matrix(r, d);
    out.col_coords = Matrix(c, d);
    for (size_t k = 0; k < d; ++k) {
        for (size_t i = 0; i < r; ++i)
            out.row_coords(i, k) = svd.u(i, k) / std::sqrt(rm[i]) * svd.sigma[k];
        for (size_t j = 0; j < c; ++j)
            out.col_coords(j, k) = svd.v(j, k) / std::sqrt(cm[j]) * svd.sigma[k];
        // canonical sign: first row coordinate of each axis is nonnegative
        double lead = 0;
        for (size_t i = 0; i < r && lead == 0; ++i)
            if (std::abs(out.row_coords(i, k)) > 1e-12) lead = out.row_coords(i, k);
        if (lead < 0) {
            for (size_t i = 0; i < r; ++i) out.row_coords(i, k) = -out.row_coords(i, k);
            for (size_t j = 0; j < c; ++j) out.col_coords(j, k) = -out.col_coords(j, k);
        }
    }
    return out;
}

} // namespace diachron
