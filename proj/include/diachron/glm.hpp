#pragma once

// Frequentist core: the logit transform, binomial logistic regression by
// IRLS, rate-of-change extraction (slope = logodds per time unit, with the
// exp-transformed report), the likelihood-ratio test for slope homogeneity
// across contexts, contingency-table tests, and the historical additive/
// multiplicative variable-rule combinators.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diachron/errors.hpp"
#include "diachron/linalg.hpp"
#include "diachron/special.hpp"
#include "diachron/table.hpp"

namespace diachron {

struct DomainError : NumericError {
    explicit DomainError(std::string msg) : NumericError("DomainError", std::move(msg)) {}
};

inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("logit requires p in (0,1)");
    return std::log(p / (1.0 - p));
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// logistic regression
// ---------------------------------------------------------------------------

struct Separation : NumericError {
    explicit Separation(const std::string& term)
        : NumericError("Separation", "coefficient for '" + term +
                                         "' exceeded 15 logodds; data are (quasi-)separated") {}
};

struct MissingTerm : DataError {
    explicit MissingTerm(const std::string& term)
        : DataError("MissingTerm", "fit has no term '" + term + "'") {}
};

// One row of a binomial regression problem: `successes` out of `trials`
// (trials == 1 for binary data) with an optional prior weight.
struct BinomialData {
    Matrix x;            // design matrix, n x p
    std::vector<double> successes;
    std::vector<double> trials;
    std::vector<double> weights;  // empty = all 1
    std::vector<std::string> names;
};

struct GlmFit {
    std::vector<std::string> names;
    std::vector<double> beta;
    Matrix covariance;
    double deviance = 0;
    double log_likelihood = 0;
    int iterations = 0;
    bool converged = false;

    double coef(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return beta[i];
        throw MissingTerm(name);
    }
    double se(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return std::sqrt(covariance(i, i));
        throw MissingTerm(name);
    }
};

namespace glm_detail {

inline double binom_loglik(const BinomialData& d, const std::vector<double>& beta) {
    double ll = 0;
    for (size_t i = 0; i < d.x.rows(); ++i) {
        double eta = 0;
        for (size_t j = 0; j < d.x.cols(); ++j) eta += d.x(i, j) * beta[j];
        double w = d.weights.empty() ? 1.0 : d.weights[i];
        double y = d.successes[i], n = d.trials[i];
        // log p and log(1-p) written to stay finite for large |eta|
        double log_p = -std::log1p(std::exp(-eta));
        double log_q = -eta - std::log1p(std::exp(-eta));
        ll += w * (y * log_p + (n - y) * log_q);
    }
    return ll;
}

// saturated-model log likelihood, for the deviance
inline double saturated_loglik(const BinomialData& d) {
    double ll = 0;
    for (size_t i = 0; i < d.successes.size(); ++i) {
        double w = d.weights.empty() ? 1.0 : d.weights[i];
        double y = d.successes[i], n = d.trials[i];
        if (y > 0) ll += w * y * std::log(y / n);
        if (n - y > 0) ll += w * (n - y) * std::log((n - y) / n);
    }
    return ll;
}

} // namespace glm_detail

// IRLS with step halving, so the deviance is non-increasing across
// iterations. Convergence: max |X^T (y - n p)| < 1e-6. |beta| > 15 on the
// logit scale raises Separation instead of silently ridge-stabilizing.
inline GlmFit fit_logistic(const BinomialData& data, int max_iter = 100) {
    const size_t n = data.x.rows(), p = data.x.cols();
    if (n == 0 || p == 0) throw DataError("EmptyDesign", "no rows or no columns");
    GlmFit fit;
    fit.names = data.names;
    fit.beta.assign(p, 0.0);

    double ll = glm_detail::binom_loglik(data, fit.beta);
    for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;
        // score and expected information at current beta
        std::vector<double> score(p, 0.0);
        Matrix info(p, p);
        for (size_t i = 0; i < n; ++i) {
            double eta = 0;
            for (size_t j = 0; j < p; ++j) eta += data.x(i, j) * fit.beta[j];
            double mu = expit(eta);
            double w = data.weights.empty() ? 1.0 : data.weights[i];
            double resid = w * (data.successes[i] - data.trials[i] * mu);
            double wt = w * data.trials[i] * mu * (1.0 - mu);
            for (size_t j = 0; j < p; ++j) {
                score[j] += data.x(i, j) * resid;
                for (size_t k = j; k < p; ++k) info(j, k) += wt * data.x(i, j) * data.x(i, k);
            }
        }
        for (size_t j = 0; j < p; ++j)
            for (size_t k = 0; k < j; ++k) info(j, k) = info(k, j);

        double max_score = 0;
        for (double s : score) max_score = std::max(max_score, std::abs(s));
        if (max_score < 1e-6) {
            fit.converged = true;
            break;
        }

        std::vector<double> step = cholesky_solve(info, score);
        // step halving keeps the likelihood monotone
        double scale = 1.0;
        std::vector<double> cand(p);
        for (int half = 0; half < 30; ++half) {
            for (size_t j = 0; j < p; ++j) cand[j] = fit.beta[j] + scale * step[j];
            double cand_ll = glm_detail::binom_loglik(data, cand);
            if (cand_ll >= ll - 1e-12) {
                fit.beta = cand;
                ll = cand_ll;
                break;
            }
            scale /= 2.0;
        }
        for (size_t j = 0; j < p; ++j)
            if (std::abs(fit.beta[j]) > 15.0)
                throw Separation(fit.names.empty() ? "beta" + std::to_string(j) : fit.names[j]);
    }

    fit.log_likelihood = ll;
    fit.deviance = 2.0 * (glm_detail::saturated_loglik(data) - ll);
    // covariance from the information at the solution
    Matrix info(p, p);
    for (size_t i = 0; i < n; ++i) {
        double eta = 0;
        for (size_t j = 0; j < p; ++j) eta += data.x(i, j) * fit.beta[j];
        double mu = expit(eta);
        double w = data.weights.empty() ? 1.0 : data.weights[i];
        double wt = w * data.trials[i] * mu * (1.0 - mu);
        for (size_t j = 0; j < p; ++j)
            for (size_t k = j; k < p; ++k) info(j, k) += wt * data.x(i, j) * data.x(i, k);
    }
    for (size_t j = 0; j < p; ++j)
        for (size_t k = 0; k < j; ++k) info(j, k) = info(k, j);
    fit.covariance = spd_inverse(info);
    return fit;
}

// design matrix from a factor table: numeric columns enter as-is, categorical
// columns are treatment-coded against the alphabetically first level (or the
// given reference). Response may be binary categorical (the alphabetically
// second level is the success) or 0/1.
struct DesignSpec {
    std::vector<std::string> terms;
    std::map<std::string, std::string> references;  // per categorical term
};

struct DesignResult {
    BinomialData data;
    std::string success_level;
};

inline DesignResult build_design(const FactorTable& t, const std::string& response,
                                 const DesignSpec& spec) {
    DesignResult out;
    size_t n = t.n_rows();
    // response encoding
    const auto& rc = t.column(response);
    std::vector<double> y(n);
    if (rc.type == CellType::Categorical || rc.type == CellType::Boolean) {
        auto lv = t.levels(response);
        if (lv.size() != 2)
            throw DataError("NonBinaryResponse",
                            "response '" + response + "' has " + std::to_string(lv.size()) +
                                " levels; need exactly 2");
        out.success_level = lv[1];
        for (size_t i = 0; i < n; ++i) y[i] = rc.cells[i] == lv[1] ? 1.0 : 0.0;
    } else {
        for (size_t i = 0; i < n; ++i) y[i] = t.as_real(response, i);
        out.success_level = "1";
    }

    std::vector<std::string> names{"(intercept)"};
    std::vector<std::vector<double>> cols{std::vector<double>(n, 1.0)};
    for (const auto& term : spec.terms) {
        const auto& c = t.column(term);
        if (c.type == CellType::Categorical) {
            auto lv = t.levels(term);
            std::string ref = lv.front();
            if (auto it = spec.references.find(term); it != spec.references.end()) {
                if (std::find(lv.begin(), lv.end(), it->second) == lv.end())
                    throw DataError("UnknownReferenceLevel",
                                    "'" + it->second + "' is not a level of '" + term + "'");
                ref = it->second;
            }
            for (const auto& level : lv) {
                if (level == ref) continue;
                std::vector<double> col(n, 0.0);
                for (size_t i = 0; i < n; ++i) col[i] = c.cells[i] == level ? 1.0 : 0.0;
                names.push_back(term + "=" + level);
                cols.push_back(std::move(col));
            }
        } else {
            std::vector<double> col(n);
            for (size_t i = 0; i < n; ++i) col[i] = t.as_real(term, i);
            names.push_back(term);
            cols.push_back(std::move(col));
        }
    }

    out.data.x = Matrix(n, cols.size());
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < cols.size(); ++j) out.data.x(i, j) = cols[j][i];
    out.data.successes = std::move(y);
    out.data.trials.assign(n, 1.0);
    out.data.names = std::move(names);
    return out;
}

// ---------------------------------------------------------------------------
// rate of change
// ---------------------------------------------------------------------------

struct RateFit {
    double slope = 0;          // s: logodds per time unit
    double intercept = 0;      // k: logodds at t = 0
    double exp_slope = 1;      // e^s
    double exp_intercept = 1;  // e^k
    double slope_se = 0;
    double intercept_se = 0;
    double log_likelihood = 0;
};

inline RateFit rate_of_change(const GlmFit& fit, const std::string& time_term) {
    RateFit r;
    r.slope = fit.coef(time_term);
    r.slope_se = fit.se(time_term);
    r.intercept = fit.coef("(intercept)");
    r.intercept_se = fit.se("(intercept)");
    r.exp_slope = std::exp(r.slope);
    r.exp_intercept = std::exp(r.intercept);
    r.log_likelihood = fit.log_likelihood;
    return r;
}

// convenience: fit successes/trials over time points and extract the rate
inline RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& successes,
                        const std::vector<double>& trials) {
    BinomialData d;
    size_t n = t.size();
    d.x = Matrix(n, 2);
    for (size_t i = 0; i < n; ++i) {
        d.x(i, 0) = 1.0;
        d.x(i, 1) = t[i];
    }
    d.successes = successes;
    d.trials = trials;
    d.names = {"(intercept)", "t"};
    return rate_of_change(fit_logistic(d), "t");
}

// ---------------------------------------------------------------------------
// Constant Rate Effect: likelihood-ratio test of slope homogeneity
// ---------------------------------------------------------------------------

struct DegenerateContext : DataError {
    explicit DegenerateContext(const std::string& level)
        : DataError("DegenerateContext", "context '" + level + "' has a constant response") {}
};

struct CreContext {
    std::string label;
    std::vector<double> t;
    std::vector<double> successes;
    std::vector<double> trials;
};

struct CreResult {
    std::vector<std::string> labels;
    std::vector<RateFit> per_context;
    double lr = 0;
    int df = 0;
    double p = 1;
};

inline CreResult cre_test(const std::vector<CreContext>& contexts) {
    if (contexts.size() < 2)
        throw DataError("TooFewContexts", "need at least 2 context levels");
    for (const auto& c : contexts) {
        if (c.t.size() < 2)
            throw DataError("TooFewTimePoints", "context '" + c.label + "' has fewer than 2 time points");
        double s = 0, n = 0;
        for (size_t i = 0; i < c.t.size(); ++i) {
            s += c.successes[i];
            n += c.trials[i];
        }
        if (s == 0 || s == n) throw DegenerateContext(c.label);
    }

    CreResult out;
    out.df = static_cast<int>(contexts.size()) - 1;

    // M1: context-specific slopes (independent fits)
    double ll1 = 0;
    for (const auto& c : contexts) {
        out.labels.push_back(c.label);
        RateFit r = fit_rate(c.t, c.successes, c.trials);
        ll1 += r.log_likelihood;
        out.per_context.push_back(r);
    }

    // M0: per-context intercepts, one common slope
    size_t rows = 0;
    for (const auto& c : contexts) rows += c.t.size();
    size_t p = contexts.size() + 1;
    BinomialData d;
    d.x = Matrix(rows, p);
    d.names.resize(p);
    for (size_t ci = 0; ci < contexts.size(); ++ci) d.names[ci] = "ctx:" + contexts[ci].label;
    d.names[p - 1] = "t";
    size_t r = 0;
    for (size_t ci = 0; ci < contexts.size(); ++ci) {
        for (size_t i = 0; i < contexts[ci].t.size(); ++i, ++r) {
            d.x(r, ci) = 1.0;
            d.x(r, p - 1) = contexts[ci].t[i];
            d.successes.push_back(contexts[ci].successes[i]);
            d.trials.push_back(contexts[ci].trials[i]);
        }
    }
    GlmFit m0 = fit_logistic(d);

    out.lr = 2.0 * (ll1 - m0.log_likelihood);
    if (out.lr < 0) out.lr = 0;  // numerically tiny negatives
    out.p = chi2_sf(out.lr, out.df);
    return out;
}

// ---------------------------------------------------------------------------
// contingency tables
// ---------------------------------------------------------------------------

struct ZeroMargin : DataError {
    ZeroMargin() : DataError("ZeroMargin", "contingency table has a zero row or column margin") {}
};

inline Matrix expected_counts(const Matrix& m) {
    size_t r = m.rows(), c = m.cols();
    std::vector<double> row(r, 0.0), col(c, 0.0);
    double total = 0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            if (m(i, j) < 0) throw DataError("NegativeCount", "counts must be nonnegative");
            row[i] += m(i, j);
            col[j] += m(i, j);
            total += m(i, j);
        }
    for (double v : row)
        if (v <= 0) throw ZeroMargin();
    for (double v : col)
        if (v <= 0) throw ZeroMargin();
    Matrix e(r, c);
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) e(i, j) = row[i] * col[j] / total;
    return e;
}

struct Chi2Result {
    double stat = 0;
    int df = 0;
    double p = 1;
};

inline Chi2Result chi_square(const Matrix& m) {
    Matrix e = expected_counts(m);
    Chi2Result res;
    for (size_t i = 0; i < m.rows(); ++i)
        for (size_t j = 0; j < m.cols(); ++j) {
            double d = m(i, j) - e(i, j);
            res.stat += d * d / e(i, j);
        }
    res.df = static_cast<int>((m.rows() - 1) * (m.cols() - 1));
    res.p = chi2_sf(res.stat, res.df);
    return res;
}

// Two-sided Fisher-Yates exact test for a 2x2 table: sum the hypergeometric
// probabilities of all tables with the observed margins that are no more
// probable than the observed one. Log-gamma arithmetic avoids overflow.
inline double fisher_exact_2x2(long long a, long long b, long long c, long long d) {
    if (a < 0 || b < 0 || c < 0 || d < 0)
        throw DataError("NegativeCount", "counts must be nonnegative");
    long long r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d, n = a + b + c + d;
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) throw ZeroMargin();

    auto log_hyper = [&](long long x) {
        // P(X = x) for X ~ Hypergeometric(n, r1, c1)
        return std::lgamma(r1 + 1) - std::lgamma(x + 1) - std::lgamma(r1 - x + 1) +
               std::lgamma(r2 + 1) - std::lgamma(c1 - x + 1) - std::lgamma(r2 - (c1 - x) + 1) -
               (std::lgamma(n + 1) - std::lgamma(c1 + 1) - std::lgamma(n - c1 + 1));
    };
    long long lo = std::max(0LL, c1 - r2), hi = std::min(r1, c1);
    double lp_obs = log_hyper(a);
    double p = 0;
    for (long long x = lo; x <= hi; ++x) {
        double lp = log_hyper(x);
        if (lp <= lp_obs + 1e-7) p += std::exp(lp);
    }
    return std::min(1.0, p);
}

inline double fisher_exact_2x2(const Matrix& m) {
    if (m.rows() != 2 || m.cols() != 2) throw DataError("NotTwoByTwo", "need a 2x2 table");
    return fisher_exact_2x2(static_cast<long long>(m(0, 0)), static_cast<long long>(m(0, 1)),
                            static_cast<long long>(m(1, 0)), static_cast<long long>(m(1, 1)));
}

inline double distinctiveness(const Matrix& m) { return -std::log10(fisher_exact_2x2(m)); }

// ---------------------------------------------------------------------------
// historical variable-rule combinators
// ---------------------------------------------------------------------------

struct VariableRuleSpec {
    double p0 = 0;
    std::vector<double> effects;
    enum class Mode { Additive, Multiplicative } mode = Mode::Additive;
};

struct VariableRuleResult {
    double p = 0;        // raw combination, possibly outside [0,1]
    bool clamped = false;  // set when the raw value left the unit interval
};

inline VariableRuleResult variable_rule_combine(const VariableRuleSpec& spec) {
    for (double e : spec.effects)
        if (e < 0 || e > 1) throw DomainError("effects must lie in [0,1]");
    if (spec.p0 < 0 || spec.p0 > 1) throw DomainError("p0 must lie in [0,1]");
    VariableRuleResult r;
    if (spec.mode == VariableRuleSpec::Mode::Additive) {
        r.p = spec.p0;
        for (double e : spec.effects) r.p += e;
    } else {
        r.p = spec.p0;
        for (double e : spec.effects) r.p *= e;
    }
    r.clamped = r.p < 0.0 || r.p > 1.0;
    return r;
}

} // namespace diachron
