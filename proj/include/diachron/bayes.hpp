#pragma once

// Hierarchical Bayesian logistic regression with random intercepts.
// Likelihood: y[i] ~ Bernoulli(expit(x[i] beta + sum_g u_g[group_g(i)])).
// Priors: beta_j ~ Normal(0, precision prior_precision); every random
// intercept (all groupings pooled) ~ Normal(0, tau); tau ~ Gamma(a0, b0)
// (shape/rate). Fixed effects and intercepts move by per-coordinate adaptive
// random-walk Metropolis (target acceptance 0.44, adaptation during burn-in
// only); tau has a conjugate Gibbs step: tau | u ~ Gamma(a0 + M/2,
// b0 + sum u^2 / 2). Chains are independent and fully deterministic given
// (seed, chain index).

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "diachron/glm.hpp"
#include "diachron/rng.hpp"
#include "diachron/table.hpp"

namespace diachron {

struct NonFiniteLikelihood : NumericError {
    explicit NonFiniteLikelihood(size_t row)
        : NumericError("NonFiniteLikelihood",
                       "non-finite value at data row " + std::to_string(row)) {}
};

struct BayesModelSpec {
    std::vector<std::string> fixed_terms;
    std::map<std::string, std::string> references;  // per categorical term
    std::set<std::string> log_terms;                // numeric terms entered as log(value)
    std::vector<std::string> random_groups;         // grouping columns (author, word, ...)
    double prior_precision = 1e-12;                 // on fixed effects
    double tau_a0 = 0.001, tau_b0 = 0.001;          // hyperprior on the shared precision
};

struct BayesDesign {
    Matrix x;
    std::vector<double> y;
    std::vector<std::string> fixed_names;
    std::string success_level;
    struct Grouping {
        std::string column;
        std::vector<std::string> levels;
        std::vector<int> index;  // per row
    };
    std::vector<Grouping> groupings;
    BayesModelSpec spec;

    size_t n_random() const {
        size_t m = 0;
        for (const auto& g : groupings) m += g.levels.size();
        return m;
    }
};

inline BayesDesign build_model(const FactorTable& t, const std::string& response,
                               const BayesModelSpec& spec) {
    BayesDesign d;
    d.spec = spec;
    DesignSpec ds;
    ds.terms = spec.fixed_terms;
    ds.references = spec.references;
    auto base = build_design(t, response, ds);
    d.x = base.data.x;
    d.y = base.data.successes;
    d.fixed_names = base.data.names;
    d.success_level = base.success_level;
    // log-transformed numeric terms
    for (const auto& term : spec.log_terms) {
        for (size_t j = 0; j < d.fixed_names.size(); ++j) {
            if (d.fixed_names[j] != term) continue;
            for (size_t i = 0; i < d.x.rows(); ++i) {
                if (!(d.x(i, j) > 0)) throw NonFiniteLikelihood(i);
                d.x(i, j) = std::log(d.x(i, j));
            }
            d.fixed_names[j] = "log(" + term + ")";
        }
    }
    for (size_t i = 0; i < d.x.rows(); ++i)
        for (size_t j = 0; j < d.x.cols(); ++j)
            if (!std::isfinite(d.x(i, j))) throw NonFiniteLikelihood(i);

    for (const auto& g : spec.random_groups) {
        BayesDesign::Grouping grp;
        grp.column = g;
        grp.levels = t.levels(g);
        const auto& c = t.column(g);
        grp.index.resize(t.n_rows());
        for (size_t i = 0; i < t.n_rows(); ++i)
            grp.index[i] = static_cast<int>(
                std::lower_bound(grp.levels.begin(), grp.levels.end(), c.cells[i]) -
                grp.levels.begin());
        d.groupings.push_back(std::move(grp));
    }
    return d;
}

struct McmcConfig {
    int chains = 4;
    int iters = 10000;  // post burn-in draws per chain
    int burn = 2000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct Posterior {
    std::vector<std::string> names;  // fixed..., u[...]..., tau?
    size_t n_fixed = 0;
    // chains[c] is a draws x params matrix
    std::vector<Matrix> chains;
    std::vector<std::vector<double>> lp;  // log posterior per draw per chain
    std::vector<double> acceptance;       // mean acceptance rate per chain
    std::uint64_t seed = 0;

    std::vector<double> flat(size_t param) const {
        std::vector<double> out;
        for (const auto& ch : chains)
            for (size_t i = 0; i < ch.rows(); ++i) out.push_back(ch(i, param));
        return out;
    }
    int param_index(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
};

namespace bayes_detail {

inline double bern_ll(double y, double eta) {
    // log Bernoulli(y | expit(eta)), stable at large |eta|
    return y * (-std::log1p(std::exp(-eta))) + (1 - y) * (-eta - std::log1p(std::exp(-eta)));
}

struct ChainRunner {
    const BayesDesign& d;
    const McmcConfig& cfg;
    int chain_index;

    Matrix draws;
    std::vector<double> lp_out;
    double acceptance = 0;

    void run() {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(chain_index));
        size_t n = d.y.size(), p = d.x.cols(), M = d.n_random();
        bool has_tau = M > 0;
        size_t total_params = p + M + (has_tau ? 1 : 0);

        std::vector<double> beta(p, 0.0), u(M, 0.0);
        double tau = 1.0;

        // nonzero-row lists per fixed column and per random level
        std::vector<std::vector<int>> fixed_rows(p);
        for (size_t j = 0; j < p; ++j)
            for (size_t i = 0; i < n; ++i)
                if (d.x(i, j) != 0.0) fixed_rows[j].push_back(static_cast<int>(i));
        std::vector<std::vector<int>> level_rows(M);
        std::vector<size_t> group_offset(d.groupings.size(), 0);
        {
            size_t off = 0;
            for (size_t g = 0; g < d.groupings.size(); ++g) {
                group_offset[g] = off;
                for (size_t i = 0; i < n; ++i)
                    level_rows[off + d.groupings[g].index[i]].push_back(static_cast<int>(i));
                off += d.groupings[g].levels.size();
            }
        }

        std::vector<double> eta(n, 0.0);
        double loglik = 0;
        for (size_t i = 0; i < n; ++i) loglik += bern_ll(d.y[i], 0.0);

        std::vector<double> scale(p + M, 1.0);
        std::vector<int> acc(p + M, 0), tries(p + M, 0);
        long long total_acc = 0, total_tries = 0;

        draws = Matrix(cfg.iters, total_params);
        lp_out.resize(cfg.iters);

        auto log_prior = [&]() {
            double lp = 0;
            for (size_t j = 0; j < p; ++j) lp += -0.5 * d.spec.prior_precision * beta[j] * beta[j];
            if (has_tau) {
                double su2 = 0;
                for (double v : u) su2 += v * v;
                lp += 0.5 * M * std::log(tau) - 0.5 * tau * su2;
                lp += (d.spec.tau_a0 - 1.0) * std::log(tau) - d.spec.tau_b0 * tau;
            }
            return lp;
        };

        int batch = 0;
        for (int it = 0; it < cfg.burn + cfg.iters; ++it) {
            bool adapting = it < cfg.burn;
            // fixed effects
            for (size_t j = 0; j < p; ++j) {
                double prop = beta[j] + scale[j] * rng.normal();
                double dll = 0;
                for (int i : fixed_rows[j]) {
                    double neta = eta[i] + d.x(i, j) * (prop - beta[j]);
                    dll += bern_ll(d.y[i], neta) - bern_ll(d.y[i], eta[i]);
                }
                double dprior = -0.5 * d.spec.prior_precision * (prop * prop - beta[j] * beta[j]);
                ++tries[j];
                ++total_tries;
                if (std::log(rng.uniform() + 1e-300) < dll + dprior) {
                    for (int i : fixed_rows[j]) eta[i] += d.x(i, j) * (prop - beta[j]);
                    beta[j] = prop;
                    loglik += dll;
                    ++acc[j];
                    ++total_acc;
                }
            }
            // random intercepts
            for (size_t m = 0; m < M; ++m) {
                double prop = u[m] + scale[p + m] * rng.normal();
                double dll = 0;
                for (int i : level_rows[m]) {
                    double neta = eta[i] + (prop - u[m]);
                    dll += bern_ll(d.y[i], neta) - bern_ll(d.y[i], eta[i]);
                }
                double dprior = -0.5 * tau * (prop * prop - u[m] * u[m]);
                ++tries[p + m];
                ++total_tries;
                if (std::log(rng.uniform() + 1e-300) < dll + dprior) {
                    for (int i : level_rows[m]) eta[i] += (prop - u[m]);
                    u[m] = prop;
                    loglik += dll;
                    ++acc[p + m];
                    ++total_acc;
                }
            }
            // conjugate Gibbs step for the shared precision
            if (has_tau) {
                double su2 = 0;
                for (double v : u) su2 += v * v;
                tau = rng.gamma(d.spec.tau_a0 + 0.5 * static_cast<double>(M),
                                d.spec.tau_b0 + 0.5 * su2);
            }

            if (adapting && (it + 1) % 50 == 0) {
                ++batch;
                for (size_t k = 0; k < scale.size(); ++k) {
                    double rate = tries[k] ? static_cast<double>(acc[k]) / tries[k] : 0.44;
                    scale[k] *= std::exp(rate - 0.44);
                    acc[k] = 0;
                    tries[k] = 0;
                }
            }
            if ((it + 1) % 500 == 0) {
                // fresh accumulation guards against float drift in the deltas
                loglik = 0;
                for (size_t i = 0; i < n; ++i) loglik += bern_ll(d.y[i], eta[i]);
            }
            if (!adapting) {
                int row = it - cfg.burn;
                for (size_t j = 0; j < p; ++j) draws(row, j) = beta[j];
                for (size_t m = 0; m < M; ++m) draws(row, p + m) = u[m];
                if (has_tau) draws(row, p + M) = tau;
                lp_out[row] = loglik + log_prior();
            }
        }
        acceptance = total_tries ? static_cast<double>(total_acc) / total_tries : 0.0;
    }
};

} // namespace bayes_detail

inline Posterior sample(const BayesDesign& design, const McmcConfig& cfg = {}) {
    Posterior post;
    post.seed = cfg.seed;
    post.n_fixed = design.x.cols();
    post.names = design.fixed_names;
    for (const auto& g : design.groupings)
        for (const auto& lv : g.levels) post.names.push_back("u[" + g.column + "=" + lv + "]");
    if (design.n_random() > 0) post.names.push_back("tau");

    std::vector<bayes_detail::ChainRunner> runners;
    for (int c = 0; c < cfg.chains; ++c) runners.push_back({design, cfg, c, {}, {}, 0});

    int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1) {
        for (auto& r : runners) r.run();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_threads; ++w)
            pool.emplace_back([&, w]() {
                for (size_t c = w; c < runners.size(); c += static_cast<size_t>(n_threads))
                    runners[c].run();
            });
        for (auto& th : pool) th.join();
    }
    for (auto& r : runners) {
        post.chains.push_back(std::move(r.draws));
        post.lp.push_back(std::move(r.lp_out));
        post.acceptance.push_back(r.acceptance);
    }
    return post;
}

// ---------------------------------------------------------------------------
// summaries
// ---------------------------------------------------------------------------

// shortest contiguous interval containing ceil(mass * S) sorted draws
inline std::pair<double, double> hdi(std::vector<double> draws, double mass = 0.95) {
    if (draws.size() < 2) throw DataError("TooFewDraws", "hdi needs at least 2 draws");
    std::sort(draws.begin(), draws.end());
    size_t S = draws.size();
    size_t k = static_cast<size_t>(std::ceil(mass * static_cast<double>(S)));
    k = std::min(std::max<size_t>(k, 1), S);
    size_t best = 0;
    double width = draws[k - 1] - draws[0];
    for (size_t i = 0; i + k <= S; ++i) {
        double w = draws[i + k - 1] - draws[i];
        if (w < width) {
            width = w;
            best = i;
        }
    }
    return {draws[best], draws[best + k - 1]};
}

struct ParameterSummary {
    std::string name;
    double mean = 0, median = 0;
    double hdi_lo = 0, hdi_hi = 0;
    bool credible = false;  // 95% HDI excludes zero
    int sign = 0;           // +1 / -1 when credible
};

struct PosteriorSummary {
    std::vector<ParameterSummary> params;

    const ParameterSummary& operator[](const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p;
        throw MissingTerm(name);
    }
};

inline PosteriorSummary summarize(const Posterior& post, double mass = 0.95) {
    PosteriorSummary s;
    for (size_t j = 0; j < post.names.size(); ++j) {
        auto draws = post.flat(j);
        ParameterSummary ps;
        ps.name = post.names[j];
        double sum = 0;
        for (double v : draws) sum += v;
        ps.mean = sum / static_cast<double>(draws.size());
        std::vector<double> sorted = draws;
        std::sort(sorted.begin(), sorted.end());
        ps.median = sorted[sorted.size() / 2];
        auto [lo, hi] = hdi(draws, mass);
        ps.hdi_lo = lo;
        ps.hdi_hi = hi;
        ps.credible = lo > 0 || hi < 0;
        ps.sign = ps.credible ? (lo > 0 ? 1 : -1) : 0;
        s.params.push_back(ps);
    }
    return s;
}

struct Diagnostics {
    std::vector<std::string> names;
    std::vector<double> rhat;  // split R-hat
    std::vector<double> ess;
};

inline Diagnostics diagnose(const Posterior& post) {
    Diagnostics d;
    d.names = post.names;
    size_t P = post.names.size();
    for (size_t j = 0; j < P; ++j) {
        // split every chain in half
        std::vector<std::vector<double>> seqs;
        for (const auto& ch : post.chains) {
            size_t S = ch.rows(), h = S / 2;
            std::vector<double> a, b;
            for (size_t i = 0; i < h; ++i) a.push_back(ch(i, j));
            for (size_t i = h; i < 2 * h; ++i) b.push_back(ch(i, j));
            seqs.push_back(a);
            seqs.push_back(b);
        }
        size_t m = seqs.size(), nn = seqs[0].size();
        std::vector<double> means(m), vars(m);
        double grand = 0;
        for (size_t q = 0; q < m; ++q) {
            double mu = 0;
            for (double v : seqs[q]) mu += v;
            mu /= static_cast<double>(nn);
            means[q] = mu;
            grand += mu;
            double var = 0;
            for (double v : seqs[q]) var += (v - mu) * (v - mu);
            vars[q] = var / static_cast<double>(nn - 1);
        }
        grand /= static_cast<double>(m);
        double B = 0, W = 0;
        for (size_t q = 0; q < m; ++q) {
            B += (means[q] - grand) * (means[q] - grand);
            W += vars[q];
        }
        B *= static_cast<double>(nn) / static_cast<double>(m - 1);
        W /= static_cast<double>(m);
        double varplus = (static_cast<double>(nn - 1) / nn) * W + B / static_cast<double>(nn);
        d.rhat.push_back(W > 0 ? std::sqrt(varplus / W) : 1.0);

        // ESS via averaged autocorrelations, truncated at the first negative
        // pair sum
        double rho_sum = 0;
        for (size_t t = 1; t + 1 < nn; t += 2) {
            double rho_t = 0, rho_t1 = 0;
            for (size_t q = 0; q < m; ++q) {
                double c0 = vars[q] > 0 ? vars[q] : 1e-300;
                double a = 0, b = 0;
                for (size_t i = 0; i + t < nn; ++i)
                    a += (seqs[q][i] - means[q]) * (seqs[q][i + t] - means[q]);
                for (size_t i = 0; i + t + 1 < nn; ++i)
                    b += (seqs[q][i] - means[q]) * (seqs[q][i + t + 1] - means[q]);
                rho_t += a / (static_cast<double>(nn) * c0);
                rho_t1 += b / (static_cast<double>(nn) * c0);
            }
            rho_t /= static_cast<double>(m);
            rho_t1 /= static_cast<double>(m);
            if (rho_t + rho_t1 < 0) break;
            rho_sum += rho_t + rho_t1;
            if (t > 200) break;
        }
        double denom = 1.0 + 2.0 * rho_sum;
        d.ess.push_back(static_cast<double>(m * nn) / std::max(denom, 1e-6));
    }
    return d;
}

// the conjugate Gibbs draw for tau in isolation (also exercised by tests)
inline double tau_gibbs_draw(Rng& rng, double a0, double b0, const std::vector<double>& u) {
    double su2 = 0;
    for (double v : u) su2 += v * v;
    return rng.gamma(a0 + 0.5 * static_cast<double>(u.size()), b0 + 0.5 * su2);
}

} // namespace diachron
