// Command-line entry point. Every pipeline stage is also a standalone
// subcommand; see README.md for the formats. Exit codes: 0 ok, 2 config,
// 3 data, 4 numeric trouble. Errors go to stderr as one JSON object.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "diachron/bayes.hpp"
#include "diachron/ca.hpp"
#include "diachron/citree.hpp"
#include "diachron/cluster.hpp"
#include "diachron/coding.hpp"
#include "diachron/forest.hpp"
#include "diachron/glm.hpp"
#include "diachron/ingest.hpp"
#include "diachron/jsonl.hpp"
#include "diachron/pipeline.hpp"
#include "diachron/svg.hpp"
#include "diachron/table.hpp"
#include "diachron/tagger.hpp"
#include "diachron/treequery.hpp"

using namespace diachron;
using ojson = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) { return pipeline_detail::slurp(path); }

void emit(const std::string& out, const std::string& bytes) {
    if (out.empty() || out == "-") {
        std::cout << bytes;
        return;
    }
    pipeline_detail::spit(out, bytes);
}

Meta parse_meta(const std::vector<std::string>& kvs) {
    Meta m;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--meta", "expected key=val, got " + kv);
        m[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return m;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// index-sharded parallel loop; results land in preallocated slots so the
// output order is independent of scheduling
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& body) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w]() {
            for (size_t i = static_cast<size_t>(w); i < n; i += static_cast<size_t>(threads))
                body(i);
        });
    for (auto& th : pool) th.join();
}

PeriodMap load_periods(const std::string& path) {
    PeriodMap pm;
    if (path.empty()) return pm;
    auto j = ojson::parse(slurp(path));
    for (const auto& p : j)
        pm.entries.push_back({p.at("label").get<std::string>(), p.at("lo").get<double>(),
                              p.at("hi").get<double>(), p.at("index").get<int>()});
    return pm;
}

ojson rate_json(const RateFit& r) {
    ojson out;
    out["slope"] = r.slope;
    out["intercept"] = r.intercept;
    out["exp_slope"] = r.exp_slope;
    out["exp_intercept"] = r.exp_intercept;
    out["slope_se"] = r.slope_se;
    out["intercept_se"] = r.intercept_se;
    out["log_likelihood"] = r.log_likelihood;
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"diachron: treebank ingestion, tagging, querying, clause coding, and"
                 " probabilistic models of diachronic variation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
    app.add_option("--seed", seed, "master seed for stochastic subcommands");
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--out,-o", out, "output file or directory");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a source corpus into unified JSONL");
    std::string ing_format = "penn", ing_in;
    std::vector<std::string> ing_meta;
    ingest->add_option("--format", ing_format, "penn|tiger|lines");
    ingest->add_option("--meta", ing_meta, "key=val metadata applied to every sentence")
        ->allow_extra_args(false);
    ingest->add_option("input", ing_in)->required();

    // tag train/apply/eval
    auto* tag_cmd = app.add_subcommand("tag", "train, apply, or evaluate the tagger");
    tag_cmd->require_subcommand(1);
    auto* tag_train = tag_cmd->add_subcommand("train", "train a model from tagged JSONL");
    std::string tt_in;
    int tt_sufflen = 10, tt_cutoff = 10, tt_beam = 0;
    std::string tt_open;
    tag_train->add_option("input", tt_in)->required();
    tag_train->add_option("--suffix-len", tt_sufflen);
    tag_train->add_option("--rare-cutoff", tt_cutoff);
    tag_train->add_option("--open-class", tt_open, "comma list; default inferred from rare words");
    auto* tag_apply = tag_cmd->add_subcommand("apply", "tag JSONL with a trained model");
    std::string ta_model, ta_in, ta_layer = "pos";
    tag_apply->add_option("model", ta_model)->required();
    tag_apply->add_option("input", ta_in)->required();
    tag_apply->add_option("--layer", ta_layer, "write tags into pos or pos2");
    tag_apply->add_option("--beam", tt_beam, "beam width (0 = exact)");
    auto* tag_eval = tag_cmd->add_subcommand("eval", "precision/recall/F over target tags");
    std::string te_gold, te_pred, te_targets;
    tag_eval->add_option("--gold", te_gold)->required();
    tag_eval->add_option("--pred", te_pred)->required();
    tag_eval->add_option("--target-tags", te_targets, "comma list, empty = all tags");
    auto* tag_map = tag_cmd->add_subcommand("map", "rewrite pos tags through a mapping table");
    std::string tm_map, tm_in, tm_default;
    tag_map->add_option("--map", tm_map, "TSV: source tag or prefix* -> target")->required();
    tag_map->add_option("input", tm_in)->required();
    tag_map->add_option("--default", tm_default, "target for unmapped tags");

    // query
    auto* query_cmd = app.add_subcommand("query", "evaluate a tree query over unified JSONL");
    std::string q_text, q_in;
    query_cmd->add_option("--q", q_text)->required();
    query_cmd->add_option("input", q_in)->required();

    // code
    auto* code_cmd = app.add_subcommand("code", "turn query matches into the factor table");
    std::string c_corpus, c_matches, c_sidecar, c_verbs, c_freqs, c_periods, c_default = "simple";
    std::string c_summary;
    code_cmd->add_option("--corpus", c_corpus)->required();
    code_cmd->add_option("--matches", c_matches)->required();
    code_cmd->add_option("--sidecar", c_sidecar);
    code_cmd->add_option("--verb-lexicon", c_verbs);
    code_cmd->add_option("--freq-lexicon", c_freqs);
    code_cmd->add_option("--periods", c_periods, "JSON file of {label, lo, hi, index}");
    code_cmd->add_option("--default-verb-class", c_default);
    code_cmd->add_option("--summary", c_summary, "write exclusion counts here");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "binomial logistic regression on the factor table");
    std::string f_table, f_response = "order", f_terms, f_time, f_success = "VO", f_svg;
    fit_cmd->add_option("--table", f_table)->required();
    fit_cmd->add_option("--response", f_response);
    fit_cmd->add_option("--terms", f_terms, "plus-separated model terms");
    fit_cmd->add_option("--time", f_time, "numeric time column: report slope/intercept");
    fit_cmd->add_option("--success", f_success);
    fit_cmd->add_option("--svg", f_svg, "rate plot (requires --time)");

    // cre
    auto* cre_cmd = app.add_subcommand("cre", "likelihood-ratio slope homogeneity test");
    std::string cr_table, cr_time, cr_context, cr_response = "order", cr_success = "VO";
    cre_cmd->add_option("--table", cr_table)->required();
    cre_cmd->add_option("--time", cr_time)->required();
    cre_cmd->add_option("--context", cr_context)->required();
    cre_cmd->add_option("--response", cr_response);
    cre_cmd->add_option("--success", cr_success);

    // ct
    auto* ct_cmd = app.add_subcommand("ct", "2x2 contingency test");
    std::string ct_test = "chi2";
    std::vector<long long> ct_cells;
    ct_cmd->add_option("--test", ct_test, "chi2|fisher");
    ct_cmd->add_option("cells", ct_cells, "a b c d")->expected(4);

    // ca
    auto* ca_cmd = app.add_subcommand("ca", "correspondence analysis of a cross-tab");
    std::string ca_table, ca_rows, ca_cols, ca_norm = "none", ca_svg;
    ca_cmd->add_option("table", ca_table)->required();
    ca_cmd->add_option("--rows", ca_rows)->required();
    ca_cmd->add_option("--cols", ca_cols)->required();
    ca_cmd->add_option("--normalize", ca_norm, "none|rows");
    ca_cmd->add_option("--svg", ca_svg);

    // vnc
    auto* vnc_cmd = app.add_subcommand("vnc", "variability-based neighbor clustering");
    std::string v_table, v_value, v_time, v_cost = "sd", v_svg, v_success = "VO";
    int v_clusters = 0;
    vnc_cmd->add_option("table", v_table)->required();
    vnc_cmd->add_option("--value", v_value)->required();
    vnc_cmd->add_option("--time", v_time)->required();
    vnc_cmd->add_option("--cost", v_cost, "sd|cv");
    vnc_cmd->add_option("--success", v_success, "rate level for categorical value columns");
    vnc_cmd->add_option("--clusters", v_clusters, "also emit a k-cluster cut");
    vnc_cmd->add_option("--svg", v_svg);

    // citree
    auto* citree_cmd = app.add_subcommand("citree", "conditional inference tree");
    std::string t_table, t_response = "order", t_predictors;
    double t_alpha = 0.05;
    int t_perms = 9999, t_min_node = 20;
    citree_cmd->add_option("table", t_table)->required();
    citree_cmd->add_option("--response", t_response);
    citree_cmd->add_option("--predictors", t_predictors)->required();
    citree_cmd->add_option("--alpha", t_alpha);
    citree_cmd->add_option("--permutations", t_perms);
    citree_cmd->add_option("--min-node", t_min_node);

    // rf
    auto* rf_cmd = app.add_subcommand("rf", "random-forest permutation importance");
    std::string r_table, r_response = "order", r_predictors, r_svg;
    int r_trees = 500, r_mtry = 0;
    rf_cmd->add_option("table", r_table)->required();
    rf_cmd->add_option("--response", r_response);
    rf_cmd->add_option("--predictors", r_predictors)->required();
    rf_cmd->add_option("--trees", r_trees);
    rf_cmd->add_option("--mtry", r_mtry);
    rf_cmd->add_option("--svg", r_svg);

    // bayes
    auto* bayes_cmd = app.add_subcommand("bayes", "hierarchical Bayesian logistic regression");
    std::string b_table, b_response = "order", b_fixed, b_random, b_log, b_svg;
    std::vector<std::string> b_refs;
    int b_chains = 4, b_iters = 10000, b_burn = 2000;
    bayes_cmd->add_option("--table", b_table)->required();
    bayes_cmd->add_option("--response", b_response);
    bayes_cmd->add_option("--fixed", b_fixed, "plus-separated fixed terms")->required();
    bayes_cmd->add_option("--random", b_random, "comma-separated grouping columns");
    bayes_cmd->add_option("--log", b_log, "comma list of terms entered as log(value)");
    bayes_cmd->add_option("--ref", b_refs, "term=level reference overrides")
        ->allow_extra_args(false);
    bayes_cmd->add_option("--chains", b_chains);
    bayes_cmd->add_option("--iters", b_iters);
    bayes_cmd->add_option("--burn", b_burn);
    bayes_cmd->add_option("--svg", b_svg, "per-parameter posterior density files");

    // report / pipeline
    auto* report_cmd = app.add_subcommand("report", "verify a run directory and print its summary");
    std::string rp_dir;
    report_cmd->add_option("run_dir", rp_dir)->required();
    auto* pipe_cmd = app.add_subcommand("pipeline", "run a declarative multi-stage config");
    std::string p_config;
    pipe_cmd->add_option("config", p_config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        ojson err;
        err["error"] = {{"type", "ConfigError"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }

    try {
        if (*ingest) {
            auto meta = parse_meta(ing_meta);
            std::string bytes = slurp(ing_in);
            std::vector<AnnotatedSentence> ss;
            if (ing_format == "penn") ss = parse_penn(bytes, meta);
            else if (ing_format == "tiger") ss = parse_tiger_xml(bytes, meta);
            else if (ing_format == "lines") ss = parse_token_lines(bytes, meta);
            else throw ConfigError("--format", "expected penn|tiger|lines");
            emit(out, write_unified(ss));
        } else if (*tag_train) {
            TaggerConfig cfg;
            cfg.max_suffix_len = tt_sufflen;
            cfg.rare_cutoff = tt_cutoff;
            if (!tt_open.empty()) cfg.open_class = split_list(tt_open, ',');
            auto model = train(read_unified(slurp(tt_in)), cfg);
            emit(out, model_to_json(model).dump() + "\n");
        } else if (*tag_apply) {
            auto model = model_from_json(ojson::parse(slurp(ta_model)));
            auto sentences = read_unified(slurp(ta_in));
            // the model is immutable, so sentences decode in parallel
            parallel_for(sentences.size(), threads, [&](size_t si) {
                auto& s = sentences[si];
                std::vector<std::string> words;
                for (const auto& t : s.tokens) words.push_back(t.form);
                auto tags = tag(model, words, tt_beam);
                for (size_t i = 0; i < s.tokens.size(); ++i) {
                    if (ta_layer == "pos2") s.tokens[i].pos2 = tags[i];
                    else s.tokens[i].pos = tags[i];
                }
            });
            emit(out, write_unified(sentences));
        } else if (*tag_map) {
            TagMap map;
            std::istringstream lines(slurp(tm_map));
            std::string line;
            while (std::getline(lines, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || line[0] == '#') continue;
                auto tab = line.find('\t');
                if (tab == std::string::npos) continue;
                map.add(line.substr(0, tab), line.substr(tab + 1));
            }
            if (!tm_default.empty()) map.fallback = tm_default;
            auto r = map_tagset(read_unified(slurp(tm_in)), map);
            emit(out, write_unified(r.sentences));
            if (r.warnings)
                std::cerr << "{\"warnings\":{\"unmapped_tokens\":" << r.warnings << "}}\n";
        } else if (*tag_eval) {
            std::set<std::string> targets;
            for (const auto& t : split_list(te_targets, ',')) targets.insert(t);
            auto rep = evaluate(read_unified(slurp(te_gold)), read_unified(slurp(te_pred)), targets);
            ojson j;
            j["precision"] = rep.precision;
            j["recall"] = rep.recall;
            j["f"] = rep.f;
            ojson conf = ojson::array();
            for (const auto& [gp, n] : rep.confusion) {
                ojson c;
                c["gold"] = gp.first;
                c["predicted"] = gp.second;
                c["count"] = n;
                conf.push_back(c);
            }
            j["confusion"] = conf;
            emit(out, j.dump(2) + "\n");
        } else if (*query_cmd) {
            auto sentences = read_unified(slurp(q_in));
            auto ast = parse_query(q_text);
            // per-sentence evaluation in parallel, merged in sentence order
            std::vector<std::vector<ExtractRecord>> per(sentences.size());
            std::exception_ptr first_error;
            std::mutex err_mutex;
            parallel_for(sentences.size(), threads, [&](size_t si) {
                Treebank one;
                one.sentences = {sentences[si]};
                try {
                    per[si] = extract(one, ast);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
            if (first_error) std::rethrow_exception(first_error);
            std::string lines;
            for (const auto& recs : per)
                for (const auto& r : recs) {
                    ojson j;
                    j["sentence_id"] = r.sentence_id;
                    ojson b = ojson::object();
                    for (const auto& [v, id] : r.bindings) b[v] = id;
                    j["bindings"] = b;
                    j["clause_root"] = r.clause_root;
                    lines += j.dump() + "\n";
                }
            emit(out, lines);
        } else if (*code_cmd) {
            auto sentences = read_unified(slurp(c_corpus));
            std::map<std::string, const AnnotatedSentence*> by_id;
            for (const auto& s : sentences) by_id[s.id] = &s;
            VerbLexicon verbs;
            if (!c_verbs.empty()) verbs = VerbLexicon::from_tsv(slurp(c_verbs));
            if (auto cls = verb_class_from(c_default)) verbs.default_class = *cls;
            FrequencyLexicon freqs;
            if (!c_freqs.empty()) freqs = FrequencyLexicon::from_tsv(slurp(c_freqs));
            PeriodMap periods = load_periods(c_periods);
            std::map<std::string, long long> corpus_counts;
            for (const auto& s : sentences)
                for (const auto& t : s.tokens) corpus_counts[t.lemma.value_or(t.form)] += 1;
            std::vector<ClauseRecord> records;
            std::map<std::string, int> exclusions;
            std::istringstream lines(slurp(c_matches));
            std::string line;
            while (std::getline(lines, line)) {
                if (line.empty()) continue;
                auto j = ojson::parse(line);
                ExtractRecord r;
                r.sentence_id = j.at("sentence_id").get<std::string>();
                r.clause_root = j.at("clause_root").get<std::string>();
                auto it = by_id.find(r.sentence_id);
                if (it == by_id.end()) continue;
                try {
                    auto coded = code_clause(*it->second, r, verbs, freqs, corpus_counts, periods);
                    if (coded.excluded) exclusions[coded.exclusion_reason] += 1;
                    else records.push_back(coded.record);
                } catch (const NoInfinitive&) {
                    exclusions["no-infinitive"] += 1;
                } catch (const NoObject&) {
                    exclusions["no-object"] += 1;
                }
            }
            if (!c_sidecar.empty())
                attach_annotations(records, read_sidecar_csv(slurp(c_sidecar)));
            emit(out, write_csv(build_factor_table(records)));
            if (!c_summary.empty()) {
                ojson sj;
                sj["records"] = records.size();
                ojson ex = ojson::object();
                for (const auto& [k, v] : exclusions) ex[k] = v;
                sj["excluded"] = ex;
                pipeline_detail::spit(c_summary, sj.dump(2) + "\n");
            }
        } else if (*fit_cmd) {
            auto table = read_csv(slurp(f_table));
            if (!f_time.empty()) {
                auto series = binomial_series(table, f_time, f_response, f_success);
                auto r = fit_rate(series.t, series.successes, series.trials);
                emit(out, rate_json(r).dump(2) + "\n");
                if (!f_svg.empty())
                    pipeline_detail::spit(
                        f_svg, emit_rate_plot(r, series.t, series.successes, series.trials));
            } else {
                DesignSpec spec;
                spec.terms = split_list(f_terms, '+');
                auto design = build_design(table, f_response, spec);
                auto fit = fit_logistic(design.data);
                ojson j;
                j["converged"] = fit.converged;
                j["iterations"] = fit.iterations;
                j["deviance"] = fit.deviance;
                j["log_likelihood"] = fit.log_likelihood;
                ojson coefs = ojson::object();
                for (size_t i = 0; i < fit.names.size(); ++i) {
                    ojson c;
                    c["estimate"] = fit.beta[i];
                    c["se"] = std::sqrt(fit.covariance(i, i));
                    coefs[fit.names[i]] = c;
                }
                j["coefficients"] = coefs;
                j["success_level"] = design.success_level;
                emit(out, j.dump(2) + "\n");
            }
        } else if (*cre_cmd) {
            auto table = read_csv(slurp(cr_table));
            std::map<std::string, std::map<double, std::pair<double, double>>> cells;
            const auto& rc = table.column(cr_response);
            const auto& cc = table.column(cr_context);
            for (size_t i = 0; i < table.n_rows(); ++i) {
                auto& cell = cells[cc.cells[i]][table.as_real(cr_time, i)];
                cell.second += 1;
                if (rc.cells[i] == cr_success) cell.first += 1;
            }
            std::vector<CreContext> ctx;
            for (auto& [label, series] : cells) {
                CreContext c;
                c.label = label;
                for (auto& [t, sn] : series) {
                    c.t.push_back(t);
                    c.successes.push_back(sn.first);
                    c.trials.push_back(sn.second);
                }
                ctx.push_back(std::move(c));
            }
            auto res = cre_test(ctx);
            ojson j;
            j["lr"] = res.lr;
            j["df"] = res.df;
            j["p"] = res.p;
            ojson per = ojson::object();
            for (size_t i = 0; i < res.labels.size(); ++i)
                per[res.labels[i]] = rate_json(res.per_context[i]);
            j["contexts"] = per;
            emit(out, j.dump(2) + "\n");
        } else if (*ct_cmd) {
            Matrix m = Matrix::from_rows(
                {{static_cast<double>(ct_cells[0]), static_cast<double>(ct_cells[1])},
                 {static_cast<double>(ct_cells[2]), static_cast<double>(ct_cells[3])}});
            ojson j;
            if (ct_test == "chi2") {
                auto r = chi_square(m);
                j["stat"] = r.stat;
                j["df"] = r.df;
                j["p"] = r.p;
                auto e = expected_counts(m);
                j["expected"] = {{e(0, 0), e(0, 1)}, {e(1, 0), e(1, 1)}};
            } else if (ct_test == "fisher") {
                double p = fisher_exact_2x2(m);
                j["p"] = p;
                j["distinctiveness"] = -std::log10(p);
            } else {
                throw ConfigError("--test", "expected chi2|fisher");
            }
            emit(out, j.dump(2) + "\n");
        } else if (*ca_cmd) {
            auto table = read_csv(slurp(ca_table));
            auto ct = table.cross_tab(ca_rows, ca_cols);
            Matrix m = ct.counts;
            if (ca_norm == "rows") {
                for (size_t i = 0; i < m.rows(); ++i) {
                    double s = 0;
                    for (size_t jj = 0; jj < m.cols(); ++jj) s += m(i, jj);
                    if (s > 0)
                        for (size_t jj = 0; jj < m.cols(); ++jj) m(i, jj) /= s;
                }
            }
            auto sol = correspondence_analysis(m);
            ojson j;
            j["total_inertia"] = sol.total_inertia;
            j["inertia_share"] = sol.inertia_share;
            j["singular_values"] = sol.singular_values;
            emit(out, j.dump(2) + "\n");
            if (!ca_svg.empty())
                pipeline_detail::spit(ca_svg, emit_ca_plot(sol, ct.row_labels, ct.col_labels));
        } else if (*vnc_cmd) {
            auto table = read_csv(slurp(v_table));
            const auto& vc = table.column(v_value);
            bool categorical = vc.type == CellType::Categorical;
            std::map<double, std::pair<double, double>> acc;
            for (size_t i = 0; i < table.n_rows(); ++i) {
                auto& a = acc[table.as_real(v_time, i)];
                a.first += categorical ? (vc.cells[i] == v_success ? 1.0 : 0.0)
                                       : table.as_real(v_value, i);
                a.second += 1;
            }
            std::vector<std::vector<double>> series;
            std::vector<std::string> labels;
            for (auto& [t, sv] : acc) {
                series.push_back({sv.first / sv.second});
                char buf[32];
                std::snprintf(buf, sizeof buf, "%g", t);
                labels.push_back(buf);
            }
            auto dend = vnc(series, labels, v_cost == "cv" ? VncCost::Cv : VncCost::Sd);
            ojson j;
            j["leaves"] = dend.leaves;
            ojson merges = ojson::array();
            for (const auto& m : dend.merges) {
                ojson mj;
                mj["left"] = m.left;
                mj["right"] = m.right;
                mj["height"] = m.height;
                merges.push_back(mj);
            }
            j["merges"] = merges;
            if (v_clusters > 0) j["cut"] = dend.cut(v_clusters);
            emit(out, j.dump(2) + "\n");
            if (!v_svg.empty()) pipeline_detail::spit(v_svg, emit_dendrogram(dend));
        } else if (*citree_cmd) {
            auto table = read_csv(slurp(t_table));
            CiTreeConfig cfg{t_alpha, t_perms, t_min_node, seed};
            auto tree = citree(table, t_response, split_list(t_predictors, ','), cfg);
            std::function<ojson(const CiNode&)> dump = [&](const CiNode& n) {
                ojson j;
                j["n"] = n.n;
                if (n.is_leaf) {
                    ojson counts = ojson::object();
                    for (const auto& [k, v] : n.response_counts) counts[k] = v;
                    j["counts"] = counts;
                } else {
                    j["predictor"] = n.predictor;
                    j["p"] = n.p_adjusted;
                    if (n.numeric_split) j["threshold"] = n.threshold;
                    else j["left_levels"] = n.left_levels;
                    j["left"] = dump(*n.left);
                    j["right"] = dump(*n.right);
                }
                return j;
            };
            emit(out, dump(*tree.root).dump(2) + "\n");
        } else if (*rf_cmd) {
            auto table = read_csv(slurp(r_table));
            ForestConfig cfg{r_trees, r_mtry, 5, seed, threads};
            auto rep = rf_importance(table, r_response, split_list(r_predictors, ','), cfg);
            ojson j;
            ojson imp = ojson::object();
            for (size_t i = 0; i < rep.predictors.size(); ++i)
                imp[rep.predictors[i]] = rep.importance[i];
            j["importance"] = imp;
            j["threshold"] = rep.threshold;
            j["oob_accuracy"] = rep.oob_accuracy;
            emit(out, j.dump(2) + "\n");
            if (!r_svg.empty()) pipeline_detail::spit(r_svg, emit_importance_plot(rep));
        } else if (*bayes_cmd) {
            auto table = read_csv(slurp(b_table));
            BayesModelSpec spec;
            spec.fixed_terms = split_list(b_fixed, '+');
            spec.random_groups = split_list(b_random, ',');
            for (const auto& t : split_list(b_log, ',')) spec.log_terms.insert(t);
            for (const auto& kv : b_refs) {
                auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--ref", "expected term=level");
                spec.references[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            auto design = build_model(table, b_response, spec);
            McmcConfig cfg{b_chains, b_iters, b_burn, seed, threads};
            auto post = sample(design, cfg);
            auto summary = summarize(post);
            auto diag = diagnose(post);
            ojson j;
            j["success_level"] = design.success_level;
            j["seed"] = seed;
            ojson params = ojson::array();
            for (size_t i = 0; i < summary.params.size(); ++i) {
                const auto& p = summary.params[i];
                ojson pj;
                pj["name"] = p.name;
                pj["mean"] = p.mean;
                pj["median"] = p.median;
                pj["hdi_lo"] = p.hdi_lo;
                pj["hdi_hi"] = p.hdi_hi;
                pj["credible"] = p.credible;
                pj["sign"] = p.sign;
                pj["rhat"] = diag.rhat[i];
                pj["ess"] = diag.ess[i];
                params.push_back(pj);
            }
            j["parameters"] = params;
            emit(out, j.dump(2) + "\n");
            if (!b_svg.empty()) {
                std::string base = b_svg;
                if (base.size() > 4 && base.substr(base.size() - 4) == ".svg")
                    base = base.substr(0, base.size() - 4);
                for (size_t i = 0; i < design.fixed_names.size(); ++i) {
                    std::string cleaned;
                    for (char c : post.names[i])
                        cleaned += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
                    pipeline_detail::spit(base + "-" + cleaned + ".svg",
                                          emit_posterior_plot(post.names[i], post.flat(i),
                                                              summary.params[i].hdi_lo,
                                                              summary.params[i].hdi_hi));
                }
            }
        } else if (*report_cmd) {
            verify_run(rp_dir);
            emit(out, report_text(rp_dir));
        } else if (*pipe_cmd) {
            if (out.empty()) throw ConfigError("--out", "pipeline needs an output directory");
            run_pipeline(p_config, out);
        }
    } catch (const Error& e) {
        ojson err;
        err["error"] = {{"type", e.kind()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        switch (e.category()) {
            case Error::Category::Config: return 2;
            case Error::Category::Numeric: return 4;
            default: return 3;
        }
    } catch (const std::exception& e) {
        ojson err;
        err["error"] = {{"type", "InternalError"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
    return 0;
}
