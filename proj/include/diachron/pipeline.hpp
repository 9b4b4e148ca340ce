#pragma once

// Pipeline orchestration: one declarative JSON config runs ingest -> tag ->
// query -> code -> fits in order inside a run directory. Every stage records
// its input hashes and its derived seed in manifest.json; reruns with the
// same config and seed are byte-identical (timestamps live only in the
// manifest). Each stage also exists as a standalone CLI subcommand.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diachron/bayes.hpp"
#include "diachron/ca.hpp"
#include "diachron/citree.hpp"
#include "diachron/cluster.hpp"
#include "diachron/coding.hpp"
#include "diachron/corpus.hpp"
#include "diachron/forest.hpp"
#include "diachron/glm.hpp"
#include "diachron/ingest.hpp"
#include "diachron/jsonl.hpp"
#include "diachron/svg.hpp"
#include "diachron/table.hpp"
#include "diachron/tagger.hpp"
#include "diachron/treequery.hpp"

namespace diachron {

struct StageFailure : Error {
    StageFailure(const std::string& stage, const std::string& cause)
        : Error("StageFailure", "stage '" + stage + "': " + cause) {}
};

struct IncompleteRun : DataError {
    explicit IncompleteRun(const std::string& why) : DataError("IncompleteRun", why) {}
};

namespace pipeline_detail {

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("FileNotFound", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& bytes) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    out << bytes;
    if (!out) throw DataError("WriteFailed", path);
}

} // namespace pipeline_detail

// ---------------------------------------------------------------------------
// shared stage primitives (used by both the pipeline and the standalone CLI)
// ---------------------------------------------------------------------------

struct OvvoTabulation {
    std::vector<std::string> periods;
    std::vector<long long> ov, vo;
};

inline OvvoTabulation tabulate_ovvo(const FactorTable& t) {
    OvvoTabulation tab;
    auto ct = t.cross_tab("period_cluster", "order");
    tab.periods = ct.row_labels;
    int ov_col = -1, vo_col = -1;
    for (size_t j = 0; j < ct.col_labels.size(); ++j) {
        if (ct.col_labels[j] == "OV") ov_col = static_cast<int>(j);
        if (ct.col_labels[j] == "VO") vo_col = static_cast<int>(j);
    }
    for (size_t i = 0; i < ct.row_labels.size(); ++i) {
        tab.ov.push_back(ov_col >= 0 ? static_cast<long long>(ct.counts(i, ov_col)) : 0);
        tab.vo.push_back(vo_col >= 0 ? static_cast<long long>(ct.counts(i, vo_col)) : 0);
    }
    return tab;
}

// successes/trials per value of a time column (already numeric)
struct BinomialSeries {
    std::vector<double> t, successes, trials;
};

inline BinomialSeries binomial_series(const FactorTable& tab, const std::string& time_col,
                                      const std::string& response, const std::string& success) {
    std::map<double, std::pair<double, double>> cells;
    const auto& rc = tab.column(response);
    for (size_t i = 0; i < tab.n_rows(); ++i) {
        double t = tab.as_real(time_col, i);
        cells[t].second += 1;
        if (rc.cells[i] == success) cells[t].first += 1;
    }
    BinomialSeries s;
    for (auto& [t, sn] : cells) {
        s.t.push_back(t);
        s.successes.push_back(sn.first);
        s.trials.push_back(sn.second);
    }
    return s;
}

inline std::vector<SidecarRow> read_sidecar_csv(const std::string& bytes) {
    auto t = read_csv(bytes);
    std::vector<SidecarRow> rows;
    if (t.n_rows() == 0) return rows;
    for (size_t i = 0; i < t.n_rows(); ++i) {
        SidecarRow r;
        r.text_id = t.column("text_id").cells[i];
        r.clause_id = t.column("clause_id").cells[i];
        if (t.column_index("info_status") >= 0) r.info_status = t.column("info_status").cells[i];
        if (t.column_index("info_relevance") >= 0)
            r.info_relevance = t.column("info_relevance").cells[i];
        if (t.column_index("animacy") >= 0) r.animacy = t.column("animacy").cells[i];
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// pipeline runner
// ---------------------------------------------------------------------------

class Pipeline {
public:
    Pipeline(const std::string& config_path, const std::string& out_dir)
        : config_path_(config_path), out_(out_dir) {
        std::string bytes;
        try {
            bytes = pipeline_detail::slurp(config_path);
        } catch (const Error& e) {
            throw ConfigError(config_path, e.what());
        }
        config_ = nlohmann::ordered_json::parse(bytes, nullptr, false);
        if (config_.is_discarded()) throw ConfigError(config_path, "not valid JSON");
        if (!config_.contains("stages") || !config_["stages"].is_array())
            throw ConfigError(config_path, "missing 'stages' array");
        config_hash_ = pipeline_detail::fnv1a_hex(bytes);
        seed_ = config_.value("seed", 1ULL);
        threads_ = config_.value("threads", 1);
    }

    void run() {
        namespace fs = std::filesystem;
        fs::create_directories(out_);
        manifest_ = nlohmann::ordered_json::object();
        manifest_["config_hash"] = config_hash_;
        manifest_["seed"] = seed_;
        manifest_["stages"] = nlohmann::ordered_json::array();
        std::uint64_t stage_counter = 0;
        for (const auto& st : config_["stages"]) {
            std::string kind = st.value("stage", "");
            if (kind.empty()) throw ConfigError(config_path_, "stage without 'stage' field");
            nlohmann::ordered_json entry;
            entry["stage"] = kind;
            entry["seed"] = splitmix64(seed_ ^ stage_counter);
            inputs_.clear();
            outputs_.clear();
            try {
                dispatch(kind, st, splitmix64(seed_ ^ stage_counter));
            } catch (const Error& e) {
                throw StageFailure(kind, e.what());
            } catch (const std::exception& e) {
                throw StageFailure(kind, e.what());
            }
            entry["inputs"] = inputs_;
            entry["outputs"] = outputs_;
            manifest_["stages"].push_back(entry);
            ++stage_counter;
        }
        manifest_["created_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        pipeline_detail::spit(out_ + "/manifest.json", manifest_.dump(2) + "\n");
    }

private:
    std::string read_input(const std::string& path) {
        std::string full = resolve(path);
        std::string bytes = pipeline_detail::slurp(full);
        nlohmann::ordered_json rec;
        rec["path"] = path;
        rec["hash"] = pipeline_detail::fnv1a_hex(bytes);
        inputs_.push_back(rec);
        return bytes;
    }

    void write_output(const std::string& path, const std::string& bytes) {
        pipeline_detail::spit(out_ + "/" + path, bytes);
        nlohmann::ordered_json rec;
        rec["path"] = path;
        rec["hash"] = pipeline_detail::fnv1a_hex(bytes);
        outputs_.push_back(rec);
    }

    // inputs may sit next to the config file, in the run dir, or be absolute
    std::string resolve(const std::string& path) const {
        namespace fs = std::filesystem;
        if (fs::path(path).is_absolute()) return path;
        fs::path beside = fs::path(config_path_).parent_path() / path;
        if (fs::exists(beside)) return beside.string();
        fs::path in_run = fs::path(out_) / path;
        if (fs::exists(in_run)) return in_run.string();
        return path;
    }

    static std::string require(const nlohmann::ordered_json& st, const char* field) {
        if (!st.contains(field))
            throw DataError("MissingField", std::string("stage needs '") + field + "'");
        return st[field].get<std::string>();
    }

    FactorTable load_table(const nlohmann::ordered_json& st) {
        return read_csv(read_input(require(st, "table")));
    }

    void dispatch(const std::string& kind, const nlohmann::ordered_json& st, std::uint64_t seed);

    void stage_ingest(const nlohmann::ordered_json& st);
    void stage_query(const nlohmann::ordered_json& st);
    void stage_code(const nlohmann::ordered_json& st);
    void stage_fit(const nlohmann::ordered_json& st);
    void stage_cre(const nlohmann::ordered_json& st);
    void stage_ca(const nlohmann::ordered_json& st);
    void stage_vnc(const nlohmann::ordered_json& st);
    void stage_citree(const nlohmann::ordered_json& st, std::uint64_t seed);
    void stage_rf(const nlohmann::ordered_json& st, std::uint64_t seed);
    void stage_bayes(const nlohmann::ordered_json& st, std::uint64_t seed);
    void stage_report(const nlohmann::ordered_json& st);

    std::string config_path_, out_, config_hash_;
    nlohmann::ordered_json config_, manifest_;
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
    std::uint64_t seed_ = 1;
    int threads_ = 1;
};

inline void Pipeline::dispatch(const std::string& kind, const nlohmann::ordered_json& st,
                               std::uint64_t seed) {
    if (kind == "ingest") stage_ingest(st);
    else if (kind == "query") stage_query(st);
    else if (kind == "code") stage_code(st);
    else if (kind == "fit") stage_fit(st);
    else if (kind == "cre") stage_cre(st);
    else if (kind == "ca") stage_ca(st);
    else if (kind == "vnc") stage_vnc(st);
    else if (kind == "citree") stage_citree(st, seed);
    else if (kind == "rf") stage_rf(st, seed);
    else if (kind == "bayes") stage_bayes(st, seed);
    else if (kind == "report") stage_report(st);
    else throw DataError("UnknownStage", kind);
}

inline void Pipeline::stage_ingest(const nlohmann::ordered_json& st) {
    std::vector<AnnotatedSentence> all;
    if (!st.contains("inputs")) throw DataError("MissingField", "ingest needs 'inputs'");
    for (const auto& in : st["inputs"]) {
        std::string file = in.at("file").get<std::string>();
        std::string format = in.value("format", "penn");
        Meta meta;
        if (in.contains("meta"))
            for (auto it = in["meta"].begin(); it != in["meta"].end(); ++it)
                meta[it.key()] = it.value().is_string() ? it.value().get<std::string>()
                                                        : it.value().dump();
        std::string bytes = read_input(file);
        std::vector<AnnotatedSentence> ss;
        if (format == "penn") ss = parse_penn(bytes, meta);
        else if (format == "tiger") ss = parse_tiger_xml(bytes, meta);
        else if (format == "lines") ss = parse_token_lines(bytes, meta);
        else throw DataError("UnknownFormat", format);
        for (auto& s : ss) all.push_back(std::move(s));
    }
    write_output(st.value("output", "corpus.jsonl"), write_unified(all));
}

inline void Pipeline::stage_query(const nlohmann::ordered_json& st) {
    auto sentences = read_unified(read_input(require(st, "input")));
    Treebank tb;
    tb.sentences = std::move(sentences);
    auto ast = parse_query(require(st, "query"));
    auto recs = extract(tb, ast);
    std::string out;
    for (const auto& r : recs) {
        nlohmann::ordered_json j;
        j["sentence_id"] = r.sentence_id;
        nlohmann::ordered_json b = nlohmann::ordered_json::object();
        for (const auto& [v, id] : r.bindings) b[v] = id;
        j["bindings"] = b;
        j["clause_root"] = r.clause_root;
        out += j.dump() + "\n";
    }
    write_output(st.value("output", "matches.jsonl"), out);
}

inline void Pipeline::stage_code(const nlohmann::ordered_json& st) {
    auto sentences = read_unified(read_input(require(st, "corpus")));
    std::map<std::string, const AnnotatedSentence*> by_id;
    for (const auto& s : sentences) by_id[s.id] = &s;

    VerbLexicon verbs;
    if (st.contains("verb_lexicon"))
        verbs = VerbLexicon::from_tsv(read_input(st["verb_lexicon"].get<std::string>()));
    if (st.contains("default_verb_class")) {
        auto cls = verb_class_from(st["default_verb_class"].get<std::string>());
        if (cls) verbs.default_class = *cls;
    }
    FrequencyLexicon freqs;
    if (st.contains("freq_lexicon"))
        freqs = FrequencyLexicon::from_tsv(read_input(st["freq_lexicon"].get<std::string>()));
    PeriodMap periods;
    if (st.contains("periods"))
        for (const auto& p : st["periods"])
            periods.entries.push_back({p.at("label").get<std::string>(), p.at("lo").get<double>(),
                                       p.at("hi").get<double>(), p.at("index").get<int>()});

    // corpus-wide lemma counts for the frequency fallback
    std::map<std::string, long long> corpus_counts;
    for (const auto& s : sentences)
        for (const auto& t : s.tokens) corpus_counts[t.lemma.value_or(t.form)] += 1;

    std::vector<ClauseRecord> records;
    std::map<std::string, int> exclusions;
    std::set<std::pair<std::string, std::string>> seen;  // one coding per clause
    std::string matches_bytes = read_input(require(st, "matches"));
    size_t pos = 0;
    while (pos < matches_bytes.size()) {
        size_t nl = matches_bytes.find('\n', pos);
        std::string line =
            matches_bytes.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? matches_bytes.size() : nl + 1;
        if (line.empty()) continue;
        auto j = nlohmann::ordered_json::parse(line);
        ExtractRecord r;
        r.sentence_id = j.at("sentence_id").get<std::string>();
        r.clause_root = j.at("clause_root").get<std::string>();
        if (!seen.insert({r.sentence_id, r.clause_root}).second) continue;
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
    if (st.contains("sidecar")) {
        auto side = read_sidecar_csv(read_input(st["sidecar"].get<std::string>()));
        attach_annotations(records, side);
    }
    auto table = build_factor_table(records);
    write_output(st.value("output", "table.csv"), write_csv(table));
    nlohmann::ordered_json ex = nlohmann::ordered_json::object();
    for (const auto& [k, v] : exclusions) ex[k] = v;
    nlohmann::ordered_json sidecar_summary;
    sidecar_summary["records"] = records.size();
    sidecar_summary["excluded"] = ex;
    sidecar_summary["verb_lexicon_warnings"] = verbs.warnings;
    write_output(st.value("summary_output", "coding_summary.json"),
                 sidecar_summary.dump(2) + "\n");
}

inline void Pipeline::stage_fit(const nlohmann::ordered_json& st) {
    auto table = load_table(st);
    std::string response = st.value("response", "order");
    std::string success = st.value("success", "VO");
    nlohmann::ordered_json out;
    if (st.contains("time")) {
        std::string time_col = st["time"].get<std::string>();
        auto series = binomial_series(table, time_col, response, success);
        RateFit r = fit_rate(series.t, series.successes, series.trials);
        out["slope"] = r.slope;
        out["intercept"] = r.intercept;
        out["exp_slope"] = r.exp_slope;
        out["exp_intercept"] = r.exp_intercept;
        out["slope_se"] = r.slope_se;
        out["intercept_se"] = r.intercept_se;
        out["log_likelihood"] = r.log_likelihood;
        if (st.contains("svg"))
            write_output(st["svg"].get<std::string>(),
                         emit_rate_plot(r, series.t, series.successes, series.trials));
    } else {
        DesignSpec spec;
        for (const auto& term : st.at("terms")) spec.terms.push_back(term.get<std::string>());
        auto design = build_design(table, response, spec);
        auto fit = fit_logistic(design.data);
        out["converged"] = fit.converged;
        out["iterations"] = fit.iterations;
        out["deviance"] = fit.deviance;
        out["log_likelihood"] = fit.log_likelihood;
        nlohmann::ordered_json coefs = nlohmann::ordered_json::object();
        for (size_t i = 0; i < fit.names.size(); ++i) {
            nlohmann::ordered_json c;
            c["estimate"] = fit.beta[i];
            c["se"] = std::sqrt(fit.covariance(i, i));
            coefs[fit.names[i]] = c;
        }
        out["coefficients"] = coefs;
        out["success_level"] = design.success_level;
    }
    write_output(st.value("output", "fit.json"), out.dump(2) + "\n");
}

inline void Pipeline::stage_cre(const nlohmann::ordered_json& st) {
    auto table = load_table(st);
    std::string response = st.value("response", "order");
    std::string success = st.value("success", "VO");
    std::string time_col = require(st, "time");
    std::string context = require(st, "context");
    std::map<std::string, std::map<double, std::pair<double, double>>> cells;
    const auto& rc = table.column(response);
    const auto& cc = table.column(context);
    for (size_t i = 0; i < table.n_rows(); ++i) {
        auto& cell = cells[cc.cells[i]][table.as_real(time_col, i)];
        cell.second += 1;
        if (rc.cells[i] == success) cell.first += 1;
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
    nlohmann::ordered_json out;
    out["lr"] = res.lr;
    out["df"] = res.df;
    out["p"] = res.p;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (size_t i = 0; i < res.labels.size(); ++i) {
        nlohmann::ordered_json r;
        r["slope"] = res.per_context[i].slope;
        r["intercept"] = res.per_context[i].intercept;
        r["exp_slope"] = res.per_context[i].exp_slope;
        r["exp_intercept"] = res.per_context[i].exp_intercept;
        per[res.labels[i]] = r;
    }
    out["contexts"] = per;
    write_output(st.value("output", "cre.json"), out.dump(2) + "\n");
}

inline void Pipeline::stage_ca(const nlohmann::ordered_json& st) {
    auto table = load_table(st);
    auto ct = table.cross_tab(require(st, "rows"), require(st, "cols"));
    Matrix m = ct.counts;
    if (st.value("normalize", "none") == "rows") {
        for (size_t i = 0; i < m.rows(); ++i) {
            double s = 0;
            for (size_t j = 0; j < m.cols(); ++j) s += m(i, j);
            if (s > 0)
                for (size_t j = 0; j < m.cols(); ++j) m(i, j) /= s;
        }
    }
    auto sol = correspondence_analysis(m);
    nlohmann::ordered_json out;
    out["total_inertia"] = sol.total_inertia;
    out["inertia_share"] = sol.inertia_share;
    out["singular_values"] = sol.singular_values;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (size_t i = 0; i < sol.row_coords.rows(); ++i) {
        nlohmann::ordered_json r;
        r["label"] = ct.row_labels[i];
        std::vector<double> coords;
        for (size_t k = 0; k < sol.row_coords.cols(); ++k) coords.push_back(sol.row_coords(i, k));
        r["coords"] = coords;
        rows.push_back(r);
    }
    out["rows"] = rows;
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (size_t j = 0; j < sol.col_coords.rows(); ++j) {
        nlohmann::ordered_json r;
        r["label"] = ct.col_labels[j];
        std::vector<double> coords;
        for (size_t k = 0; k < sol.col_coords.cols(); ++k) coords.push_back(sol.col_coords(j, k));
        r["coords"] = coords;
        cols.push_back(r);
    }
    out["cols"] = cols;
    write_output(st.value("output", "ca.json"), out.dump(2) + "\n");
    if (st.contains("svg"))
        write_output(st["svg"].get<std::string>(),
                     emit_ca_plot(sol, ct.row_labels, ct.col_labels));
}

inline void Pipeline::stage_vnc(const nlohmann::ordered_json& st) {
    auto table = load_table(st);
    std::string time_col = require(st, "time");
    std::string value_col = require(st, "value");
    // mean value per time point, in time order; categorical value columns
    // contribute the rate of the configured success level
    const auto& vc = table.column(value_col);
    bool categorical = vc.type == CellType::Categorical;
    std::string success = st.value("success", "VO");
    std::map<double, std::pair<double, double>> acc;
    for (size_t i = 0; i < table.n_rows(); ++i) {
        auto& a = acc[table.as_real(time_col, i)];
        a.first += categorical ? (vc.cells[i] == success ? 1.0 : 0.0)
                               : table.as_real(value_col, i);
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
    auto dend = vnc(series, labels,
                    st.value("cost", "sd") == "cv" ? VncCost::Cv : VncCost::Sd);
    nlohmann::ordered_json out;
    out["leaves"] = dend.leaves;
    nlohmann::ordered_json merges = nlohmann::ordered_json::array();
    for (const auto& m : dend.merges) {
        nlohmann::ordered_json mj;
        mj["left"] = m.left;
        mj["right"] = m.right;
        mj["height"] = m.height;
        merges.push_back(mj);
    }
    out["merges"] = merges;
    if (st.contains("clusters")) {
        out["cut"] = dend.cut(st["clusters"].get<int>());
    }
    write_output(st.value("output", "vnc.json"), out.dump(2) + "\n");
    if (st.contains("svg")) write_output(st["svg"].get<std::string>(), emit_dendrogram(dend));
}

inline void Pipeline::stage_citree(const nlohmann::ordered_json& st, std::uint64_t seed) {
    auto table = load_table(st);
    std::vector<std::string> predictors;
    for (const auto& p : st.at("predictors")) predictors.push_back(p.get<std::string>());
    CiTreeConfig cfg;
    cfg.alpha = st.value("alpha", 0.05);
    cfg.permutations = st.value("permutations", 9999);
    cfg.min_node = st.value("min_node", 20);
    cfg.seed = st.value("seed", seed);
    auto tree = citree(table, st.value("response", "order"), predictors, cfg);
    std::function<nlohmann::ordered_json(const CiNode&)> dump = [&](const CiNode& n) {
        nlohmann::ordered_json j;
        j["n"] = n.n;
        if (n.is_leaf) {
            nlohmann::ordered_json counts = nlohmann::ordered_json::object();
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
    write_output(st.value("output", "citree.json"), dump(*tree.root).dump(2) + "\n");
}

inline void Pipeline::stage_rf(const nlohmann::ordered_json& st, std::uint64_t seed) {
    auto table = load_table(st);
    std::vector<std::string> predictors;
    for (const auto& p : st.at("predictors")) predictors.push_back(p.get<std::string>());
    ForestConfig cfg;
    cfg.trees = st.value("trees", 500);
    cfg.mtry = st.value("mtry", 0);
    cfg.seed = st.value("seed", seed);
    cfg.threads = threads_;
    auto rep = rf_importance(table, st.value("response", "order"), predictors, cfg);
    nlohmann::ordered_json out;
    nlohmann::ordered_json imp = nlohmann::ordered_json::object();
    for (size_t i = 0; i < rep.predictors.size(); ++i) imp[rep.predictors[i]] = rep.importance[i];
    out["importance"] = imp;
    out["threshold"] = rep.threshold;
    out["oob_accuracy"] = rep.oob_accuracy;
    write_output(st.value("output", "rf.json"), out.dump(2) + "\n");
    if (st.contains("svg")) write_output(st["svg"].get<std::string>(), emit_importance_plot(rep));
}

inline void Pipeline::stage_bayes(const nlohmann::ordered_json& st, std::uint64_t seed) {
    auto table = load_table(st);
    BayesModelSpec spec;
    for (const auto& t : st.at("fixed")) spec.fixed_terms.push_back(t.get<std::string>());
    if (st.contains("random"))
        for (const auto& g : st["random"]) spec.random_groups.push_back(g.get<std::string>());
    if (st.contains("log"))
        for (const auto& g : st["log"]) spec.log_terms.insert(g.get<std::string>());
    if (st.contains("references"))
        for (auto it = st["references"].begin(); it != st["references"].end(); ++it)
            spec.references[it.key()] = it.value().get<std::string>();
    auto design = build_model(table, st.value("response", "order"), spec);
    McmcConfig cfg;
    cfg.chains = st.value("chains", 4);
    cfg.iters = st.value("iters", 10000);
    cfg.burn = st.value("burn", 2000);
    cfg.seed = st.value("seed", seed);
    cfg.threads = threads_;
    auto post = sample(design, cfg);
    auto summary = summarize(post);
    auto diag = diagnose(post);
    nlohmann::ordered_json out;
    out["success_level"] = design.success_level;
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (size_t i = 0; i < summary.params.size(); ++i) {
        const auto& p = summary.params[i];
        nlohmann::ordered_json pj;
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
    out["parameters"] = params;
    write_output(st.value("output", "bayes.json"), out.dump(2) + "\n");
    if (st.contains("svg")) {
        // one density file per fixed-effect parameter
        std::string base = st["svg"].get<std::string>();
        if (base.size() > 4 && base.substr(base.size() - 4) == ".svg")
            base = base.substr(0, base.size() - 4);
        for (size_t j = 0; j < design.fixed_names.size() && j < post.names.size(); ++j) {
            std::string cleaned;
            for (char c : post.names[j])
                cleaned += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
            write_output(base + "-" + cleaned + ".svg",
                         emit_posterior_plot(post.names[j], post.flat(j),
                                             summary.params[j].hdi_lo, summary.params[j].hdi_hi));
        }
    }
}

// plain-text summary assembled from whatever artifacts exist in `dir`
inline std::string report_text(const std::string& dir, const std::string& table_name = "table.csv") {
    namespace fs = std::filesystem;
    std::ostringstream rep;
    if (fs::exists(fs::path(dir) / table_name)) {
        auto table = read_csv(pipeline_detail::slurp((fs::path(dir) / table_name).string()));
        auto tab = tabulate_ovvo(table);
        rep << "Order by period\n";
        rep << "period\tOV\t%\tVO\t%\ttotal\n";
        long long tov = 0, tvo = 0;
        for (size_t i = 0; i < tab.periods.size(); ++i) {
            long long n = tab.ov[i] + tab.vo[i];
            rep << tab.periods[i] << '\t' << tab.ov[i] << '\t'
                << (n ? 100 * tab.ov[i] / n : 0) << '\t' << tab.vo[i] << '\t'
                << (n ? 100 * tab.vo[i] / n : 0) << '\t' << n << '\n';
            tov += tab.ov[i];
            tvo += tab.vo[i];
        }
        rep << "total\t" << tov << "\t\t" << tvo << "\t\t" << (tov + tvo) << "\n\n";
    }
    for (const auto& name : {"fit.json", "cre.json", "bayes.json"}) {
        fs::path p = fs::path(dir) / name;
        if (!fs::exists(p)) continue;
        auto j = nlohmann::ordered_json::parse(pipeline_detail::slurp(p.string()));
        if (std::string(name) == "fit.json" && j.contains("slope")) {
            rep << "Rate of change\nslope\t" << j["slope"].get<double>() << "\nexp_slope\t"
                << j["exp_slope"].get<double>() << "\nintercept\t" << j["intercept"].get<double>()
                << "\nexp_intercept\t" << j["exp_intercept"].get<double>() << "\n\n";
        } else if (std::string(name) == "cre.json") {
            rep << "Slope homogeneity\ncontext\tslope(exp)\tintercept(exp)\n";
            for (auto it = j["contexts"].begin(); it != j["contexts"].end(); ++it)
                rep << it.key() << '\t' << it.value()["exp_slope"].get<double>() << '\t'
                    << it.value()["exp_intercept"].get<double>() << '\n';
            rep << "LR\t" << j["lr"].get<double>() << "\tdf\t" << j["df"].get<int>() << "\tp\t"
                << j["p"].get<double>() << "\n\n";
        } else if (std::string(name) == "bayes.json") {
            rep << "Posterior summary\nparameter\tmean\thdi_lo\thdi_hi\tcredible\n";
            for (const auto& pj : j["parameters"])
                rep << pj["name"].get<std::string>() << '\t' << pj["mean"].get<double>() << '\t'
                    << pj["hdi_lo"].get<double>() << '\t' << pj["hdi_hi"].get<double>() << '\t'
                    << (pj["credible"].get<bool>() ? "yes" : "no") << '\n';
            rep << '\n';
        }
    }
    return rep.str();
}

inline void Pipeline::stage_report(const nlohmann::ordered_json& st) {
    std::string table_name = st.value("table", "table.csv");
    if (std::filesystem::exists(std::filesystem::path(out_) / table_name))
        read_input(table_name);  // record the dependency hash
    write_output(st.value("output", "report.txt"), report_text(out_, table_name));
}

inline void run_pipeline(const std::string& config_path, const std::string& out_dir) {
    Pipeline(config_path, out_dir).run();
}

// verify a completed run directory against its manifest
inline void verify_run(const std::string& run_dir) {
    namespace fs = std::filesystem;
    fs::path mpath = fs::path(run_dir) / "manifest.json";
    if (!fs::exists(mpath)) throw IncompleteRun("missing manifest.json");
    auto manifest = nlohmann::ordered_json::parse(pipeline_detail::slurp(mpath.string()));
    for (const auto& st : manifest.at("stages"))
        for (const auto& o : st.at("outputs")) {
            fs::path p = fs::path(run_dir) / o.at("path").get<std::string>();
            if (!fs::exists(p))
                throw IncompleteRun("missing output " + o.at("path").get<std::string>());
            auto bytes = pipeline_detail::slurp(p.string());
            if (pipeline_detail::fnv1a_hex(bytes) != o.at("hash").get<std::string>())
                throw IncompleteRun("hash mismatch for " + o.at("path").get<std::string>());
        }
}

} // namespace diachron
