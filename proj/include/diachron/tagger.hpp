#pragma once

// Resource-light trigram-HMM part-of-speech tagger. Transition probabilities
// are interpolated unigram/bigram/trigram MLEs with weights chosen by deleted
// interpolation; unknown words are scored by a suffix model built from rare
// training words (frequency <= cutoff), smoothed level by level with
// theta = the standard deviation of the unconditioned tag probabilities.
// Decoding is exact Viterbi in log space (beam width configurable), with
// equal-probability ties broken toward the lexicographically smallest tag
// sequence.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "diachron/corpus.hpp"
#include "diachron/errors.hpp"

namespace diachron {

struct EmptyCorpus : DataError {
    EmptyCorpus() : DataError("EmptyCorpus", "no tagged tokens in training input") {}
};

struct LengthMismatch : DataError {
    LengthMismatch(size_t g, size_t p)
        : DataError("LengthMismatch", "gold has " + std::to_string(g) +
                                          " tokens, predicted has " + std::to_string(p)) {}
};

struct NoDefaultForUnmappedTag : DataError {
    explicit NoDefaultForUnmappedTag(std::string tag)
        : DataError("NoDefaultForUnmappedTag", "tag '" + tag + "' has no mapping and no default") {}
};

struct TaggerConfig {
    int max_suffix_len = 10;   // L
    int rare_cutoff = 10;      // words with training frequency <= cutoff feed the suffix model
    std::optional<std::vector<std::string>> open_class;  // default: tags seen on rare words
    int beam = 0;              // 0 = exact
};

class TaggerModel {
public:
    std::vector<std::string> tags;                    // inventory, sorted
    std::map<std::string, int> tag_id;
    std::vector<double> c1;                           // unigram tag counts
    std::map<std::pair<int, int>, double> c2;         // bigram
    std::map<std::tuple<int, int, int>, double> c3;   // trigram
    std::map<int, double> ctx2;                       // bigram context totals (t1)
    std::map<std::pair<int, int>, double> ctx3;       // trigram context totals (t1,t2)
    double total = 0;                                 // token count
    double lambda1 = 0, lambda2 = 0, lambda3 = 0;
    std::map<std::string, std::map<int, double>> lexicon;  // word -> tag -> count
    std::map<std::string, double> word_freq;
    std::map<std::string, std::vector<double>> suffix_p;   // suffix -> P(tag | suffix)
    double theta = 0;
    std::vector<int> open_tags;
    int max_suffix_len = 10;
    int rare_cutoff = 10;

    static constexpr int kBos = -1;

    int id(const std::string& t) const {
        auto it = tag_id.find(t);
        return it == tag_id.end() ? -2 : it->second;
    }

    // interpolated P(t | t1, t2); components with unseen histories contribute 0
    double trans(int t1, int t2, int t) const {
        double p = lambda1 * c1[t] / total;
        if (auto it = ctx2.find(t2); it != ctx2.end() && it->second > 0) {
            auto b = c2.find({t2, t});
            p += lambda2 * (b == c2.end() ? 0.0 : b->second) / it->second;
        }
        if (auto it = ctx3.find({t1, t2}); it != ctx3.end() && it->second > 0) {
            auto tri = c3.find({t1, t2, t});
            p += lambda3 * (tri == c3.end() ? 0.0 : tri->second) / it->second;
        }
        return p;
    }

    bool known(const std::string& w) const { return word_freq.count(w) > 0; }

    // P(w | t) for a known word: MLE over the lexicon
    double emit_known(const std::string& w, int t) const {
        auto it = lexicon.find(w);
        if (it == lexicon.end()) return 0.0;
        auto jt = it->second.find(t);
        return jt == it->second.end() ? 0.0 : jt->second / c1[t];
    }

    // unknown word: P(t | longest known suffix), Bayes-inverted to an
    // emission score P(w|t) ~ P(t|s) / P(t), restricted to open-class tags
    std::vector<double> emit_unknown(const std::string& w) const {
        std::vector<double> out(tags.size(), 0.0);
        const std::vector<double>* dist = nullptr;
        int L = std::min<int>(max_suffix_len, static_cast<int>(w.size()));
        for (int l = L; l >= 0; --l) {
            auto it = suffix_p.find(w.substr(w.size() - l));
            if (it != suffix_p.end()) {
                dist = &it->second;
                break;
            }
        }
        for (int t : open_tags) {
            double pt = c1[t] / total;
            double ptgs = dist ? (*dist)[t] : pt;
            if (pt > 0) out[t] = ptgs / pt;
        }
        return out;
    }
};

namespace tagger_detail {

// Deleted interpolation: each trigram votes for the order whose leave-one-out
// relative frequency is largest, weighted by its count.
inline void estimate_lambdas(TaggerModel& m) {
    double l1 = 0, l2 = 0, l3 = 0;
    for (const auto& [key, f] : m.c3) {
        auto [t1, t2, t3] = key;
        double d3 = 0, d2 = 0, d1 = 0;
        double n3 = m.ctx3.at({t1, t2});
        if (n3 > 1) d3 = (f - 1) / (n3 - 1);
        double pair = m.c2.count({t2, t3}) ? m.c2.at({t2, t3}) : 0;
        double n2 = t2 == TaggerModel::kBos ? m.ctx2.at(t2) : m.c1[t2];
        if (n2 > 1) d2 = (pair - 1) / (n2 - 1);
        if (m.total > 1) d1 = (m.c1[t3] - 1) / (m.total - 1);
        if (d3 >= d2 && d3 >= d1) l3 += f;
        else if (d2 >= d1) l2 += f;
        else l1 += f;
    }
    double s = l1 + l2 + l3;
    if (s <= 0) {
        m.lambda1 = 1;
        m.lambda2 = m.lambda3 = 0;
    } else {
        m.lambda1 = l1 / s;
        m.lambda2 = l2 / s;
        m.lambda3 = l3 / s;
    }
}

inline void build_suffix_model(TaggerModel& m, const std::vector<std::pair<std::string, int>>& occ) {
    // occurrences of rare words only
    std::map<std::string, std::vector<double>> counts;
    std::set<int> open;
    for (const auto& [w, t] : occ) {
        if (m.word_freq.at(w) > m.rare_cutoff) continue;
        open.insert(t);
        int L = std::min<int>(m.max_suffix_len, static_cast<int>(w.size()));
        for (int l = 0; l <= L; ++l) {
            auto& v = counts[w.substr(w.size() - l)];
            v.resize(m.tags.size(), 0.0);
            v[t] += 1;
        }
    }
    // theta = sd of the unconditioned tag probabilities
    double mean = 0;
    std::vector<double> pt(m.tags.size());
    for (size_t t = 0; t < m.tags.size(); ++t) {
        pt[t] = m.c1[t] / m.total;
        mean += pt[t];
    }
    mean /= static_cast<double>(m.tags.size());
    double var = 0;
    for (double p : pt) var += (p - mean) * (p - mean);
    if (m.tags.size() > 1) var /= static_cast<double>(m.tags.size() - 1);
    m.theta = std::sqrt(var);

    if (m.open_tags.empty())
        m.open_tags.assign(open.begin(), open.end());

    // smooth level by level: P(t|s_l) = (P^(t|s_l) + theta P(t|s_{l-1})) / (1 + theta)
    std::vector<std::string> sufs;
    for (auto& [s, v] : counts) sufs.push_back(s);
    std::sort(sufs.begin(), sufs.end(),
              [](const std::string& a, const std::string& b) {
                  return a.size() != b.size() ? a.size() < b.size() : a < b;
              });
    for (const auto& s : sufs) {
        const auto& v = counts[s];
        double n = 0;
        for (double x : v) n += x;
        std::vector<double> p(m.tags.size(), 0.0);
        const std::vector<double>* prev = nullptr;
        if (!s.empty()) {
            auto pit = m.suffix_p.find(s.substr(1));
            if (pit == m.suffix_p.end()) pit = m.suffix_p.find("");
            if (pit != m.suffix_p.end()) prev = &pit->second;
        }
        for (size_t t = 0; t < m.tags.size(); ++t) {
            double mle = n > 0 ? v[t] / n : 0.0;
            p[t] = prev ? (mle + m.theta * (*prev)[t]) / (1.0 + m.theta) : mle;
        }
        m.suffix_p[s] = std::move(p);
    }
}

} // namespace tagger_detail

inline TaggerModel train(const std::vector<AnnotatedSentence>& corpus,
                         const TaggerConfig& cfg = {}) {
    TaggerModel m;
    m.max_suffix_len = cfg.max_suffix_len;
    m.rare_cutoff = cfg.rare_cutoff;

    std::set<std::string> inv;
    for (const auto& s : corpus)
        for (const auto& t : s.tokens)
            if (t.pos) inv.insert(*t.pos);
    if (inv.empty()) throw EmptyCorpus();
    m.tags.assign(inv.begin(), inv.end());
    for (size_t i = 0; i < m.tags.size(); ++i) m.tag_id[m.tags[i]] = static_cast<int>(i);
    m.c1.assign(m.tags.size(), 0.0);

    std::vector<std::pair<std::string, int>> occurrences;
    for (const auto& s : corpus) {
        int t1 = TaggerModel::kBos, t2 = TaggerModel::kBos;
        for (const auto& tok : s.tokens) {
            if (!tok.pos) throw DataError("UntaggedToken", "token '" + tok.form + "' has no pos");
            int t = m.tag_id.at(*tok.pos);
            m.c1[t] += 1;
            m.total += 1;
            m.c2[{t2, t}] += 1;
            m.ctx2[t2] += 1;
            m.c3[{t1, t2, t}] += 1;
            m.ctx3[{t1, t2}] += 1;
            m.lexicon[tok.form][t] += 1;
            m.word_freq[tok.form] += 1;
            occurrences.emplace_back(tok.form, t);
            t1 = t2;
            t2 = t;
        }
    }

    if (cfg.open_class) {
        for (const auto& t : *cfg.open_class)
            if (m.tag_id.count(t)) m.open_tags.push_back(m.tag_id.at(t));
    }
    tagger_detail::estimate_lambdas(m);
    tagger_detail::build_suffix_model(m, occurrences);
    return m;
}

namespace tagger_detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0 ? std::log(p) : kNegInf; }

// per-token emission log scores over the tag inventory
inline std::vector<std::vector<double>> emissions(const TaggerModel& m,
                                                  const std::vector<std::string>& words) {
    std::vector<std::vector<double>> e(words.size());
    for (size_t i = 0; i < words.size(); ++i) {
        e[i].assign(m.tags.size(), kNegInf);
        if (m.known(words[i])) {
            const auto& wt = m.lexicon.at(words[i]);
            for (const auto& [t, c] : wt) e[i][t] = safe_log(c / m.c1[t]);
        } else {
            auto scores = m.emit_unknown(words[i]);
            for (size_t t = 0; t < scores.size(); ++t) e[i][t] = safe_log(scores[t]);
        }
    }
    return e;
}

} // namespace tagger_detail

// Exact decoder. Backward pass computes the best completion score per
// (prev, cur) state; the forward walk then picks, at each position, the
// smallest tag that still achieves the optimum, which makes the returned
// sequence the lexicographically smallest argmax.
inline std::vector<std::string> tag(const TaggerModel& m, const std::vector<std::string>& words,
                                    int beam = 0) {
    using namespace tagger_detail;
    const int T = static_cast<int>(m.tags.size());
    const int n = static_cast<int>(words.size());
    std::vector<std::string> out;
    if (n == 0) return out;
    auto e = emissions(m, words);

    // beta[i][a*T+b]: best score of positions i+1..n-1 given t_{i-1}=a, t_i=b
    // (a may be kBos encoded as T)
    auto idx = [&](int a, int b) { return (a == TaggerModel::kBos ? T : a) * T + b; };
    std::vector<std::vector<double>> beta(n, std::vector<double>((T + 1) * T, kNegInf));
    for (int b = 0; b < T; ++b)
        for (int a = -1; a < T; ++a) beta[n - 1][idx(a, b)] = 0.0;
    for (int i = n - 2; i >= 0; --i) {
        for (int a = -1; a < T; ++a) {
            for (int b = 0; b < T; ++b) {
                double best = kNegInf;
                for (int c = 0; c < T; ++c) {
                    if (e[i + 1][c] == kNegInf) continue;
                    double s = safe_log(m.trans(a, b, c)) + e[i + 1][c] + beta[i + 1][idx(b, c)];
                    if (s > best) best = s;
                }
                beta[i][idx(a, b)] = best;
            }
        }
        if (beam > 0 && beam < (T + 1) * T) {
            // keep only the `beam` most promising states at this position
            std::vector<double> vals = beta[i];
            std::nth_element(vals.begin(), vals.end() - beam, vals.end());
            double cut = *(vals.end() - beam);
            int kept = 0;
            for (auto& v : beta[i]) {
                if (v >= cut && kept < beam) ++kept;
                else v = kNegInf;
            }
        }
    }

    const double eps = 1e-9;
    int p1 = TaggerModel::kBos, p2 = TaggerModel::kBos;
    for (int i = 0; i < n; ++i) {
        double best = kNegInf;
        for (int c = 0; c < T; ++c) {
            if (e[i][c] == kNegInf) continue;
            double s = safe_log(m.trans(p1, p2, c)) + e[i][c] + beta[i][idx(p2, c)];
            if (s > best) best = s;
        }
        int chosen = 0;
        for (int c = 0; c < T; ++c) {
            if (e[i][c] == kNegInf) continue;
            double s = safe_log(m.trans(p1, p2, c)) + e[i][c] + beta[i][idx(p2, c)];
            if (s >= best - eps) {
                chosen = c;
                break;
            }
        }
        out.push_back(m.tags[chosen]);
        p1 = p2;
        p2 = chosen;
    }
    return out;
}

inline AnnotatedSentence tag(const TaggerModel& m, const AnnotatedSentence& s, int beam = 0) {
    std::vector<std::string> words;
    for (const auto& t : s.tokens) words.push_back(t.form);
    auto tags = tag(m, words, beam);
    AnnotatedSentence out = s;
    for (size_t i = 0; i < out.tokens.size(); ++i) out.tokens[i].pos = tags[i];
    return out;
}

// ---------------------------------------------------------------------------
// tagset mapping
// ---------------------------------------------------------------------------

struct TagMap {
    std::map<std::string, std::string> exact;
    std::vector<std::pair<std::string, std::string>> prefixes;  // "a*" style, longest first
    std::optional<std::string> fallback;

    std::optional<std::string> lookup(const std::string& tag) const {
        if (auto it = exact.find(tag); it != exact.end()) return it->second;
        for (const auto& [pre, to] : prefixes)
            if (tag.compare(0, pre.size(), pre) == 0) return to;
        return fallback;
    }

    void add(const std::string& from, const std::string& to) {
        if (!from.empty() && from.back() == '*') {
            prefixes.emplace_back(from.substr(0, from.size() - 1), to);
            std::stable_sort(prefixes.begin(), prefixes.end(),
                             [](const auto& a, const auto& b) {
                                 return a.first.size() > b.first.size();
                             });
        } else {
            exact[from] = to;
        }
    }
};

struct MapResult {
    std::vector<AnnotatedSentence> sentences;
    int warnings = 0;  // tokens mapped through the fallback
};

inline MapResult map_tagset(const std::vector<AnnotatedSentence>& in, const TagMap& map) {
    MapResult r;
    r.sentences = in;
    for (auto& s : r.sentences)
        for (auto& t : s.tokens) {
            if (!t.pos) continue;
            if (auto it = map.exact.find(*t.pos); it != map.exact.end()) {
                t.pos = it->second;
                continue;
            }
            bool matched = false;
            for (const auto& [pre, to] : map.prefixes)
                if (t.pos->compare(0, pre.size(), pre) == 0) {
                    t.pos = to;
                    matched = true;
                    break;
                }
            if (matched) continue;
            if (!map.fallback) throw NoDefaultForUnmappedTag(*t.pos);
            t.pos = *map.fallback;
            ++r.warnings;
        }
    return r;
}

// ---------------------------------------------------------------------------
// evaluation: precision/recall/F over a target tag set
// ---------------------------------------------------------------------------

struct EvalReport {
    double precision = 0;
    double recall = 0;
    double f = 0;
    std::map<std::pair<std::string, std::string>, int> confusion;  // (gold, predicted) -> count
};

inline EvalReport evaluate(const std::vector<AnnotatedSentence>& gold,
                           const std::vector<AnnotatedSentence>& predicted,
                           const std::set<std::string>& target_tags) {
    size_t gn = 0, pn = 0;
    for (const auto& s : gold) gn += s.tokens.size();
    for (const auto& s : predicted) pn += s.tokens.size();
    if (gold.size() != predicted.size() || gn != pn) throw LengthMismatch(gn, pn);

    double correct = 0, pred_in_target = 0, gold_in_target = 0;
    EvalReport rep;
    for (size_t si = 0; si < gold.size(); ++si) {
        const auto& gs = gold[si];
        const auto& ps = predicted[si];
        if (gs.tokens.size() != ps.tokens.size())
            throw LengthMismatch(gs.tokens.size(), ps.tokens.size());
        for (size_t i = 0; i < gs.tokens.size(); ++i) {
            std::string g = gs.tokens[i].pos.value_or("");
            std::string p = ps.tokens[i].pos.value_or("");
            rep.confusion[{g, p}] += 1;
            bool gt = target_tags.empty() || target_tags.count(g) > 0;
            bool pt = target_tags.empty() || target_tags.count(p) > 0;
            if (pt) pred_in_target += 1;
            if (gt) gold_in_target += 1;
            if (gt && pt && g == p) correct += 1;
        }
    }
    rep.precision = pred_in_target > 0 ? correct / pred_in_target : 0.0;
    rep.recall = gold_in_target > 0 ? correct / gold_in_target : 0.0;
    rep.f = (rep.precision + rep.recall) > 0
                ? 2 * rep.precision * rep.recall / (rep.precision + rep.recall)
                : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// model file: self-describing versioned JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json model_to_json(const TaggerModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "diachron-tagger";
    j["version"] = 1;
    j["tags"] = m.tags;
    j["total"] = m.total;
    j["lambdas"] = {m.lambda1, m.lambda2, m.lambda3};
    j["theta"] = m.theta;
    j["max_suffix_len"] = m.max_suffix_len;
    j["rare_cutoff"] = m.rare_cutoff;
    j["open_tags"] = m.open_tags;
    j["c1"] = m.c1;
    auto dump_pair = [](const std::pair<int, int>& k) {
        return std::to_string(k.first) + "," + std::to_string(k.second);
    };
    nlohmann::ordered_json c2 = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.c2) c2[dump_pair(k)] = v;
    j["c2"] = std::move(c2);
    nlohmann::ordered_json c3 = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m.c3) {
        auto [a, b, c] = k;
        c3[std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(c)] = v;
    }
    j["c3"] = std::move(c3);
    nlohmann::ordered_json lex = nlohmann::ordered_json::object();
    for (const auto& [w, tags] : m.lexicon) {
        nlohmann::ordered_json e = nlohmann::ordered_json::object();
        for (const auto& [t, c] : tags) e[std::to_string(t)] = c;
        lex[w] = std::move(e);
    }
    j["lexicon"] = std::move(lex);
    nlohmann::ordered_json suf = nlohmann::ordered_json::object();
    for (const auto& [s, p] : m.suffix_p) suf[s] = p;
    j["suffix_p"] = std::move(suf);
    return j;
}

inline TaggerModel model_from_json(const nlohmann::ordered_json& j) {
    if (!j.contains("format") || j["format"] != "diachron-tagger")
        throw DataError("BadModelFile", "not a diachron tagger model");
    if (j["version"] != 1) throw DataError("BadModelFile", "unsupported model version");
    TaggerModel m;
    m.tags = j["tags"].get<std::vector<std::string>>();
    for (size_t i = 0; i < m.tags.size(); ++i) m.tag_id[m.tags[i]] = static_cast<int>(i);
    m.total = j["total"].get<double>();
    m.lambda1 = j["lambdas"][0];
    m.lambda2 = j["lambdas"][1];
    m.lambda3 = j["lambdas"][2];
    m.theta = j["theta"];
    m.max_suffix_len = j["max_suffix_len"];
    m.rare_cutoff = j["rare_cutoff"];
    m.open_tags = j["open_tags"].get<std::vector<int>>();
    m.c1 = j["c1"].get<std::vector<double>>();
    auto parse2 = [](const std::string& s) {
        size_t c = s.find(',');
        return std::pair<int, int>{std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
    };
    for (auto it = j["c2"].begin(); it != j["c2"].end(); ++it) {
        auto k = parse2(it.key());
        m.c2[k] = it.value().get<double>();
        m.ctx2[k.first] += it.value().get<double>();
    }
    for (auto it = j["c3"].begin(); it != j["c3"].end(); ++it) {
        const std::string& s = it.key();
        size_t a = s.find(','), b = s.find(',', a + 1);
        std::tuple<int, int, int> k{std::stoi(s.substr(0, a)), std::stoi(s.substr(a + 1, b - a - 1)),
                                    std::stoi(s.substr(b + 1))};
        m.c3[k] = it.value().get<double>();
        m.ctx3[{std::get<0>(k), std::get<1>(k)}] += it.value().get<double>();
    }
    for (auto it = j["lexicon"].begin(); it != j["lexicon"].end(); ++it) {
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
            m.lexicon[it.key()][std::stoi(jt.key())] = jt.value().get<double>();
            m.word_freq[it.key()] += jt.value().get<double>();
        }
    }
    for (auto it = j["suffix_p"].begin(); it != j["suffix_p"].end(); ++it)
        m.suffix_p[it.key()] = it.value().get<std::vector<double>>();
    return m;
}

} // namespace diachron
