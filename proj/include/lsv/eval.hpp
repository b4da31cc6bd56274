#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsv/common.hpp"
#include "lsv/corpus.hpp"
#include "lsv/langspace.hpp"
#include "lsv/model.hpp"

namespace lsv {

inline double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("zero-norm vector");
    return u.dot(v) / (nu * nv);
}

inline double mrr(const std::vector<int>& ranks) {
    if (ranks.empty()) throw std::invalid_argument("empty rank list");
    double sum = 0.0;
    for (int r : ranks) {
        if (r < 1) throw std::invalid_argument("rank must be >= 1");
        sum += 1.0 / r;
    }
    return sum / ranks.size();
}

struct RetrievalReport {
    std::vector<int> ranks;   // best rank over valid targets, per evaluated source
    double mrr = 0.0;
    int evaluated = 0;
    int excluded = 0;         // sources (or all their targets) missing embeddings
};

using WordVectors = std::vector<std::pair<std::string, Eigen::VectorXd>>;

// Closed-vocabulary nearest-neighbor retrieval: candidates are the
// dictionary's target words that have embeddings; ranking is by cosine
// descending with ties broken toward the lower candidate index. Sources with
// several dictionary targets score by their best-ranked one.
inline RetrievalReport retrieve(const WordVectors& src, const WordVectors& tgt,
                                const BilingualDictionary& dict) {
    std::unordered_map<std::string, const Eigen::VectorXd*> src_vec, tgt_vec;
    for (const auto& [w, v] : src) src_vec.emplace(w, &v);
    for (const auto& [w, v] : tgt) tgt_vec.emplace(w, &v);

    // candidate pool in first-occurrence order of the dictionary target side
    std::vector<std::string> candidates;
    std::unordered_map<std::string, int> cand_index;
    for (const auto& [s, t] : dict.pairs) {
        if (cand_index.count(t) || !tgt_vec.count(t)) continue;
        cand_index.emplace(t, static_cast<int>(candidates.size()));
        candidates.push_back(t);
    }
    if (candidates.empty()) throw std::invalid_argument("empty candidate set");

    std::map<std::string, std::vector<std::string>> targets_of;
    std::vector<std::string> source_order;
    for (const auto& [s, t] : dict.pairs) {
        if (!targets_of.count(s)) source_order.push_back(s);
        targets_of[s].push_back(t);
    }

    RetrievalReport report;
    for (const auto& s : source_order) {
        auto it = src_vec.find(s);
        std::vector<int> valid;
        for (const auto& t : targets_of[s]) {
            auto c = cand_index.find(t);
            if (c != cand_index.end()) valid.push_back(c->second);
        }
        if (it == src_vec.end() || valid.empty()) {
            ++report.excluded;
            continue;
        }
        std::vector<double> sims(candidates.size());
        for (std::size_t j = 0; j < candidates.size(); ++j)
            sims[j] = cosine(*it->second, *tgt_vec.at(candidates[j]));
        int best_rank = 0;
        for (int j : valid) {
            int rank = 1;
            for (std::size_t k = 0; k < sims.size(); ++k) {
                if (static_cast<int>(k) == j) continue;
                if (sims[k] > sims[j] ||
                    (sims[k] == sims[j] && static_cast<int>(k) < j))
                    ++rank;
            }
            if (best_rank == 0 || rank < best_rank) best_rank = rank;
        }
        report.ranks.push_back(best_rank);
        ++report.evaluated;
    }
    if (report.ranks.empty()) throw std::invalid_argument("no evaluable pairs");
    report.mrr = mrr(report.ranks);
    return report;
}

struct ConvertReport {
    double cr = 0.0;
    bool defined = false;
    long total = 0;       // output token occurrences
    long shared = 0;      // occurrences in V_s intersect V_t
    long converted = 0;   // occurrences in V_t minus V_s
};

// CR = #{y in Vt-Vs} / (#y - #{y in Vs /\ Vt}), counting occurrences.
inline ConvertReport convert_rate(const std::vector<int>& output, const std::set<int>& vs,
                                  const std::set<int>& vt) {
    if (output.empty()) throw std::invalid_argument("empty output");
    ConvertReport r;
    r.total = static_cast<long>(output.size());
    for (int y : output) {
        bool in_s = vs.count(y) != 0;
        bool in_t = vt.count(y) != 0;
        if (in_s && in_t) ++r.shared;
        if (in_t && !in_s) ++r.converted;
    }
    long denom = r.total - r.shared;
    if (denom > 0) {
        r.cr = static_cast<double>(r.converted) / static_cast<double>(denom);
        r.defined = true;
    }
    return r;
}

// Corpus-level clipped unigram precision times brevity penalty
// exp(min(0, 1 - ref_len/cand_len)), one reference per candidate.
inline double bleu1(const std::vector<TokenSeq>& candidates,
                    const std::vector<TokenSeq>& references) {
    if (candidates.empty()) throw std::invalid_argument("empty candidate corpus");
    if (candidates.size() != references.size())
        throw std::invalid_argument("candidate/reference count mismatch");
    long cand_len = 0, ref_len = 0, matched = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i].ids;
        const auto& r = references[i].ids;
        cand_len += static_cast<long>(c.size());
        ref_len += static_cast<long>(r.size());
        std::unordered_map<int, long> ref_counts;
        for (int id : r) ++ref_counts[id];
        std::unordered_map<int, long> cand_counts;
        for (int id : c) ++cand_counts[id];
        for (const auto& [id, n] : cand_counts) {
            auto it = ref_counts.find(id);
            if (it != ref_counts.end()) matched += std::min(n, it->second);
        }
    }
    if (cand_len == 0) return 0.0;
    double precision = static_cast<double>(matched) / static_cast<double>(cand_len);
    double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) /
                                            static_cast<double>(cand_len)));
    return precision * bp;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& gold) {
    if (predicted.size() != gold.size()) throw std::invalid_argument("length mismatch");
    if (predicted.empty()) throw std::invalid_argument("empty label lists");
    long ok = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == gold[i]) ++ok;
    return static_cast<double>(ok) / predicted.size();
}

struct SweepRow {
    int layer;
    double alpha;
    double convert_rate;
    bool cr_defined;
    double bleu1;
};

struct SweepGrid {
    std::vector<SweepRow> rows;       // ordered by (layer, alpha)
    SweepRow best_bleu{};             // argmax rows over the grid
    SweepRow best_cr{};
};

// Layer x alpha grid of unsupervised token translation metrics. Convert rate
// is pooled over all output tokens of the eval set; BLEU-1 is corpus-level
// against the references.
template <class S>
SweepGrid sweep(const EncoderModel<S>& model, const LanguageMean& src_mean,
                const LanguageMean& tgt_mean, std::vector<int> layers,
                std::vector<double> alphas, const std::vector<TokenSeq>& inputs,
                const std::vector<TokenSeq>& references, const std::set<int>& vs,
                const std::set<int>& vt) {
    if (inputs.empty()) throw std::invalid_argument("empty eval corpus");
    if (inputs.size() != references.size())
        throw std::invalid_argument("input/reference count mismatch");
    std::sort(layers.begin(), layers.end());
    std::sort(alphas.begin(), alphas.end());

    SweepGrid grid;
    for (int layer : layers) {
        ShiftVector d = mds(src_mean, tgt_mean, layer);
        for (double alpha : alphas) {
            ShiftSpec spec{d, alpha};
            std::vector<TokenSeq> outputs;
            std::vector<int> pooled;
            outputs.reserve(inputs.size());
            for (const auto& in : inputs) {
                outputs.push_back(shift_translate<S>(model, in, spec));
                pooled.insert(pooled.end(), outputs.back().ids.begin(),
                              outputs.back().ids.end());
            }
            ConvertReport cr = convert_rate(pooled, vs, vt);
            SweepRow row{layer, alpha, cr.cr, cr.defined, bleu1(outputs, references)};
            if (grid.rows.empty() || row.bleu1 > grid.best_bleu.bleu1)
                grid.best_bleu = row;
            if (grid.rows.empty() ||
                (row.cr_defined && (!grid.best_cr.cr_defined ||
                                    row.convert_rate > grid.best_cr.convert_rate)))
                grid.best_cr = row;
            grid.rows.push_back(row);
        }
    }
    return grid;
}

inline void write_sweep_csv(const SweepGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sweep csv: " + path);
    out << "layer,alpha,convert_rate,bleu1\n";
    char buf[128];
    for (const auto& r : grid.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g,%.6g\n", r.layer, r.alpha,
                      r.cr_defined ? r.convert_rate : std::nan(""), r.bleu1);
        out << buf;
    }
}

inline nlohmann::json sweep_summary(const SweepGrid& grid) {
    auto row_json = [](const SweepRow& r) {
        return nlohmann::json{{"layer", r.layer},
                              {"alpha", r.alpha},
                              {"convert_rate", r.cr_defined ? nlohmann::json(r.convert_rate)
                                                            : nlohmann::json()},
                              {"bleu1", r.bleu1}};
    };
    return {{"best_bleu1", row_json(grid.best_bleu)}, {"best_convert_rate", row_json(grid.best_cr)}};
}

}  // namespace lsv
