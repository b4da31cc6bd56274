#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsv/common.hpp"
#include "lsv/corpus.hpp"
#include "lsv/model.hpp"
#include "lsv/train.hpp"

namespace lsv {

// Per-layer mean hidden representation of one language, bound to the model
// checkpoint it was computed from.
struct LanguageMean {
    LanguageId lang;
    int dim = 0;
    std::vector<Eigen::VectorXd> layers;  // L+1 vectors
    long count = 0;
    std::string fingerprint;
};

struct ShiftVector {
    LanguageId source, target;
    int layer = 0;
    Eigen::VectorXd delta;
};

struct ShiftSpec {
    ShiftVector shift;
    double alpha = 0.0;
};

// Streaming mean of h^l over all token positions, accumulated in double.
// Special tokens are excluded unless include_special is set.
template <class S>
LanguageMean compute_language_mean(const EncoderModel<S>& model, const Corpus& corpus,
                                   const LanguageId& lang, const std::string& fingerprint,
                                   bool include_special = false) {
    const auto& sents = corpus.of(lang);
    if (sents.empty()) throw std::invalid_argument("empty corpus for language " + lang);

    LanguageMean mean;
    mean.lang = lang;
    mean.dim = model.cfg.hidden_dim;
    mean.fingerprint = fingerprint;
    mean.layers.assign(model.cfg.num_layers + 1,
                       Eigen::VectorXd::Zero(model.cfg.hidden_dim));
    for (const auto& s : sents) {
        for (int id : s.ids)
            if (id >= model.cfg.vocab_size)
                throw std::invalid_argument("model/corpus vocab mismatch");
        auto res = forward(model, s);
        for (std::size_t i = 0; i < s.ids.size(); ++i) {
            if (s.ids[i] == kPadId) continue;
            if (!include_special && is_special(s.ids[i])) continue;
            for (std::size_t l = 0; l < mean.layers.size(); ++l)
                mean.layers[l] += res.hidden[l].row(i).template cast<double>().transpose();
            ++mean.count;
        }
    }
    if (mean.count == 0) throw std::invalid_argument("corpus has no countable positions");
    for (auto& v : mean.layers) v /= static_cast<double>(mean.count);
    return mean;
}

// D^l = R^l_b - R^l_a. Means from different checkpoints are incomparable.
inline ShiftVector mds(const LanguageMean& a, const LanguageMean& b, int layer) {
    if (a.fingerprint != b.fingerprint)
        throw std::invalid_argument("language means come from different checkpoints");
    if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
    if (layer < 0 || layer >= static_cast<int>(a.layers.size()))
        throw std::invalid_argument("layer out of range");
    ShiftVector d;
    d.source = a.lang;
    d.target = b.lang;
    d.layer = layer;
    d.delta = b.layers[layer] - a.layers[layer];
    return d;
}

// Unmasked forward with the weighted shift injected at spec.layer; argmax
// decoding gives one output token per input position.
template <class S>
TokenSeq shift_translate(const EncoderModel<S>& model, const TokenSeq& tokens,
                         const ShiftSpec& spec, bool skip_special = false) {
    Vec<S> delta = spec.shift.delta.cast<S>();
    auto res = forward_with_injection<S>(model, tokens, spec.shift.layer, delta,
                                         static_cast<S>(spec.alpha), skip_special);
    TokenSeq out;
    out.lang = spec.shift.target;
    out.ids = predict_tokens(res.logits);
    return out;
}

// Shifted classification: the shift is tied to the classifier's freeze
// boundary (the layer whose output feeds the first tuned block).
template <class S>
int shifted_classify(const ClassifierModel<S>& clf, const std::vector<int>& premise,
                     const std::vector<int>& hypothesis, const ShiftSpec& spec) {
    if (spec.shift.layer != clf.freeze_k)
        throw std::invalid_argument("shift layer must equal the freeze boundary");
    auto [ids, segs] = encode_pair(premise, hypothesis, clf.encoder.cfg.max_positions);
    Vec<S> combined = (spec.alpha * spec.shift.delta).cast<S>();
    return classify<S>(clf, ids, segs, &combined, spec.shift.layer);
}

struct AlphaRow {
    LanguageId lang;
    double alpha;
    double dev_accuracy;
};

struct AlphaTable {
    std::vector<AlphaRow> grid;                 // every (lang, alpha) cell
    std::map<LanguageId, double> best;          // chosen alpha per language
};

// Best shifting weight per target language by dev accuracy; ties take the
// smallest alpha.
template <class S>
AlphaTable tune_alpha(const ClassifierModel<S>& clf,
                      const std::map<LanguageId, PairDataset>& dev,
                      const std::map<LanguageId, LanguageMean>& means,
                      const LanguageId& source, std::vector<double> alphas) {
    if (alphas.empty()) throw std::invalid_argument("empty alpha grid");
    std::sort(alphas.begin(), alphas.end());
    const auto& src_mean = means.at(source);

    AlphaTable table;
    for (const auto& [lang, ds] : dev) {
        ShiftVector d = mds(src_mean, means.at(lang), clf.freeze_k);
        double best_acc = -1.0, best_alpha = alphas.front();
        for (double alpha : alphas) {
            ShiftSpec spec{d, alpha};
            long correct = 0;
            for (const auto& ex : ds.examples)
                if (shifted_classify<S>(clf, ex.premise.ids, ex.hypothesis.ids, spec) ==
                    ex.label)
                    ++correct;
            double acc = static_cast<double>(correct) / ds.examples.size();
            table.grid.push_back({lang, alpha, acc});
            if (acc > best_acc) {
                best_acc = acc;
                best_alpha = alpha;
            }
        }
        table.best[lang] = best_alpha;
    }
    return table;
}

// ---- means file ----

inline void write_language_mean(const LanguageMean& mean, const std::string& path) {
    nlohmann::json j = {
        {"model_fingerprint", mean.fingerprint},
        {"dim", mean.dim},
        {"num_layers", static_cast<int>(mean.layers.size()) - 1},
        {"lang", mean.lang},
        {"count", mean.count},
    };
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& v : mean.layers) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
        layers.push_back(std::move(row));
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write means file: " + path);
    out << j.dump() << "\n";
}

inline LanguageMean read_language_mean(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open means file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    LanguageMean mean;
    mean.fingerprint = j.at("model_fingerprint");
    mean.dim = j.at("dim");
    mean.lang = j.at("lang");
    mean.count = j.at("count");
    int num_layers = j.at("num_layers");
    const auto& layers = j.at("layers");
    if (static_cast<int>(layers.size()) != num_layers + 1)
        throw std::runtime_error("means file layer count mismatch");
    for (const auto& row : layers) {
        Eigen::VectorXd v(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) v(i) = row[i];
        if (static_cast<int>(v.size()) != mean.dim)
            throw std::runtime_error("means file dim mismatch");
        mean.layers.push_back(std::move(v));
    }
    return mean;
}

// ---- classifier checkpoints (same LSV1 container) ----

template <class S>
void save_classifier(ClassifierModel<S>& c, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    nlohmann::json j = detail::config_json(c.encoder.cfg);
    j["kind"] = "classifier";
    j["num_classes"] = c.num_classes;
    j["freeze_k"] = c.freeze_k;
    detail::write_checkpoint_stream<S>(out, j, param_refs(c));
}

template <class S>
ClassifierModel<S> load_classifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j = detail::read_checkpoint_header(in);
    if (j.at("kind") != "classifier")
        throw std::runtime_error("checkpoint is not a classifier");
    ClassifierModel<S> c =
        make_classifier<S>(make_zero_model<S>(detail::config_from_json(j)),
                           j.at("num_classes"), j.at("freeze_k"), 0);
    detail::read_checkpoint_tensors<S>(in, j, param_refs(c));
    return c;
}

}  // namespace lsv
