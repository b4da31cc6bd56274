#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lsv/common.hpp"
#include "lsv/corpus.hpp"

namespace lsv {

struct EncoderConfig {
    int num_layers = 4;
    int num_heads = 4;
    int hidden_dim = 128;
    int ffn_dim = 512;
    int max_positions = 128;
    int vocab_size = 0;
    double ln_eps = 1e-12;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_layers < 1 || num_heads < 1 || hidden_dim < 1 || ffn_dim < 1 ||
            max_positions < 1 || vocab_size < 1)
            throw std::invalid_argument("all model dimensions must be >= 1");
        if (hidden_dim % num_heads != 0)
            throw std::invalid_argument("hidden_dim must be divisible by num_heads");
        if (ln_eps <= 0.0) throw std::invalid_argument("ln_eps must be > 0");
    }
};

template <class S>
struct EncoderLayer {
    Mat<S> wq, wk, wv, wo;       // [d x d]
    Vec<S> bq, bk, bv, bo;
    Vec<S> ln1_g, ln1_b;
    Mat<S> w1;                   // [d x ffn]
    Vec<S> fb1;
    Mat<S> w2;                   // [ffn x d]
    Vec<S> fb2;
    Vec<S> ln2_g, ln2_b;
};

// Post-norm transformer encoder with an MLM head tied to the token embeddings.
template <class S>
struct EncoderModel {
    EncoderConfig cfg;
    Mat<S> tok_emb;              // [V x d], also the MLM output projection
    Mat<S> pos_emb;              // [P x d]
    Mat<S> seg_emb;              // [2 x d]
    Vec<S> emb_ln_g, emb_ln_b;
    std::vector<EncoderLayer<S>> layers;
    Vec<S> mlm_bias;             // [V]
};

// Non-contextualized baseline vectors (skip-gram input matrix).
struct EmbeddingTable {
    Mat<float> vectors;          // [V x d]
    int dim() const { return static_cast<int>(vectors.cols()); }
};

template <class S>
struct ParamRef {
    std::string name;
    S* data;
    Eigen::Index rows, cols;
    Eigen::Index size() const { return rows * cols; }
};

template <class S>
std::vector<ParamRef<S>> param_refs(EncoderModel<S>& m) {
    std::vector<ParamRef<S>> refs;
    auto mat = [&](const std::string& n, Mat<S>& x) {
        refs.push_back({n, x.data(), x.rows(), x.cols()});
    };
    auto vec = [&](const std::string& n, Vec<S>& x) {
        refs.push_back({n, x.data(), x.size(), 1});
    };
    mat("tok_emb", m.tok_emb);
    mat("pos_emb", m.pos_emb);
    mat("seg_emb", m.seg_emb);
    vec("emb_ln_g", m.emb_ln_g);
    vec("emb_ln_b", m.emb_ln_b);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& L = m.layers[l];
        std::string p = "layer" + std::to_string(l) + ".";
        mat(p + "wq", L.wq); vec(p + "bq", L.bq);
        mat(p + "wk", L.wk); vec(p + "bk", L.bk);
        mat(p + "wv", L.wv); vec(p + "bv", L.bv);
        mat(p + "wo", L.wo); vec(p + "bo", L.bo);
        vec(p + "ln1_g", L.ln1_g); vec(p + "ln1_b", L.ln1_b);
        mat(p + "w1", L.w1); vec(p + "fb1", L.fb1);
        mat(p + "w2", L.w2); vec(p + "fb2", L.fb2);
        vec(p + "ln2_g", L.ln2_g); vec(p + "ln2_b", L.ln2_b);
    }
    vec("mlm_bias", m.mlm_bias);
    return refs;
}

template <class S>
EncoderModel<S> make_zero_model(const EncoderConfig& cfg) {
    cfg.validate();
    const int d = cfg.hidden_dim;
    EncoderModel<S> m;
    m.cfg = cfg;
    m.tok_emb = Mat<S>::Zero(cfg.vocab_size, d);
    m.pos_emb = Mat<S>::Zero(cfg.max_positions, d);
    m.seg_emb = Mat<S>::Zero(2, d);
    m.emb_ln_g = Vec<S>::Zero(d);
    m.emb_ln_b = Vec<S>::Zero(d);
    m.layers.resize(cfg.num_layers);
    for (auto& L : m.layers) {
        L.wq = Mat<S>::Zero(d, d); L.bq = Vec<S>::Zero(d);
        L.wk = Mat<S>::Zero(d, d); L.bk = Vec<S>::Zero(d);
        L.wv = Mat<S>::Zero(d, d); L.bv = Vec<S>::Zero(d);
        L.wo = Mat<S>::Zero(d, d); L.bo = Vec<S>::Zero(d);
        L.ln1_g = Vec<S>::Zero(d); L.ln1_b = Vec<S>::Zero(d);
        L.w1 = Mat<S>::Zero(d, cfg.ffn_dim); L.fb1 = Vec<S>::Zero(cfg.ffn_dim);
        L.w2 = Mat<S>::Zero(cfg.ffn_dim, d); L.fb2 = Vec<S>::Zero(d);
        L.ln2_g = Vec<S>::Zero(d); L.ln2_b = Vec<S>::Zero(d);
    }
    m.mlm_bias = Vec<S>::Zero(cfg.vocab_size);
    return m;
}

// Truncated normal (std 0.02) for weights, layer-norm gain 1 / bias 0.
template <class S>
EncoderModel<S> init_model(const EncoderConfig& cfg) {
    EncoderModel<S> m = make_zero_model<S>(cfg);
    Rng rng(cfg.seed);
    for (auto& r : param_refs(m)) {
        if (r.name.find("ln") != std::string::npos) continue;  // handled below
        if (r.name[0] == 'b' || r.name.find(".b") != std::string::npos ||
            r.name.find("fb") != std::string::npos || r.name == "mlm_bias")
            continue;  // biases stay zero
        Eigen::Map<Mat<S>> view(r.data, r.rows, r.cols);
        fill_truncated_normal<S>(view, static_cast<S>(0.02), rng);
    }
    m.emb_ln_g.setOnes();
    for (auto& L : m.layers) {
        L.ln1_g.setOnes();
        L.ln2_g.setOnes();
    }
    return m;
}

template <class S>
struct LayerCache {
    Mat<S> x_in, q, k, v, o, res1, res1_hat, x1, f_pre, f_act, res2, res2_hat, x2;
    Vec<S> ln1_inv, ln2_inv;
    std::vector<Mat<S>> attn;    // per-head probabilities [T x T]
};

template <class S>
struct ForwardCache {
    std::vector<int> ids, segs;
    std::vector<char> attend;    // 0 where the key position is [PAD]
    Mat<S> emb_raw, emb_hat;
    Vec<S> emb_inv;
    std::vector<LayerCache<S>> layers;
};

template <class S>
struct ForwardResult {
    std::vector<Mat<S>> hidden;  // L+1 grids [T x d]; index 0 = embedding output
    Mat<S> logits;               // [T x V]
};

namespace detail {

template <class S>
Mat<S> layer_norm(const Mat<S>& x, const Vec<S>& g, const Vec<S>& b, S eps,
                  Mat<S>* hat_out, Vec<S>* inv_out) {
    const Eigen::Index d = x.cols();
    Mat<S> hat(x.rows(), d);
    Vec<S> inv(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        S mu = x.row(r).mean();
        S var = (x.row(r).array() - mu).square().sum() / static_cast<S>(d);
        S is = S(1) / std::sqrt(var + eps);
        hat.row(r) = (x.row(r).array() - mu) * is;
        inv(r) = is;
    }
    Mat<S> y = (hat.array().rowwise() * g.transpose().array()).rowwise() +
               b.transpose().array();
    if (hat_out) *hat_out = hat;
    if (inv_out) *inv_out = inv;
    return y;
}

template <class S>
S gelu(S x) {
    return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

template <class S>
S gelu_grad(S x) {
    const S phi = std::exp(S(-0.5) * x * x) / std::sqrt(S(2) * static_cast<S>(M_PI));
    return S(0.5) * (S(1) + std::erf(x / std::sqrt(S(2)))) + x * phi;
}

}  // namespace detail

// Single forward path shared by inference, injection, and training.
// `shift`, when non-null, is the pre-scaled vector added to every position of
// hidden layer `shift_layer` (optionally excluding special tokens).
template <class S>
ForwardResult<S> forward_core(const EncoderModel<S>& m, const std::vector<int>& ids,
                              const std::vector<int>& segs, const Vec<S>* shift,
                              int shift_layer, bool shift_skip_special,
                              ForwardCache<S>* cache) {
    const auto& cfg = m.cfg;
    const int T = static_cast<int>(ids.size());
    const int d = cfg.hidden_dim;
    const int H = cfg.num_heads;
    const int hd = d / H;
    if (T < 1) throw std::invalid_argument("empty sequence");
    if (T > cfg.max_positions) throw std::invalid_argument("sequence too long");
    for (int id : ids)
        if (id < 0 || id >= cfg.vocab_size)
            throw std::invalid_argument("token id out of range");
    if (shift && shift->size() != d) throw std::invalid_argument("shift dim mismatch");
    if (shift && (shift_layer < 0 || shift_layer > cfg.num_layers))
        throw std::invalid_argument("shift layer out of range");

    std::vector<char> attend(T);
    for (int i = 0; i < T; ++i) attend[i] = ids[i] != kPadId;

    Mat<S> raw(T, d);
    for (int i = 0; i < T; ++i)
        raw.row(i) = m.tok_emb.row(ids[i]) + m.pos_emb.row(i) +
                     m.seg_emb.row(segs.empty() ? 0 : segs[i]);

    Mat<S> emb_hat;
    Vec<S> emb_inv;
    Mat<S> x = detail::layer_norm<S>(raw, m.emb_ln_g, m.emb_ln_b,
                                     static_cast<S>(cfg.ln_eps),
                                     cache ? &emb_hat : nullptr,
                                     cache ? &emb_inv : nullptr);

    auto apply_shift = [&](Mat<S>& h) {
        if (shift->cwiseEqual(S(0)).all()) return;  // exact no-op for alpha=0 / D=0
        for (int i = 0; i < T; ++i) {
            if (shift_skip_special && is_special(ids[i])) continue;
            h.row(i) += shift->transpose();
        }
    };

    ForwardResult<S> out;
    out.hidden.reserve(cfg.num_layers + 1);
    if (shift && shift_layer == 0) apply_shift(x);
    out.hidden.push_back(x);

    if (cache) {
        cache->ids = ids;
        cache->segs = segs.empty() ? std::vector<int>(T, 0) : segs;
        cache->attend = attend;
        cache->emb_raw = std::move(raw);
        cache->emb_hat = std::move(emb_hat);
        cache->emb_inv = std::move(emb_inv);
        cache->layers.assign(cfg.num_layers, {});
    }

    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    for (int l = 0; l < cfg.num_layers; ++l) {
        const auto& L = m.layers[l];
        Mat<S> q = (x * L.wq).rowwise() + L.bq.transpose();
        Mat<S> k = (x * L.wk).rowwise() + L.bk.transpose();
        Mat<S> v = (x * L.wv).rowwise() + L.bv.transpose();

        Mat<S> o(T, d);
        std::vector<Mat<S>> probs;
        if (cache) probs.reserve(H);
        for (int h = 0; h < H; ++h) {
            auto qh = q.middleCols(h * hd, hd);
            auto kh = k.middleCols(h * hd, hd);
            auto vh = v.middleCols(h * hd, hd);
            Mat<S> s = qh * kh.transpose() * scale;
            Mat<S> p(T, T);
            for (int r = 0; r < T; ++r) {
                S mx = -std::numeric_limits<S>::infinity();
                for (int c = 0; c < T; ++c)
                    if (attend[c]) mx = std::max(mx, s(r, c));
                S sum = 0;
                for (int c = 0; c < T; ++c) {
                    p(r, c) = attend[c] ? std::exp(s(r, c) - mx) : S(0);
                    sum += p(r, c);
                }
                p.row(r) /= sum;
            }
            o.middleCols(h * hd, hd) = p * vh;
            if (cache) probs.push_back(std::move(p));
        }
        Mat<S> a = (o * L.wo).rowwise() + L.bo.transpose();
        Mat<S> res1 = x + a;
        Mat<S> res1_hat;
        Vec<S> ln1_inv;
        Mat<S> x1 = detail::layer_norm<S>(res1, L.ln1_g, L.ln1_b,
                                          static_cast<S>(cfg.ln_eps),
                                          cache ? &res1_hat : nullptr,
                                          cache ? &ln1_inv : nullptr);
        Mat<S> f_pre = (x1 * L.w1).rowwise() + L.fb1.transpose();
        Mat<S> f_act = f_pre.unaryExpr([](S t) { return detail::gelu(t); });
        Mat<S> res2 = x1 + ((f_act * L.w2).rowwise() + L.fb2.transpose()).eval();
        Mat<S> res2_hat;
        Vec<S> ln2_inv;
        Mat<S> x2 = detail::layer_norm<S>(res2, L.ln2_g, L.ln2_b,
                                          static_cast<S>(cfg.ln_eps),
                                          cache ? &res2_hat : nullptr,
                                          cache ? &ln2_inv : nullptr);
        if (shift && shift_layer == l + 1) apply_shift(x2);
        out.hidden.push_back(x2);

        if (cache) {
            auto& lc = cache->layers[l];
            lc.x_in = std::move(x);
            lc.q = std::move(q); lc.k = std::move(k); lc.v = std::move(v);
            lc.attn = std::move(probs);
            lc.o = std::move(o);
            lc.res1 = std::move(res1);
            lc.res1_hat = std::move(res1_hat); lc.ln1_inv = std::move(ln1_inv);
            lc.x1 = x1;
            lc.f_pre = std::move(f_pre); lc.f_act = std::move(f_act);
            lc.res2 = std::move(res2);
            lc.res2_hat = std::move(res2_hat); lc.ln2_inv = std::move(ln2_inv);
            lc.x2 = out.hidden.back();
        }
        x = out.hidden.back();
    }

    out.logits = (x * m.tok_emb.transpose()).rowwise() + m.mlm_bias.transpose();
    return out;
}

template <class S>
ForwardResult<S> forward(const EncoderModel<S>& m, const TokenSeq& tokens,
                         ForwardCache<S>* cache = nullptr) {
    return forward_core<S>(m, tokens.ids, {}, nullptr, 0, false, cache);
}

// h^l := h^l + alpha * delta at every position of layer `layer`, then the
// remaining blocks and the MLM head.
template <class S>
ForwardResult<S> forward_with_injection(const EncoderModel<S>& m, const TokenSeq& tokens,
                                        int layer, const Vec<S>& delta, S alpha,
                                        bool skip_special = false) {
    if (delta.size() != m.cfg.hidden_dim) throw std::invalid_argument("delta dim mismatch");
    if (layer < 0 || layer > m.cfg.num_layers)
        throw std::invalid_argument("injection layer out of range");
    Vec<S> combined = alpha * delta;
    return forward_core<S>(m, tokens.ids, {}, &combined, layer, skip_special, nullptr);
}

// Composed injections at one layer: the weighted deltas are summed before a
// single addition, so alpha*D followed by -alpha*D is an exact no-op.
template <class S>
ForwardResult<S> forward_with_injection(const EncoderModel<S>& m, const TokenSeq& tokens,
                                        int layer,
                                        const std::vector<std::pair<Vec<S>, S>>& shifts,
                                        bool skip_special = false) {
    if (layer < 0 || layer > m.cfg.num_layers)
        throw std::invalid_argument("injection layer out of range");
    Vec<S> combined = Vec<S>::Zero(m.cfg.hidden_dim);
    for (const auto& [delta, alpha] : shifts) {
        if (delta.size() != m.cfg.hidden_dim)
            throw std::invalid_argument("delta dim mismatch");
        combined += alpha * delta;
    }
    return forward_core<S>(m, tokens.ids, {}, &combined, layer, skip_special, nullptr);
}

// Per-position argmax; ties break toward the lowest token id.
template <class S>
std::vector<int> predict_tokens(const Mat<S>& logits) {
    std::vector<int> out(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        int best = 0;
        S bv = logits(r, 0);
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            S v = logits(r, c);
            if (std::isnan(v)) throw std::invalid_argument("NaN in logits");
            if (v > bv) {
                bv = v;
                best = static_cast<int>(c);
            }
        }
        out[r] = best;
    }
    return out;
}

// Mean of h^layer over every occurrence of `word` across the whole corpus.
template <class S>
Eigen::VectorXd mean_context_embedding(const EncoderModel<S>& m, const Corpus& corpus,
                                       int word, int layer) {
    if (layer < 0 || layer > m.cfg.num_layers)
        throw std::invalid_argument("layer out of range");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.cfg.hidden_dim);
    long count = 0;
    for (const auto& [lang, sents] : corpus.sentences) {
        for (const auto& s : sents) {
            bool hit = false;
            for (int id : s.ids)
                if (id == word) { hit = true; break; }
            if (!hit) continue;
            auto res = forward(m, s);
            for (std::size_t i = 0; i < s.ids.size(); ++i) {
                if (s.ids[i] != word) continue;
                acc += res.hidden[layer].row(i).template cast<double>().transpose();
                ++count;
            }
        }
    }
    if (count == 0) throw std::runtime_error("no occurrence of word in corpus");
    return acc / static_cast<double>(count);
}

// One-pass accumulation of per-token mean context embeddings for every layer,
// for retrieval over whole vocabularies.
struct ContextMeans {
    std::vector<Mat<double>> sums;  // per layer, [V x d]
    std::vector<long> counts;       // per token id

    bool has(int id) const { return counts[id] > 0; }
    Eigen::VectorXd mean(int id, int layer) const {
        if (!has(id)) throw std::runtime_error("no occurrence of word in corpus");
        return sums[layer].row(id).transpose() / static_cast<double>(counts[id]);
    }
};

template <class S>
ContextMeans collect_context_means(const EncoderModel<S>& m, const Corpus& corpus) {
    ContextMeans cm;
    cm.sums.assign(m.cfg.num_layers + 1,
                   Mat<double>::Zero(m.cfg.vocab_size, m.cfg.hidden_dim));
    cm.counts.assign(m.cfg.vocab_size, 0);
    for (const auto& [lang, sents] : corpus.sentences) {
        for (const auto& s : sents) {
            auto res = forward(m, s);
            for (std::size_t i = 0; i < s.ids.size(); ++i) {
                int id = s.ids[i];
                for (std::size_t l = 0; l < cm.sums.size(); ++l)
                    cm.sums[l].row(id) += res.hidden[l].row(i).template cast<double>();
                ++cm.counts[id];
            }
        }
    }
    return cm;
}

// ---- LSV1 checkpoint format ----
// "LSV1" | u32 version | u64 config length | canonical config JSON |
// float32 LE row-major tensors in manifest order.

namespace detail {

inline nlohmann::json config_json(const EncoderConfig& cfg) {
    return {
        {"num_layers", cfg.num_layers},   {"num_heads", cfg.num_heads},
        {"hidden_dim", cfg.hidden_dim},   {"ffn_dim", cfg.ffn_dim},
        {"max_positions", cfg.max_positions}, {"vocab_size", cfg.vocab_size},
        {"ln_eps", cfg.ln_eps},           {"seed", cfg.seed},
    };
}

inline EncoderConfig config_from_json(const nlohmann::json& j) {
    EncoderConfig cfg;
    cfg.num_layers = j.at("num_layers");
    cfg.num_heads = j.at("num_heads");
    cfg.hidden_dim = j.at("hidden_dim");
    cfg.ffn_dim = j.at("ffn_dim");
    cfg.max_positions = j.at("max_positions");
    cfg.vocab_size = j.at("vocab_size");
    cfg.ln_eps = j.at("ln_eps");
    cfg.seed = j.at("seed");
    return cfg;
}

template <class S>
void write_checkpoint_stream(std::ostream& out, const nlohmann::json& config,
                             const std::vector<ParamRef<S>>& refs) {
    nlohmann::json j = config;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& r : refs)
        manifest.push_back({{"name", r.name}, {"rows", r.rows}, {"cols", r.cols}});
    j["manifest"] = manifest;
    std::string cfg_str = j.dump();

    out.write("LSV1", 4);
    std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    std::uint64_t len = cfg_str.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(cfg_str.data(), static_cast<std::streamsize>(cfg_str.size()));
    std::vector<float> buf;
    for (const auto& r : refs) {
        buf.resize(static_cast<std::size_t>(r.size()));
        for (Eigen::Index i = 0; i < r.size(); ++i)
            buf[static_cast<std::size_t>(i)] = static_cast<float>(r.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
}

inline nlohmann::json read_checkpoint_header(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "LSV1", 4) != 0)
        throw std::runtime_error("not an LSV1 checkpoint");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string cfg_str(len, '\0');
    in.read(cfg_str.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("truncated checkpoint header");
    return nlohmann::json::parse(cfg_str);
}

template <class S>
void read_checkpoint_tensors(std::istream& in, const nlohmann::json& j,
                             const std::vector<ParamRef<S>>& refs) {
    const auto& manifest = j.at("manifest");
    if (manifest.size() != refs.size())
        throw std::runtime_error("checkpoint manifest size mismatch");
    std::vector<float> buf;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& entry = manifest[i];
        const auto& r = refs[i];
        if (entry.at("name") != r.name || entry.at("rows") != r.rows ||
            entry.at("cols") != r.cols)
            throw std::runtime_error("checkpoint manifest entry mismatch: " + r.name);
        buf.resize(static_cast<std::size_t>(r.size()));
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) throw std::runtime_error("truncated checkpoint tensors");
        for (Eigen::Index k = 0; k < r.size(); ++k)
            r.data[k] = static_cast<S>(buf[static_cast<std::size_t>(k)]);
    }
}

}  // namespace detail

template <class S>
void save_checkpoint(EncoderModel<S>& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    nlohmann::json j = detail::config_json(m.cfg);
    j["kind"] = "encoder";
    detail::write_checkpoint_stream<S>(out, j, param_refs(m));
}

template <class S>
EncoderModel<S> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j = detail::read_checkpoint_header(in);
    if (j.at("kind") != "encoder") throw std::runtime_error("checkpoint is not an encoder");
    EncoderModel<S> m = make_zero_model<S>(detail::config_from_json(j));
    detail::read_checkpoint_tensors<S>(in, j, param_refs(m));
    return m;
}

inline void save_embedding_table(EmbeddingTable& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    nlohmann::json j = {{"kind", "embedding_table"},
                        {"vocab_size", t.vectors.rows()},
                        {"dim", t.vectors.cols()}};
    std::vector<ParamRef<float>> refs = {
        {"vectors", t.vectors.data(), t.vectors.rows(), t.vectors.cols()}};
    detail::write_checkpoint_stream<float>(out, j, refs);
}

inline EmbeddingTable load_embedding_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j = detail::read_checkpoint_header(in);
    if (j.at("kind") != "embedding_table")
        throw std::runtime_error("checkpoint is not an embedding table");
    EmbeddingTable t;
    t.vectors = Mat<float>::Zero(j.at("vocab_size").get<Eigen::Index>(),
                                 j.at("dim").get<Eigen::Index>());
    std::vector<ParamRef<float>> refs = {
        {"vectors", t.vectors.data(), t.vectors.rows(), t.vectors.cols()}};
    detail::read_checkpoint_tensors<float>(in, j, refs);
    return t;
}

// Fingerprint of the serialized model, used to bind language means to the
// checkpoint they came from.
template <class S>
std::string model_fingerprint(EncoderModel<S>& m) {
    std::ostringstream buf(std::ios::binary);
    nlohmann::json j = detail::config_json(m.cfg);
    j["kind"] = "encoder";
    detail::write_checkpoint_stream<S>(buf, j, param_refs(m));
    std::string s = buf.str();
    return to_hex(fnv1a64(s.data(), s.size()));
}

inline std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string s = buf.str();
    return to_hex(fnv1a64(s.data(), s.size()));
}

}  // namespace lsv
