#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lsv/common.hpp"
#include "lsv/corpus.hpp"
#include "lsv/model.hpp"

namespace lsv {

// ---- backward pass ----

namespace detail {

template <class S>
void layer_norm_backward(const Mat<S>& hat, const Vec<S>& inv, const Vec<S>& g,
                         const Mat<S>& dy, Mat<S>& dx, Vec<S>& dg, Vec<S>& db) {
    const Eigen::Index d = hat.cols();
    dg += (dy.array() * hat.array()).colwise().sum().matrix().transpose();
    db += dy.colwise().sum().transpose();
    dx.resize(hat.rows(), d);
    for (Eigen::Index r = 0; r < hat.rows(); ++r) {
        Eigen::Array<S, 1, Eigen::Dynamic> dyh =
            dy.row(r).array() * g.transpose().array();
        S m1 = dyh.mean();
        S m2 = (dyh * hat.row(r).array()).mean();
        dx.row(r) = (inv(r) * (dyh - m1 - hat.row(r).array() * m2)).matrix();
    }
}

}  // namespace detail

// Accumulates parameter gradients into `g` (an EncoderModel used as a gradient
// holder). Either or both of d_logits / d_last_hidden may be null.
template <class S>
void encoder_backward(const EncoderModel<S>& m, const ForwardCache<S>& cache,
                      const Mat<S>* d_logits, const Mat<S>* d_last_hidden,
                      EncoderModel<S>& g) {
    const auto& cfg = m.cfg;
    const int T = static_cast<int>(cache.ids.size());
    const int d = cfg.hidden_dim;
    const int H = cfg.num_heads;
    const int hd = d / H;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));

    const Mat<S>& x_last = cache.layers.back().x2;
    Mat<S> dx = Mat<S>::Zero(T, d);
    if (d_logits) {
        dx += *d_logits * m.tok_emb;
        g.tok_emb += d_logits->transpose() * x_last;
        g.mlm_bias += d_logits->colwise().sum().transpose();
    }
    if (d_last_hidden) dx += *d_last_hidden;

    for (int l = cfg.num_layers - 1; l >= 0; --l) {
        const auto& L = m.layers[l];
        auto& gl = g.layers[l];
        const auto& lc = cache.layers[l];

        Mat<S> dres2;
        detail::layer_norm_backward<S>(lc.res2_hat, lc.ln2_inv, L.ln2_g, dx, dres2,
                                       gl.ln2_g, gl.ln2_b);
        Mat<S> dx1 = dres2;
        gl.w2 += lc.f_act.transpose() * dres2;
        gl.fb2 += dres2.colwise().sum().transpose();
        Mat<S> df_act = dres2 * L.w2.transpose();
        Mat<S> df_pre = df_act.array() *
                        lc.f_pre.unaryExpr([](S t) { return detail::gelu_grad(t); }).array();
        gl.w1 += lc.x1.transpose() * df_pre;
        gl.fb1 += df_pre.colwise().sum().transpose();
        dx1 += df_pre * L.w1.transpose();

        Mat<S> dres1;
        detail::layer_norm_backward<S>(lc.res1_hat, lc.ln1_inv, L.ln1_g, dx1, dres1,
                                       gl.ln1_g, gl.ln1_b);
        Mat<S> dxin = dres1;
        gl.wo += lc.o.transpose() * dres1;
        gl.bo += dres1.colwise().sum().transpose();
        Mat<S> d_o = dres1 * L.wo.transpose();

        Mat<S> dq = Mat<S>::Zero(T, d), dk = Mat<S>::Zero(T, d), dv = Mat<S>::Zero(T, d);
        for (int h = 0; h < H; ++h) {
            const Mat<S>& p = lc.attn[h];
            auto qh = lc.q.middleCols(h * hd, hd);
            auto kh = lc.k.middleCols(h * hd, hd);
            auto vh = lc.v.middleCols(h * hd, hd);
            Mat<S> doh = d_o.middleCols(h * hd, hd);
            Mat<S> dp = doh * vh.transpose();
            dv.middleCols(h * hd, hd) = p.transpose() * doh;
            Vec<S> rowdot = (dp.array() * p.array()).rowwise().sum();
            Mat<S> ds = p.array() * (dp.colwise() - rowdot).array();
            dq.middleCols(h * hd, hd) = ds * kh * scale;
            dk.middleCols(h * hd, hd) = ds.transpose() * qh * scale;
        }
        gl.wq += lc.x_in.transpose() * dq;
        gl.bq += dq.colwise().sum().transpose();
        gl.wk += lc.x_in.transpose() * dk;
        gl.bk += dk.colwise().sum().transpose();
        gl.wv += lc.x_in.transpose() * dv;
        gl.bv += dv.colwise().sum().transpose();
        dxin += dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
        dx = std::move(dxin);
    }

    Mat<S> draw;
    detail::layer_norm_backward<S>(cache.emb_hat, cache.emb_inv, m.emb_ln_g, dx, draw,
                                   g.emb_ln_g, g.emb_ln_b);
    for (int i = 0; i < T; ++i) {
        g.tok_emb.row(cache.ids[i]) += draw.row(i);
        g.pos_emb.row(i) += draw.row(i);
        g.seg_emb.row(cache.segs[i]) += draw.row(i);
    }
}

// ---- MLM objective ----

struct MlmHyper {
    int batch_size = 32;
    long steps = 2000;
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double mask_fraction = 0.15;
    double p_mask = 0.8, p_random = 0.1, p_keep = 0.1;
    std::uint64_t seed = 1;
    long log_every = 100;
    double warmup_fraction = 0.05;

    void validate() const {
        if (mask_fraction <= 0.0 || mask_fraction >= 1.0)
            throw std::invalid_argument("mask fraction must be in (0,1)");
        if (std::abs(p_mask + p_random + p_keep - 1.0) > 1e-9)
            throw std::invalid_argument("mask/random/keep split must sum to 1");
        if (batch_size < 1 || steps < 1) throw std::invalid_argument("invalid hyper");
    }
};

struct MlmItem {
    std::vector<int> ids;       // corrupted input, wrapped in [CLS]/[SEP]
    std::vector<int> targets;   // original id at predicted positions, -1 elsewhere
};

// BERT-style corruption of one sentence; positions are chosen i.i.d. with the
// configured fraction, special tokens are never selected.
inline MlmItem make_mlm_item(const TokenSeq& sent, const MlmHyper& h, int vocab_size,
                             Rng& rng) {
    MlmItem item;
    item.ids.push_back(kClsId);
    for (int id : sent.ids) item.ids.push_back(id);
    item.ids.push_back(kSepId);
    item.targets.assign(item.ids.size(), -1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> rand_tok(kNumSpecials, vocab_size - 1);
    for (std::size_t i = 0; i < item.ids.size(); ++i) {
        if (is_special(item.ids[i])) continue;
        if (uni(rng) >= h.mask_fraction) continue;
        item.targets[i] = item.ids[i];
        double u = uni(rng);
        if (u < h.p_mask)
            item.ids[i] = kMaskId;
        else if (u < h.p_mask + h.p_random)
            item.ids[i] = rand_tok(rng);
        // else keep
    }
    return item;
}

// Mean cross entropy over target positions; gradients accumulated if grad set.
template <class S>
double mlm_loss(const EncoderModel<S>& m, const std::vector<MlmItem>& items,
                EncoderModel<S>* grad = nullptr) {
    long total = 0;
    for (const auto& it : items)
        for (int t : it.targets)
            if (t >= 0) ++total;
    if (total == 0) throw std::invalid_argument("batch has no masked positions");

    double loss = 0.0;
    for (const auto& it : items) {
        ForwardCache<S> cache;
        auto res = forward_core<S>(m, it.ids, {}, nullptr, 0, false,
                                   grad ? &cache : nullptr);
        Mat<S> dz;
        if (grad) dz = Mat<S>::Zero(res.logits.rows(), res.logits.cols());
        for (Eigen::Index r = 0; r < res.logits.rows(); ++r) {
            int tgt = it.targets[static_cast<std::size_t>(r)];
            if (tgt < 0) continue;
            // stable log-softmax in double
            Eigen::VectorXd z = res.logits.row(r).template cast<double>();
            double mx = z.maxCoeff();
            double lse = mx + std::log((z.array() - mx).exp().sum());
            loss += (lse - z(tgt)) / static_cast<double>(total);
            if (grad) {
                Eigen::VectorXd p = (z.array() - lse).exp();
                p(tgt) -= 1.0;
                dz.row(r) = (p / static_cast<double>(total)).cast<S>().transpose();
            }
        }
        if (grad) encoder_backward<S>(m, cache, &dz, nullptr, *grad);
    }
    return loss;
}

// ---- Adam ----

template <class S>
struct Adam {
    double lr, beta1, beta2, eps;
    long t = 0;
    std::vector<Eigen::VectorXd> m1, m2;

    Adam(double lr_, double b1, double b2, double eps_,
         const std::vector<ParamRef<S>>& refs)
        : lr(lr_), beta1(b1), beta2(b2), eps(eps_) {
        for (const auto& r : refs) {
            m1.push_back(Eigen::VectorXd::Zero(r.size()));
            m2.push_back(Eigen::VectorXd::Zero(r.size()));
        }
    }

    void step(const std::vector<ParamRef<S>>& params,
              const std::vector<ParamRef<S>>& grads, double lr_scale = 1.0,
              const std::vector<char>* frozen = nullptr) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (frozen && (*frozen)[i]) continue;
            auto& p = params[i];
            auto& g = grads[i];
            for (Eigen::Index k = 0; k < p.size(); ++k) {
                double gv = static_cast<double>(g.data[k]);
                m1[i](k) = beta1 * m1[i](k) + (1.0 - beta1) * gv;
                m2[i](k) = beta2 * m2[i](k) + (1.0 - beta2) * gv * gv;
                double update = (m1[i](k) / bc1) /
                                (std::sqrt(m2[i](k) / bc2) + eps);
                p.data[k] -= static_cast<S>(lr * lr_scale * update);
            }
        }
    }
};

template <class S>
void zero_params(std::vector<ParamRef<S>>& refs) {
    for (auto& r : refs)
        Eigen::Map<Vec<S>>(r.data, r.size()).setZero();
}

using LossCurve = std::vector<std::pair<long, double>>;

// Joint MLM pretraining over all languages of the corpus.
template <class S>
LossCurve train_mlm(EncoderModel<S>& model, const Corpus& corpus, const MlmHyper& hyper) {
    hyper.validate();
    std::vector<const TokenSeq*> pool;
    for (const auto& [lang, sents] : corpus.sentences)
        for (const auto& s : sents) pool.push_back(&s);
    if (pool.empty()) throw std::invalid_argument("empty corpus");
    for (const auto* s : pool)
        if (static_cast<int>(s->ids.size()) + 2 > model.cfg.max_positions)
            throw std::invalid_argument("sentence exceeds max positions; slice first");

    Rng rng(hyper.seed);
    auto params = param_refs(model);
    EncoderModel<S> grad = make_zero_model<S>(model.cfg);
    auto grads = param_refs(grad);
    Adam<S> opt(hyper.lr, hyper.beta1, hyper.beta2, hyper.adam_eps, params);
    const long warmup = std::max<long>(1, static_cast<long>(hyper.steps * hyper.warmup_fraction));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

    LossCurve curve;
    for (long step = 1; step <= hyper.steps; ++step) {
        std::vector<MlmItem> batch;
        long targets = 0;
        do {  // a batch with zero masked positions is resampled
            batch.clear();
            targets = 0;
            for (int b = 0; b < hyper.batch_size; ++b) {
                batch.push_back(make_mlm_item(*pool[pick(rng)], hyper,
                                              model.cfg.vocab_size, rng));
                for (int t : batch.back().targets)
                    if (t >= 0) ++targets;
            }
        } while (targets == 0);

        zero_params(grads);
        double loss = mlm_loss<S>(model, batch, &grad);
        double lr_scale = std::min(1.0, static_cast<double>(step) / warmup);
        opt.step(params, grads, lr_scale);

        if (step % hyper.log_every == 0 || step == hyper.steps)
            curve.emplace_back(step, loss);
    }
    return curve;
}

// Deterministically masked loss on a fixed sentence set (no gradient).
template <class S>
double mlm_eval_loss(const EncoderModel<S>& model, const std::vector<TokenSeq>& sents,
                     const MlmHyper& hyper, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<MlmItem> items;
    for (const auto& s : sents)
        items.push_back(make_mlm_item(s, hyper, model.cfg.vocab_size, rng));
    return mlm_loss<S>(model, items, nullptr);
}

// ---- skip-gram with negative sampling ----

struct SgnsHyper {
    int dim = 64;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    std::uint64_t seed = 1;

    void validate() const {
        if (window < 1) throw std::invalid_argument("window must be >= 1");
        if (negatives < 1) throw std::invalid_argument("negatives must be >= 1");
        if (dim < 1 || epochs < 1 || lr <= 0) throw std::invalid_argument("invalid hyper");
    }
};

inline EmbeddingTable train_sgns(const Corpus& corpus, const Vocab& vocab,
                                 const SgnsHyper& hyper) {
    hyper.validate();
    const int V = vocab.size();
    std::vector<const TokenSeq*> pool;
    for (const auto& [lang, sents] : corpus.sentences)
        for (const auto& s : sents) pool.push_back(&s);
    if (pool.empty()) throw std::invalid_argument("empty corpus");

    std::vector<long> counts(V, 0);
    long total_centers = 0;
    bool any_pair = false;
    for (const auto* s : pool) {
        for (int id : s->ids) ++counts[id];
        total_centers += static_cast<long>(s->ids.size());
        if (s->ids.size() >= 2) any_pair = true;
    }
    if (!any_pair) throw std::invalid_argument("no training pairs");

    // unigram^(3/4) negative-sampling table
    std::vector<int> table;
    table.reserve(1 << 20);
    {
        double z = 0.0;
        for (int i = kNumSpecials; i < V; ++i)
            z += std::pow(static_cast<double>(counts[i]), 0.75);
        if (z <= 0) throw std::invalid_argument("no training pairs");
        for (int i = kNumSpecials; i < V; ++i) {
            auto n = static_cast<long>(std::pow(static_cast<double>(counts[i]), 0.75) /
                                       z * (1 << 20));
            for (long k = 0; k < n; ++k) table.push_back(i);
        }
        if (table.empty()) table.push_back(kNumSpecials);
    }

    Rng rng(hyper.seed);
    Mat<float> in(V, hyper.dim), out(V, hyper.dim);
    std::uniform_real_distribution<float> u(-0.5f / hyper.dim, 0.5f / hyper.dim);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = u(rng);
    out.setZero();

    std::uniform_int_distribution<std::size_t> tab(0, table.size() - 1);
    const long total_steps = total_centers * hyper.epochs;
    long done = 0;
    Eigen::RowVectorXf acc(hyper.dim);
    for (int ep = 0; ep < hyper.epochs; ++ep) {
        for (const auto* s : pool) {
            const auto& ids = s->ids;
            for (std::size_t c = 0; c < ids.size(); ++c, ++done) {
                float lr = static_cast<float>(
                    hyper.lr * std::max(1e-4, 1.0 - static_cast<double>(done) / total_steps));
                int b = 1 + static_cast<int>(rng() % hyper.window);
                std::size_t lo = c >= static_cast<std::size_t>(b) ? c - b : 0;
                std::size_t hi = std::min(ids.size() - 1, c + static_cast<std::size_t>(b));
                for (std::size_t o = lo; o <= hi; ++o) {
                    if (o == c) continue;
                    acc.setZero();
                    auto center = in.row(ids[c]);
                    for (int n = 0; n <= hyper.negatives; ++n) {
                        int target;
                        float label;
                        if (n == 0) {
                            target = ids[o];
                            label = 1.0f;
                        } else {
                            target = table[tab(rng)];
                            if (target == ids[o]) continue;
                            label = 0.0f;
                        }
                        auto ctx = out.row(target);
                        float f = 1.0f / (1.0f + std::exp(-center.dot(ctx)));
                        float gscale = (label - f) * lr;
                        acc += gscale * ctx;
                        out.row(target) += gscale * center;
                    }
                    in.row(ids[c]) += acc;
                }
            }
        }
    }
    return EmbeddingTable{std::move(in)};
}

// ---- synthetic sentence-pair transfer task ----

struct PairExample {
    TokenSeq premise, hypothesis;
    int label;
};

struct PairDataset {
    std::vector<PairExample> examples;
    std::string split;
    LanguageId lang;
};

struct TransferTask {
    // lang -> split ("train"/"dev"/"test") -> dataset
    std::map<LanguageId, std::map<std::string, PairDataset>> data;
    int num_classes = 3;
    int negation_token = -1;  // base-language designated token
};

namespace detail {

inline bool contains_subsequence(const std::vector<int>& hay, const std::vector<int>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t off = 0; off + needle.size() <= hay.size(); ++off) {
        bool ok = true;
        for (std::size_t i = 0; i < needle.size(); ++i)
            if (hay[off + i] != needle[i]) { ok = false; break; }
        if (ok) return true;
    }
    return false;
}

inline bool overlaps(const std::vector<int>& a, const std::vector<int>& b) {
    for (int x : b)
        for (int y : a)
            if (x == y) return true;
    return false;
}

}  // namespace detail

// Rule labels on the base language: 0 = hypothesis is a contiguous
// subsequence of the premise, 1 = hypothesis carries the negation token and
// overlaps the premise, 2 = otherwise.
inline int pair_label(const std::vector<int>& premise, const std::vector<int>& hypothesis,
                      int negation_token) {
    if (detail::contains_subsequence(premise, hypothesis)) return 0;
    bool neg = std::find(hypothesis.begin(), hypothesis.end(), negation_token) !=
               hypothesis.end();
    if (neg && detail::overlaps(premise, hypothesis)) return 1;
    return 2;
}

// Sentence sampler shared with generate_parallel_corpus semantics: same
// Zipfian unigram model and L1->L2 token bijection.
struct ParallelSampler {
    Vocab vocab;
    std::vector<int> rank_to_l1;
    std::unordered_map<int, int> bijection;
    SyntheticSpec spec;
    detail::ZipfSampler zipf;

    explicit ParallelSampler(const SyntheticSpec& sp, const Vocab& v,
                             std::vector<int> ranks, std::unordered_map<int, int> bij)
        : vocab(v), rank_to_l1(std::move(ranks)), bijection(std::move(bij)), spec(sp),
          zipf(sp.base_vocab, sp.zipf_exponent) {}

    std::vector<int> sample_sentence(int len, Rng& rng) const {
        std::vector<int> ids(len);
        for (int& id : ids) id = rank_to_l1[zipf(rng)];
        return ids;
    }

    std::vector<int> to_l2(const std::vector<int>& ids) const {
        std::vector<int> out;
        out.reserve(ids.size());
        for (int id : ids) {
            auto it = bijection.find(id);
            out.push_back(it == bijection.end() ? id : it->second);
        }
        return out;
    }
};

// Rebuilds the generator state of generate_parallel_corpus for the same spec.
inline ParallelSampler make_parallel_sampler(const SyntheticSpec& spec) {
    auto [corpus, vocab, dict] = generate_parallel_corpus(spec);
    (void)corpus;
    std::unordered_map<int, int> bij;
    for (const auto& [s, t] : dict.pairs) bij[vocab.id_of(s)] = vocab.id_of(t);
    const int n_anchor = static_cast<int>(spec.base_vocab * spec.anchor_fraction);
    const int n_free = spec.base_vocab - n_anchor;
    std::vector<int> ranks;
    {
        // replay the generator's rank shuffle
        Rng rng(spec.seed);
        std::vector<int> anchor_ids, l1_ids;
        for (int i = 0; i < n_anchor; ++i) anchor_ids.push_back(vocab.id_of("a" + std::to_string(i)));
        for (int i = 0; i < n_free; ++i) l1_ids.push_back(vocab.id_of("x" + std::to_string(i)));
        std::vector<int> perm(n_free);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<int> base = anchor_ids;
        base.insert(base.end(), l1_ids.begin(), l1_ids.end());
        std::shuffle(base.begin(), base.end(), rng);
        ranks = base;
    }
    return ParallelSampler(spec, vocab, std::move(ranks), std::move(bij));
}

inline TransferTask make_transfer_task(const SyntheticSpec& spec, int n_train, int n_dev,
                                       int n_test, std::uint64_t seed,
                                       const LanguageId& l1 = "L1",
                                       const LanguageId& l2 = "L2") {
    ParallelSampler gen = make_parallel_sampler(spec);
    const int n_anchor = static_cast<int>(spec.base_vocab * spec.anchor_fraction);
    const int negation = n_anchor > 0 ? gen.vocab.id_of("a0") : gen.vocab.id_of("x0");

    Rng rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const int total = n_train + n_dev + n_test;

    std::vector<std::tuple<std::vector<int>, std::vector<int>, int>> base;
    std::set<int> seen_labels;
    for (int k = 0; k < total; ++k) {
        int plen = std::uniform_int_distribution<int>(
            std::max(4, spec.min_sentence_len), spec.max_sentence_len)(rng);
        std::vector<int> premise = gen.sample_sentence(plen, rng);
        std::vector<int> hyp;
        switch (k % 3) {
            case 0: {  // contiguous slice of the premise
                int len = std::uniform_int_distribution<int>(1, plen)(rng);
                int off = std::uniform_int_distribution<int>(0, plen - len)(rng);
                hyp.assign(premise.begin() + off, premise.begin() + off + len);
                break;
            }
            case 1: {  // negation token plus premise overlap
                hyp.push_back(negation);
                int n = std::uniform_int_distribution<int>(1, 3)(rng);
                for (int i = 0; i < n; ++i)
                    hyp.push_back(premise[std::uniform_int_distribution<int>(0, plen - 1)(rng)]);
                std::shuffle(hyp.begin(), hyp.end(), rng);
                break;
            }
            default:
                hyp = gen.sample_sentence(
                    std::uniform_int_distribution<int>(2, std::max(2, plen / 2))(rng), rng);
        }
        int label = pair_label(premise, hyp, negation);
        seen_labels.insert(label);
        base.emplace_back(std::move(premise), std::move(hyp), label);
    }
    if (seen_labels.size() < 2)
        throw std::runtime_error("degenerate spec: transfer task has a single class");

    TransferTask task;
    task.negation_token = negation;
    auto emit = [&](const LanguageId& lang, bool mapped) {
        auto& splits = task.data[lang];
        const char* names[3] = {"train", "dev", "test"};
        int bounds[3] = {n_train, n_train + n_dev, total};
        int idx = 0;
        for (int split = 0; split < 3; ++split) {
            PairDataset ds;
            ds.split = names[split];
            ds.lang = lang;
            for (; idx < bounds[split]; ++idx) {
                const auto& [p, h, label] = base[idx];
                PairExample ex;
                ex.premise = {mapped ? gen.to_l2(p) : p, lang};
                ex.hypothesis = {mapped ? gen.to_l2(h) : h, lang};
                ex.label = label;
                ds.examples.push_back(std::move(ex));
            }
            splits[ds.split] = std::move(ds);
        }
    };
    emit(l1, false);
    emit(l2, true);
    return task;
}

// ---- classifier ----

template <class S>
struct ClassifierModel {
    EncoderModel<S> encoder;
    Mat<S> pool_w;   // [d x d], tanh pooling over [CLS]
    Vec<S> pool_b;
    Mat<S> head_w;   // [d x K]
    Vec<S> head_b;
    int num_classes = 3;
    int freeze_k = 0;  // frozen lower blocks; embeddings frozen iff >= 1
};

template <class S>
std::vector<ParamRef<S>> param_refs(ClassifierModel<S>& c) {
    auto refs = param_refs(c.encoder);
    refs.push_back({"pool_w", c.pool_w.data(), c.pool_w.rows(), c.pool_w.cols()});
    refs.push_back({"pool_b", c.pool_b.data(), c.pool_b.size(), 1});
    refs.push_back({"head_w", c.head_w.data(), c.head_w.rows(), c.head_w.cols()});
    refs.push_back({"head_b", c.head_b.data(), c.head_b.size(), 1});
    return refs;
}

template <class S>
ClassifierModel<S> make_classifier(EncoderModel<S> encoder, int num_classes, int freeze_k,
                                   std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (freeze_k < 0 || freeze_k > encoder.cfg.num_layers)
        throw std::invalid_argument("freeze_k out of range");
    const int d = encoder.cfg.hidden_dim;
    ClassifierModel<S> c;
    c.encoder = std::move(encoder);
    c.num_classes = num_classes;
    c.freeze_k = freeze_k;
    Rng rng(seed);
    c.pool_w = Mat<S>::Zero(d, d);
    fill_truncated_normal<S>(c.pool_w, static_cast<S>(0.02), rng);
    c.pool_b = Vec<S>::Zero(d);
    c.head_w = Mat<S>::Zero(d, num_classes);
    fill_truncated_normal<S>(c.head_w, static_cast<S>(0.02), rng);
    c.head_b = Vec<S>::Zero(num_classes);
    return c;
}

// [CLS] premise [SEP] hypothesis [SEP], segment ids 0/1; each side truncated
// to fit max positions.
inline std::pair<std::vector<int>, std::vector<int>>
encode_pair(const std::vector<int>& premise, const std::vector<int>& hypothesis,
            int max_positions) {
    const int budget = max_positions - 3;
    int pl = static_cast<int>(premise.size());
    int hl = static_cast<int>(hypothesis.size());
    while (pl + hl > budget) (pl >= hl ? pl : hl)--;
    std::vector<int> ids, segs;
    ids.push_back(kClsId); segs.push_back(0);
    for (int i = 0; i < pl; ++i) { ids.push_back(premise[i]); segs.push_back(0); }
    ids.push_back(kSepId); segs.push_back(0);
    for (int i = 0; i < hl; ++i) { ids.push_back(hypothesis[i]); segs.push_back(1); }
    ids.push_back(kSepId); segs.push_back(1);
    return {std::move(ids), std::move(segs)};
}

// Class logits; optional shift injected at `shift_layer` like
// forward_with_injection.
template <class S>
Vec<S> classifier_logits(const ClassifierModel<S>& c, const std::vector<int>& ids,
                         const std::vector<int>& segs, const Vec<S>* shift = nullptr,
                         int shift_layer = 0, ForwardCache<S>* cache = nullptr,
                         Mat<S>* pooled_out = nullptr) {
    auto res = forward_core<S>(c.encoder, ids, segs, shift, shift_layer, false, cache);
    Mat<S> cls = res.hidden.back().row(0);
    Mat<S> pooled = ((cls * c.pool_w).rowwise() + c.pool_b.transpose())
                        .unaryExpr([](S t) { return std::tanh(t); });
    Vec<S> logits = (pooled * c.head_w).transpose() + c.head_b;
    if (pooled_out) *pooled_out = pooled;
    return logits;
}

template <class S>
int classify(const ClassifierModel<S>& c, const std::vector<int>& ids,
             const std::vector<int>& segs, const Vec<S>* shift = nullptr,
             int shift_layer = 0) {
    Vec<S> z = classifier_logits<S>(c, ids, segs, shift, shift_layer);
    int best = 0;
    for (int k = 1; k < c.num_classes; ++k)
        if (z(k) > z(best)) best = k;
    return best;
}

struct ClassifierItem {
    std::vector<int> ids, segs;
    int label;
};

// Mean cross entropy over the batch; gradients accumulated if grad set.
template <class S>
double classifier_loss(const ClassifierModel<S>& c, const std::vector<ClassifierItem>& items,
                       ClassifierModel<S>* grad = nullptr) {
    if (items.empty()) throw std::invalid_argument("empty batch");
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(items.size());
    for (const auto& it : items) {
        ForwardCache<S> cache;
        Mat<S> pooled;
        Vec<S> logits = classifier_logits<S>(c, it.ids, it.segs, nullptr, 0,
                                             grad ? &cache : nullptr, &pooled);
        Eigen::VectorXd z = logits.template cast<double>();
        double mx = z.maxCoeff();
        double lse = mx + std::log((z.array() - mx).exp().sum());
        loss += (lse - z(it.label)) * inv_n;
        if (!grad) continue;

        Eigen::VectorXd p = (z.array() - lse).exp();
        p(it.label) -= 1.0;
        Vec<S> dz = (p * inv_n).cast<S>();

        grad->head_w += pooled.transpose() * dz.transpose();
        grad->head_b += dz;
        Mat<S> dpooled = dz.transpose() * c.head_w.transpose();
        Mat<S> dpre = dpooled.array() * (S(1) - pooled.array().square());
        Mat<S> cls = cache.layers.back().x2.row(0);
        grad->pool_w += cls.transpose() * dpre;
        grad->pool_b += dpre.transpose();
        Mat<S> d_last = Mat<S>::Zero(static_cast<Eigen::Index>(it.ids.size()),
                                     c.encoder.cfg.hidden_dim);
        d_last.row(0) = dpre * c.pool_w.transpose();
        encoder_backward<S>(c.encoder, cache, nullptr, &d_last, grad->encoder);
    }
    return loss;
}

struct TransferHyper {
    int batch_size = 16;
    long steps = 400;
    double lr = 5e-4;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::uint64_t seed = 1;
    long log_every = 50;
    double warmup_fraction = 0.05;
};

template <class S>
std::vector<char> frozen_mask(ClassifierModel<S>& c) {
    auto refs = param_refs(c);
    std::vector<char> frozen(refs.size(), 0);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& n = refs[i].name;
        if (c.freeze_k >= 1 &&
            (n == "tok_emb" || n == "pos_emb" || n == "seg_emb" ||
             n == "emb_ln_g" || n == "emb_ln_b"))
            frozen[i] = 1;
        if (n.rfind("layer", 0) == 0) {
            int l = std::stoi(n.substr(5, n.find('.') - 5));
            if (l < c.freeze_k) frozen[i] = 1;
        }
    }
    return frozen;
}

// Fine-tune on one language with the lower freeze_k blocks (and, if any,
// the embeddings) held fixed.
template <class S>
LossCurve finetune_transfer(ClassifierModel<S>& clf, const PairDataset& train,
                            const TransferHyper& hyper) {
    if (train.examples.empty()) throw std::invalid_argument("empty training set");
    if (clf.freeze_k > clf.encoder.cfg.num_layers)
        throw std::invalid_argument("freeze_k out of range");

    std::vector<ClassifierItem> all;
    for (const auto& ex : train.examples) {
        auto [ids, segs] = encode_pair(ex.premise.ids, ex.hypothesis.ids,
                                       clf.encoder.cfg.max_positions);
        all.push_back({std::move(ids), std::move(segs), ex.label});
    }

    Rng rng(hyper.seed);
    auto params = param_refs(clf);
    ClassifierModel<S> grad = make_classifier<S>(make_zero_model<S>(clf.encoder.cfg),
                                                 clf.num_classes, clf.freeze_k, 0);
    auto grefs = param_refs(grad);
    zero_params(grefs);
    auto frozen = frozen_mask(clf);
    Adam<S> opt(hyper.lr, hyper.beta1, hyper.beta2, hyper.adam_eps, params);
    const long warmup = std::max<long>(1, static_cast<long>(hyper.steps * hyper.warmup_fraction));
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);

    LossCurve curve;
    for (long step = 1; step <= hyper.steps; ++step) {
        std::vector<ClassifierItem> batch;
        for (int b = 0; b < hyper.batch_size; ++b) batch.push_back(all[pick(rng)]);
        zero_params(grefs);
        double loss = classifier_loss<S>(clf, batch, &grad);
        double lr_scale = std::min(1.0, static_cast<double>(step) / warmup);
        opt.step(params, grefs, lr_scale, &frozen);
        if (step % hyper.log_every == 0 || step == hyper.steps)
            curve.emplace_back(step, loss);
    }
    return curve;
}

// ---- TSV persistence for pair datasets ----
// "label<TAB>premise<TAB>hypothesis", tokens space-separated.

inline void write_pair_dataset(const PairDataset& ds, const Vocab& vocab,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    for (const auto& ex : ds.examples) {
        out << ex.label << '\t';
        for (std::size_t i = 0; i < ex.premise.ids.size(); ++i)
            out << (i ? " " : "") << vocab.tokens.at(ex.premise.ids[i]);
        out << '\t';
        for (std::size_t i = 0; i < ex.hypothesis.ids.size(); ++i)
            out << (i ? " " : "") << vocab.tokens.at(ex.hypothesis.ids[i]);
        out << "\n";
    }
}

inline PairDataset read_pair_dataset(const std::string& path, const Vocab& vocab,
                                     const LanguageId& lang, const std::string& split) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    PairDataset ds;
    ds.lang = lang;
    ds.split = split;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw std::runtime_error("malformed dataset line " + std::to_string(lineno));
        PairExample ex;
        ex.label = std::stoi(line.substr(0, t1));
        ex.premise = tokenize(line.substr(t1 + 1, t2 - t1 - 1), vocab, lang);
        ex.hypothesis = tokenize(line.substr(t2 + 1), vocab, lang);
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) throw std::runtime_error("empty dataset: " + path);
    return ds;
}

inline void write_loss_curve(const LossCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loss curve: " + path);
    out << "step,loss\n";
    for (const auto& [step, loss] : curve) out << step << ',' << loss << "\n";
}

}  // namespace lsv
