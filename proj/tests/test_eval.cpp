#include <catch2/catch_amalgamated.hpp>

#include "lsv/eval.hpp"
#include "lsv/train.hpp"

using namespace lsv;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

// Exhaustive-ranking oracle, independent of retrieve(): for each dictionary
// source, rank every candidate by cosine and take the best valid target.
double brute_force_mrr(const WordVectors& src, const WordVectors& tgt,
                       const BilingualDictionary& dict) {
    std::map<std::string, Eigen::VectorXd> sv, tv;
    for (const auto& [w, v] : src) sv[w] = v;
    for (const auto& [w, v] : tgt) tv[w] = v;
    std::vector<std::string> cands;
    for (const auto& [s, t] : dict.pairs)
        if (tv.count(t) && std::find(cands.begin(), cands.end(), t) == cands.end())
            cands.push_back(t);
    std::vector<std::string> sources;
    for (const auto& [s, t] : dict.pairs)
        if (std::find(sources.begin(), sources.end(), s) == sources.end())
            sources.push_back(s);
    double sum = 0;
    long n = 0;
    for (const auto& s : sources) {
        if (!sv.count(s)) continue;
        std::vector<std::pair<double, int>> scored;
        for (std::size_t j = 0; j < cands.size(); ++j)
            scored.push_back({cosine(sv[s], tv[cands[j]]), static_cast<int>(j)});
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        int best = 0;
        for (const auto& [ss, tt] : dict.pairs) {
            if (ss != s || !tv.count(tt)) continue;
            for (std::size_t r = 0; r < scored.size(); ++r) {
                if (cands[scored[r].second] == tt) {
                    int rank = static_cast<int>(r) + 1;
                    if (best == 0 || rank < best) best = rank;
                    break;
                }
            }
        }
        if (best == 0) continue;
        sum += 1.0 / best;
        ++n;
    }
    return sum / n;
}

}  // namespace

TEST_CASE("cosine basics") {
    auto u = vec({1, 2, 3});
    CHECK(cosine(u, u) == Catch::Approx(1.0));
    CHECK(cosine(vec({1, 0}), vec({0, 1})) == Catch::Approx(0.0).margin(1e-15));
    CHECK(cosine(u, -u) == Catch::Approx(-1.0));
    CHECK_THROWS_AS(cosine(vec({0, 0}), u.head(2)), std::invalid_argument);
}

TEST_CASE("mrr arithmetic") {
    CHECK(mrr({1, 1, 1}) == Catch::Approx(1.0));
    CHECK(mrr({1, 2}) == Catch::Approx(0.75));
    CHECK(mrr({4}) == Catch::Approx(0.25));
    CHECK_THROWS_AS(mrr({}), std::invalid_argument);
    CHECK_THROWS_AS(mrr({1, 0}), std::invalid_argument);
}

TEST_CASE("retrieve hand-computed case") {
    WordVectors src = {{"u1", vec({1, 0})}, {"u2", vec({0.9, 0.1})}};
    WordVectors tgt = {{"v1", vec({1, 0})}, {"v2", vec({0, 1})}};
    BilingualDictionary dict{{{"u1", "v1"}, {"u2", "v2"}}};
    auto rep = retrieve(src, tgt, dict);
    REQUIRE(rep.ranks == std::vector<int>{1, 2});
    CHECK(rep.mrr == Catch::Approx(0.75));
    CHECK(rep.excluded == 0);
}

TEST_CASE("retrieve counts words without embeddings as excluded") {
    WordVectors src = {{"a", vec({1, 0})}};
    WordVectors tgt = {{"x", vec({1, 0})}};
    BilingualDictionary dict{{{"a", "x"}, {"b", "y"}}};
    auto rep = retrieve(src, tgt, dict);
    CHECK(rep.evaluated == 1);
    CHECK(rep.excluded == 1);
    CHECK(rep.mrr == Catch::Approx(1.0));
    BilingualDictionary empty{{{"a", "missing"}}};
    CHECK_THROWS_AS(retrieve(src, tgt, empty), std::invalid_argument);
}

TEST_CASE("retrieve matches the brute-force oracle on random instances") {
    Rng rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 2 + static_cast<int>(rng() % 19);
        int d = 2 + static_cast<int>(rng() % 15);
        WordVectors src, tgt;
        BilingualDictionary dict;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd u(d), v(d);
            for (int k = 0; k < d; ++k) { u(k) = normal(rng); v(k) = normal(rng); }
            src.push_back({"s" + std::to_string(i), u});
            tgt.push_back({"t" + std::to_string(i), v});
            dict.pairs.push_back({"s" + std::to_string(i), "t" + std::to_string(i)});
        }
        // occasionally add a second valid target
        if (n > 3 && trial % 3 == 0) dict.pairs.push_back({"s0", "t1"});
        auto rep = retrieve(src, tgt, dict);
        CHECK(rep.mrr == brute_force_mrr(src, tgt, dict));
    }
}

TEST_CASE("convert_rate counts occurrences") {
    std::set<int> vs = {10, 12};
    std::set<int> vt = {11, 12};
    // y=[a,b,c] with a=10 (source-only), b=11 (target-only), c=12 (shared)
    auto r = convert_rate({10, 11, 12}, vs, vt);
    CHECK(r.defined);
    CHECK(r.cr == Catch::Approx(0.5));
    CHECK(r.converted == 1);
    CHECK(r.shared == 1);

    auto all_tgt = convert_rate({11, 11, 11}, vs, vt);
    CHECK(all_tgt.cr == Catch::Approx(1.0));

    auto shared_only = convert_rate({12, 12}, vs, vt);
    CHECK_FALSE(shared_only.defined);

    CHECK_THROWS_AS(convert_rate({}, vs, vt), std::invalid_argument);
}

TEST_CASE("convert_rate is permutation invariant") {
    std::set<int> vs = {1, 2, 3};
    std::set<int> vt = {3, 4, 5};
    std::vector<int> out = {1, 4, 3, 5, 5, 2, 9};
    auto a = convert_rate(out, vs, vt);
    std::reverse(out.begin(), out.end());
    auto b = convert_rate(out, vs, vt);
    CHECK(a.cr == b.cr);
}

TEST_CASE("bleu1 clipped precision with brevity penalty") {
    auto ts = [](std::vector<int> ids) { return TokenSeq{std::move(ids), "L1"}; };
    CHECK(bleu1({ts({5, 6, 7})}, {ts({5, 6, 7})}) == Catch::Approx(1.0));
    CHECK(bleu1({ts({5, 6})}, {ts({8, 9})}) == Catch::Approx(0.0));
    // candidate "a b c d" vs reference "a b x y": 2 matches of 4, equal length
    CHECK(bleu1({ts({1, 2, 3, 4})}, {ts({1, 2, 8, 9})}) == Catch::Approx(0.5));
    // clipping: candidate repeats a token more often than the reference has it
    CHECK(bleu1({ts({1, 1, 1, 2})}, {ts({1, 2, 3, 4})}) == Catch::Approx(0.5));
    // brevity penalty: 2 tokens vs 4-token reference
    CHECK(bleu1({ts({1, 2})}, {ts({1, 2, 3, 4})}) ==
          Catch::Approx(std::exp(1.0 - 2.0)));
    CHECK_THROWS_AS(bleu1({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(bleu1({ts({1})}, {}), std::invalid_argument);
}

TEST_CASE("bleu1 is invariant to pair ordering") {
    auto ts = [](std::vector<int> ids) { return TokenSeq{std::move(ids), "L1"}; };
    std::vector<TokenSeq> c = {ts({1, 2, 3}), ts({4, 5})};
    std::vector<TokenSeq> r = {ts({1, 2, 9}), ts({4, 6})};
    double fwd = bleu1(c, r);
    std::swap(c[0], c[1]);
    std::swap(r[0], r[1]);
    CHECK(bleu1(c, r) == Catch::Approx(fwd));
}

TEST_CASE("accuracy") {
    CHECK(accuracy({1, 2, 0}, {1, 2, 0}) == Catch::Approx(1.0));
    CHECK(accuracy({1, 1}, {2, 0}) == Catch::Approx(0.0));
    CHECK(accuracy({0, 1, 2}, {0, 1, 0}) == Catch::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("sweep emits one row per grid cell with unshifted alpha=0 baseline") {
    EncoderConfig cfg;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.hidden_dim = 16;
    cfg.ffn_dim = 32;
    cfg.max_positions = 32;
    cfg.vocab_size = 40;
    cfg.seed = 5;
    auto m = init_model<float>(cfg);

    Corpus corpus;
    Rng rng(3);
    for (int k = 0; k < 6; ++k) {
        TokenSeq a{{}, "L1"}, b{{}, "L2"};
        for (int i = 0; i < 8; ++i) {
            a.ids.push_back(5 + static_cast<int>(rng() % 15));
            b.ids.push_back(20 + static_cast<int>(rng() % 15));
        }
        corpus.sentences["L1"].push_back(a);
        corpus.sentences["L2"].push_back(b);
    }
    std::string fp = model_fingerprint(m);
    auto mean1 = compute_language_mean(m, corpus, "L1", fp);
    auto mean2 = compute_language_mean(m, corpus, "L2", fp);

    std::set<int> vs, vt;
    for (int i = 5; i < 20; ++i) vs.insert(i);
    for (int i = 20; i < 35; ++i) vt.insert(i);

    auto grid = sweep(m, mean1, mean2, {0, 1, 2}, {0.0, 0.5, 1.0, 2.0},
                      corpus.of("L1"), corpus.of("L2"), vs, vt);
    REQUIRE(grid.rows.size() == 12);

    // alpha=0 rows equal metrics computed on the plain reconstruction
    std::vector<TokenSeq> recon;
    std::vector<int> pooled;
    for (const auto& s : corpus.of("L1")) {
        auto r = forward(m, s);
        recon.push_back({predict_tokens(r.logits), "L1"});
        pooled.insert(pooled.end(), recon.back().ids.begin(), recon.back().ids.end());
    }
    auto base_cr = convert_rate(pooled, vs, vt);
    double base_bleu = bleu1(recon, corpus.of("L2"));
    for (const auto& row : grid.rows) {
        if (row.alpha != 0.0) continue;
        if (base_cr.defined) CHECK(row.convert_rate == base_cr.cr);
        CHECK(row.bleu1 == base_bleu);
    }
}
