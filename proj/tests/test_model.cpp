#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lsv/model.hpp"

using namespace lsv;

namespace {

EncoderConfig tiny_config(int vocab = 60) {
    EncoderConfig cfg;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.hidden_dim = 16;
    cfg.ffn_dim = 32;
    cfg.max_positions = 32;
    cfg.vocab_size = vocab;
    cfg.seed = 9;
    return cfg;
}

template <class S>
bool params_equal(EncoderModel<S>& a, EncoderModel<S>& b) {
    auto ra = param_refs(a);
    auto rb = param_refs(b);
    for (std::size_t i = 0; i < ra.size(); ++i) {
        if (ra[i].size() != rb[i].size()) return false;
        for (Eigen::Index k = 0; k < ra[i].size(); ++k)
            if (ra[i].data[k] != rb[i].data[k]) return false;
    }
    return true;
}

TokenSeq seq(std::vector<int> ids) { return {std::move(ids), "L1"}; }

}  // namespace

TEST_CASE("init_model is deterministic and validates shapes") {
    auto m1 = init_model<float>(tiny_config());
    auto m2 = init_model<float>(tiny_config());
    CHECK(params_equal(m1, m2));

    EncoderConfig cfg = tiny_config();
    cfg.hidden_dim = 8;
    cfg.num_heads = 2;
    CHECK_NOTHROW(init_model<float>(cfg));
    cfg.hidden_dim = 7;
    CHECK_THROWS_AS(init_model<float>(cfg), std::invalid_argument);
}

TEST_CASE("forward returns L+1 hidden grids and is repeatable") {
    auto m = init_model<float>(tiny_config());
    auto tokens = seq({7, 12, 9, 33, 5});
    auto r1 = forward(m, tokens);
    REQUIRE(r1.hidden.size() == 3);
    for (const auto& h : r1.hidden) {
        CHECK(h.rows() == 5);
        CHECK(h.cols() == 16);
        CHECK(h.allFinite());
    }
    CHECK(r1.logits.rows() == 5);
    CHECK(r1.logits.cols() == 60);

    auto r2 = forward(m, tokens);
    CHECK(r1.logits == r2.logits);

    auto too_long = seq(std::vector<int>(40, 7));
    CHECK_THROWS_AS(forward(m, too_long), std::invalid_argument);
    CHECK_THROWS_AS(forward(m, seq({7, 99})), std::invalid_argument);
}

TEST_CASE("appended padding leaves logits at original positions unchanged") {
    auto m = init_model<float>(tiny_config());
    auto base = seq({7, 12, 9, 33});
    auto padded = seq({7, 12, 9, 33, kPadId, kPadId, kPadId});
    auto r1 = forward(m, base);
    auto r2 = forward(m, padded);
    double diff = (r1.logits - r2.logits.topRows(4)).template cast<double>()
                      .cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-6);
}

TEST_CASE("injection with alpha=0 or zero delta reproduces forward bitwise") {
    auto m = init_model<float>(tiny_config());
    auto tokens = seq({4, 8, 15, 16, 23, 42});
    auto plain = forward(m, tokens);
    Vec<float> delta = Vec<float>::Random(16);
    for (int layer : {0, 1, 2}) {
        auto a0 = forward_with_injection<float>(m, tokens, layer, delta, 0.0f);
        CHECK(a0.logits == plain.logits);
        auto dz = forward_with_injection<float>(m, tokens, layer, Vec<float>::Zero(16), 2.5f);
        CHECK(dz.logits == plain.logits);
    }
}

TEST_CASE("composed +alpha/-alpha injections cancel exactly") {
    auto m = init_model<float>(tiny_config());
    auto tokens = seq({4, 8, 15, 16});
    auto plain = forward(m, tokens);
    Vec<float> delta = Vec<float>::Random(16);
    std::vector<std::pair<Vec<float>, float>> shifts = {{delta, 1.5f}, {delta, -1.5f}};
    auto r = forward_with_injection<float>(m, tokens, 1, shifts);
    CHECK(r.logits == plain.logits);
}

TEST_CASE("injection at the last layer only reaches the MLM head") {
    auto m = init_model<float>(tiny_config());
    auto tokens = seq({4, 8, 15});
    Vec<float> delta = Vec<float>::Ones(16);
    auto plain = forward(m, tokens);
    auto r = forward_with_injection<float>(m, tokens, m.cfg.num_layers, delta, 1.0f);
    // hidden states before the injection layer are untouched
    for (int l = 0; l < m.cfg.num_layers; ++l) CHECK(r.hidden[l] == plain.hidden[l]);
    CHECK(r.logits != plain.logits);
    CHECK_THROWS_AS(forward_with_injection<float>(m, tokens, 3, delta, 1.0f),
                    std::invalid_argument);
    CHECK_THROWS_AS(forward_with_injection<float>(m, tokens, 1, Vec<float>::Ones(5), 1.0f),
                    std::invalid_argument);
}

TEST_CASE("predict_tokens takes the argmax with lowest-id tie break") {
    Mat<float> logits = Mat<float>::Zero(3, 12);
    logits(0, 7) = 5.0f;           // one-hot-like
    logits(1, 4) = 2.0f;
    logits(1, 9) = 2.0f;           // tie -> 4
    auto out = predict_tokens(logits);
    CHECK(out == std::vector<int>{7, 4, 0});

    logits(2, 3) = std::nanf("");
    CHECK_THROWS_AS(predict_tokens(logits), std::invalid_argument);
}

TEST_CASE("mean_context_embedding averages occurrences") {
    auto m = init_model<float>(tiny_config());
    Corpus corpus;
    corpus.sentences["L1"].push_back(seq({7, 11, 20}));
    corpus.sentences["L1"].push_back(seq({9, 7, 7, 13}));

    auto r0 = forward(m, corpus.of("L1")[0]);
    auto r1 = forward(m, corpus.of("L1")[1]);
    int layer = 2;
    Eigen::VectorXd expect =
        (r0.hidden[layer].row(0).cast<double>() + r1.hidden[layer].row(1).cast<double>() +
         r1.hidden[layer].row(2).cast<double>()).transpose() / 3.0;
    Eigen::VectorXd got = mean_context_embedding(m, corpus, 7, layer);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXd single = mean_context_embedding(m, corpus, 20, 1);
    CHECK(single == r0.hidden[1].row(2).cast<double>().transpose());

    Corpus shuffled;
    shuffled.sentences["L1"].push_back(corpus.of("L1")[1]);
    shuffled.sentences["L1"].push_back(corpus.of("L1")[0]);
    CHECK(mean_context_embedding(m, shuffled, 7, layer) == got);

    CHECK_THROWS_WITH(mean_context_embedding(m, corpus, 55, layer),
                      Catch::Matchers::ContainsSubstring("no occurrence"));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    auto m = init_model<float>(tiny_config());
    auto dir = std::filesystem::temp_directory_path();
    auto path = (dir / "lsv_model.ckpt").string();
    save_checkpoint(m, path);
    auto loaded = load_checkpoint<float>(path);
    CHECK(params_equal(m, loaded));
    CHECK(loaded.cfg.vocab_size == m.cfg.vocab_size);

    auto path2 = (dir / "lsv_model2.ckpt").string();
    save_checkpoint(loaded, path2);
    CHECK(file_fingerprint(path) == file_fingerprint(path2));
    CHECK(model_fingerprint(m) == model_fingerprint(loaded));
    CHECK(model_fingerprint(m) == file_fingerprint(path));
}
