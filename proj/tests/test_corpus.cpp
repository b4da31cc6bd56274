#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsv/corpus.hpp"

using namespace lsv;

namespace {

std::string tmp_file(const std::string& name, const std::string& contents) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << contents;
    return path;
}

SyntheticSpec small_spec() {
    SyntheticSpec spec;
    spec.base_vocab = 100;
    spec.anchor_fraction = 0.1;
    spec.sentences_per_language = 50;
    spec.min_sentence_len = 3;
    spec.max_sentence_len = 12;
    spec.seed = 42;
    return spec;
}

std::map<int, long> id_multiset(const std::vector<TokenSeq>& sents) {
    std::map<int, long> counts;
    for (const auto& s : sents)
        for (int id : s.ids) ++counts[id];
    return counts;
}

}  // namespace

TEST_CASE("generate_parallel_corpus with anchor fraction 0 has full bijection") {
    SyntheticSpec spec = small_spec();
    spec.anchor_fraction = 0.0;
    auto [corpus, vocab, dict] = generate_parallel_corpus(spec);
    CHECK(dict.pairs.size() == 100);
}

TEST_CASE("generate_parallel_corpus: bijection reproduces L2 when reorder is off") {
    SyntheticSpec spec = small_spec();
    auto [corpus, vocab, dict] = generate_parallel_corpus(spec);
    std::unordered_map<int, int> bij;
    for (const auto& [s, t] : dict.pairs) bij[vocab.id_of(s)] = vocab.id_of(t);
    const auto& l1 = corpus.of("L1");
    const auto& l2 = corpus.of("L2");
    REQUIRE(l1.size() == l2.size());
    for (std::size_t k = 0; k < l1.size(); ++k) {
        REQUIRE(l1[k].ids.size() == l2[k].ids.size());
        for (std::size_t i = 0; i < l1[k].ids.size(); ++i) {
            int mapped = bij.count(l1[k].ids[i]) ? bij[l1[k].ids[i]] : l1[k].ids[i];
            CHECK(mapped == l2[k].ids[i]);
        }
    }
}

TEST_CASE("generate_parallel_corpus is deterministic per seed") {
    auto [c1, v1, d1] = generate_parallel_corpus(small_spec());
    auto [c2, v2, d2] = generate_parallel_corpus(small_spec());
    CHECK(v1.tokens == v2.tokens);
    CHECK(d1.pairs == d2.pairs);
    for (const auto& lang : {"L1", "L2"}) {
        const auto& a = c1.of(lang);
        const auto& b = c2.of(lang);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].ids == b[k].ids);
    }
}

TEST_CASE("generate_parallel_corpus rejects bad specs") {
    SyntheticSpec spec = small_spec();
    spec.anchor_fraction = 1.0;
    CHECK_THROWS_AS(generate_parallel_corpus(spec), std::invalid_argument);
    spec = small_spec();
    spec.base_vocab = 9;
    CHECK_THROWS_AS(generate_parallel_corpus(spec), std::invalid_argument);
}

TEST_CASE("tokenize maps words to ids with [UNK] fallback") {
    Vocab vocab;
    int dog = vocab.add("dog");
    int cat = vocab.add("cat");
    auto seq = tokenize("dog cat dog", vocab);
    CHECK(seq.ids == std::vector<int>{dog, cat, dog});
    CHECK(tokenize("dog wolf", vocab).ids == std::vector<int>{dog, kUnkId});
    auto rep = tokenize("cat cat cat", vocab);
    CHECK(rep.ids == std::vector<int>{cat, cat, cat});
    CHECK_THROWS_AS(tokenize("", vocab), std::invalid_argument);
    CHECK_THROWS_AS(tokenize("   ", vocab), std::invalid_argument);
}

TEST_CASE("slice_windows slices greedily") {
    Corpus corpus;
    TokenSeq s{{}, "L1"};
    for (int i = 0; i < 45; ++i) s.ids.push_back(kNumSpecials + i % 7);
    corpus.sentences["L1"].push_back(s);

    auto sliced = slice_windows(corpus, 20);
    const auto& segs = sliced.of("L1");
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].ids.size() == 20);
    CHECK(segs[1].ids.size() == 20);
    CHECK(segs[2].ids.size() == 5);

    auto identity = slice_windows(corpus, 45);
    CHECK(identity.of("L1").size() == 1);
    CHECK(identity.of("L1")[0].ids == s.ids);

    auto singles = slice_windows(corpus, 1);
    CHECK(singles.of("L1").size() == 45);

    CHECK_THROWS_AS(slice_windows(corpus, 0), std::invalid_argument);
}

TEST_CASE("slice_windows preserves the token multiset per language") {
    auto [corpus, vocab, dict] = generate_parallel_corpus(small_spec());
    for (int w : {1, 5, 20, 512}) {
        auto sliced = slice_windows(corpus, w);
        for (const auto& lang : {"L1", "L2"}) {
            CHECK(id_multiset(corpus.of(lang)) == id_multiset(sliced.of(lang)));
            for (const auto& s : sliced.of(lang))
                CHECK(static_cast<int>(s.ids.size()) <= w);
        }
    }
}

TEST_CASE("load_dictionary parses MUSE-style files") {
    auto path = tmp_file("lsv_dict_ok.txt", "dog chien\ncat chat\n");
    auto dict = load_dictionary(path);
    REQUIRE(dict.pairs.size() == 2);
    CHECK(dict.pairs[0] == std::make_pair(std::string("dog"), std::string("chien")));

    auto dup = load_dictionary(tmp_file("lsv_dict_dup.txt", "dog chien\ndog chien\n"));
    CHECK(dup.pairs.size() == 1);

    auto multi = load_dictionary(tmp_file("lsv_dict_multi.txt", "dog chien\ndog cabot\n"));
    CHECK(multi.pairs.size() == 2);

    auto bad = tmp_file("lsv_dict_bad.txt", "dog chien\ndog chien cabot\n");
    CHECK_THROWS_WITH(load_dictionary(bad), Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("token_set collects non-special ids and records membership") {
    Vocab vocab;
    while (vocab.size() < 10) vocab.add("t" + std::to_string(vocab.size()));
    Corpus corpus;
    corpus.sentences["L1"].push_back({{3, 5, 5}, "L1"});
    corpus.sentences["L1"].push_back({{5, kPadId}, "L1"});
    auto ids = token_set(corpus, "L1", vocab);
    CHECK(ids == std::set<int>{5});  // 3 is [SEP], special
    corpus.sentences["L1"][0].ids = {6, 7};
    corpus.sentences["L2"].push_back({{8, 9}, "L2"});
    token_set(corpus, "L1", vocab);
    token_set(corpus, "L2", vocab);
    std::set<int> inter;
    std::set_intersection(vocab.membership["L1"].begin(), vocab.membership["L1"].end(),
                          vocab.membership["L2"].begin(), vocab.membership["L2"].end(),
                          std::inserter(inter, inter.begin()));
    CHECK(inter.empty());
    CHECK_THROWS_AS(token_set(corpus, "L9", vocab), std::invalid_argument);
}

TEST_CASE("synthetic token sets intersect exactly in the anchors") {
    SyntheticSpec spec = small_spec();
    spec.sentences_per_language = 2000;  // enough for every token to occur
    auto [corpus, vocab, dict] = generate_parallel_corpus(spec);
    Vocab scratch = vocab;
    auto v1 = token_set(corpus, "L1", scratch);
    auto v2 = token_set(corpus, "L2", scratch);
    std::set<int> inter;
    std::set_intersection(v1.begin(), v1.end(), v2.begin(), v2.end(),
                          std::inserter(inter, inter.begin()));
    std::set<int> anchors;
    for (int i = 0; i < 10; ++i) anchors.insert(vocab.id_of("a" + std::to_string(i)));
    CHECK(inter == anchors);
}

TEST_CASE("vocab and corpus files round-trip") {
    auto [corpus, vocab, dict] = generate_parallel_corpus(small_spec());
    auto dir = std::filesystem::temp_directory_path() / "lsv_corpus_io";
    std::filesystem::create_directories(dir);

    auto vocab_path = (dir / "vocab.txt").string();
    write_vocab(vocab, vocab_path);
    Vocab loaded = read_vocab(vocab_path);
    CHECK(loaded.tokens == vocab.tokens);

    auto l1_path = (dir / "L1.txt").string();
    write_corpus_file(corpus, "L1", vocab, l1_path);
    Corpus back;
    read_corpus_file(back, l1_path, loaded);
    REQUIRE(back.of("L1").size() == corpus.of("L1").size());
    for (std::size_t k = 0; k < back.of("L1").size(); ++k)
        CHECK(back.of("L1")[k].ids == corpus.of("L1")[k].ids);

    auto bad_vocab = tmp_file("lsv_bad_vocab.txt", "[PAD]\n[UNK]\nnope\n");
    CHECK_THROWS(read_vocab(bad_vocab));
}
