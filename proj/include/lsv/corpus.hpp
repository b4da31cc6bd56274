#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsv/common.hpp"

namespace lsv {

using LanguageId = std::string;

// Fixed special-token layout: ids 0..4 are [PAD],[UNK],[CLS],[SEP],[MASK].
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

inline const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> s = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
    return s;
}

inline bool is_special(int id) { return id >= 0 && id < kNumSpecials; }

struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;
    std::map<LanguageId, std::set<int>> membership;

    Vocab() {
        for (const auto& t : special_tokens()) add(t);
    }

    int size() const { return static_cast<int>(tokens.size()); }

    int add(const std::string& tok) {
        auto it = index.find(tok);
        if (it != index.end()) return it->second;
        int id = size();
        tokens.push_back(tok);
        index.emplace(tok, id);
        return id;
    }

    // [UNK] for out-of-vocabulary words.
    int id_of(const std::string& tok) const {
        auto it = index.find(tok);
        return it == index.end() ? kUnkId : it->second;
    }

    bool contains(const std::string& tok) const { return index.count(tok) != 0; }
};

struct TokenSeq {
    std::vector<int> ids;
    LanguageId lang;
};

struct Corpus {
    std::map<LanguageId, std::vector<TokenSeq>> sentences;
    std::string provenance;

    const std::vector<TokenSeq>& of(const LanguageId& lang) const {
        auto it = sentences.find(lang);
        if (it == sentences.end()) throw std::invalid_argument("unknown language: " + lang);
        return it->second;
    }
};

struct BilingualDictionary {
    std::vector<std::pair<std::string, std::string>> pairs;
};

struct SyntheticSpec {
    int base_vocab = 800;
    double anchor_fraction = 0.1;   // in [0,1)
    double zipf_exponent = 1.1;
    int min_sentence_len = 4;
    int max_sentence_len = 24;
    int sentences_per_language = 5000;
    std::uint64_t seed = 1;
    int reorder_window = 0;         // 0 disables local reordering of L2
};

namespace detail {

// Zipf sampler over ranks 0..n-1, p(r) ~ (r+1)^-s.
struct ZipfSampler {
    std::vector<double> cdf;
    explicit ZipfSampler(int n, double s) : cdf(n) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r) {
            acc += std::pow(static_cast<double>(r + 1), -s);
            cdf[r] = acc;
        }
        for (double& v : cdf) v /= acc;
    }
    int operator()(Rng& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }
};

}  // namespace detail

// Two synthetic languages sharing an anchor fraction of the base vocabulary;
// the remaining tokens of L2 are a seeded bijective relabeling of L1's.
// L2's corpus is the relabeled L1 corpus, optionally locally reordered.
inline std::tuple<Corpus, Vocab, BilingualDictionary>
generate_parallel_corpus(const SyntheticSpec& spec,
                         const LanguageId& l1 = "L1", const LanguageId& l2 = "L2") {
    if (spec.anchor_fraction < 0.0 || spec.anchor_fraction >= 1.0)
        throw std::invalid_argument("anchor fraction must be in [0,1)");
    if (spec.base_vocab < 10) throw std::invalid_argument("base vocab too small (< 10)");
    if (spec.min_sentence_len < 1 || spec.max_sentence_len < spec.min_sentence_len)
        throw std::invalid_argument("invalid sentence length range");
    if (spec.sentences_per_language < 1)
        throw std::invalid_argument("sentence count must be positive");

    Rng rng(spec.seed);

    const int n_anchor = static_cast<int>(spec.base_vocab * spec.anchor_fraction);
    const int n_free = spec.base_vocab - n_anchor;

    Vocab vocab;
    std::vector<int> anchor_ids, l1_ids, l2_ids;
    for (int i = 0; i < n_anchor; ++i) anchor_ids.push_back(vocab.add("a" + std::to_string(i)));
    for (int i = 0; i < n_free; ++i) l1_ids.push_back(vocab.add("x" + std::to_string(i)));
    for (int i = 0; i < n_free; ++i) l2_ids.push_back(vocab.add("y" + std::to_string(i)));

    // Seeded bijection over the non-anchor tokens.
    std::vector<int> perm(n_free);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::unordered_map<int, int> bijection;  // L1 id -> L2 id
    BilingualDictionary dict;
    for (int i = 0; i < n_free; ++i) {
        bijection[l1_ids[i]] = l2_ids[perm[i]];
        dict.pairs.emplace_back(vocab.tokens[l1_ids[i]], vocab.tokens[l2_ids[perm[i]]]);
    }

    // Frequency ranks mix anchors and L1-specific tokens uniformly, so anchors
    // occur at all frequency bands.
    std::vector<int> rank_to_l1(spec.base_vocab);
    {
        std::vector<int> base = anchor_ids;
        base.insert(base.end(), l1_ids.begin(), l1_ids.end());
        std::shuffle(base.begin(), base.end(), rng);
        rank_to_l1 = base;
    }

    detail::ZipfSampler zipf(spec.base_vocab, spec.zipf_exponent);

    // Two-state length model: short sentences from the lower half of the
    // range, long ones from the upper half.
    const int mid = (spec.min_sentence_len + spec.max_sentence_len) / 2;
    auto sample_len = [&](Rng& r) {
        bool longer = std::bernoulli_distribution(0.5)(r);
        int lo = longer ? mid : spec.min_sentence_len;
        int hi = longer ? spec.max_sentence_len : mid;
        if (lo > hi) std::swap(lo, hi);
        return std::uniform_int_distribution<int>(lo, hi)(r);
    };

    Corpus corpus;
    corpus.provenance = "synthetic seed=" + std::to_string(spec.seed);
    auto& s1 = corpus.sentences[l1];
    auto& s2 = corpus.sentences[l2];
    for (int k = 0; k < spec.sentences_per_language; ++k) {
        TokenSeq a{{}, l1};
        int len = sample_len(rng);
        a.ids.reserve(len);
        for (int t = 0; t < len; ++t) a.ids.push_back(rank_to_l1[zipf(rng)]);

        TokenSeq b{{}, l2};
        b.ids.reserve(len);
        for (int id : a.ids) {
            auto it = bijection.find(id);
            b.ids.push_back(it == bijection.end() ? id : it->second);
        }
        if (spec.reorder_window > 1) {
            for (std::size_t off = 0; off < b.ids.size(); off += spec.reorder_window) {
                auto first = b.ids.begin() + off;
                auto last = b.ids.begin() + std::min(b.ids.size(),
                                                     off + spec.reorder_window);
                std::shuffle(first, last, rng);
            }
        }
        s1.push_back(std::move(a));
        s2.push_back(std::move(b));
    }

    for (int id : anchor_ids) {
        vocab.membership[l1].insert(id);
        vocab.membership[l2].insert(id);
    }
    for (int id : l1_ids) vocab.membership[l1].insert(id);
    for (int id : l2_ids) vocab.membership[l2].insert(id);

    return {std::move(corpus), std::move(vocab), std::move(dict)};
}

inline TokenSeq tokenize(const std::string& line, const Vocab& vocab,
                         const LanguageId& lang = "") {
    std::istringstream in(line);
    TokenSeq seq{{}, lang};
    std::string word;
    while (in >> word) seq.ids.push_back(vocab.id_of(word));
    if (seq.ids.empty()) throw std::invalid_argument("empty line");
    return seq;
}

// Greedy contiguous slicing into segments of at most max_tokens.
inline Corpus slice_windows(const Corpus& corpus, int max_tokens) {
    if (max_tokens < 1) throw std::invalid_argument("window must be >= 1");
    Corpus out;
    out.provenance = corpus.provenance + " sliced W=" + std::to_string(max_tokens);
    for (const auto& [lang, sents] : corpus.sentences) {
        auto& bucket = out.sentences[lang];
        for (const auto& s : sents) {
            for (std::size_t off = 0; off < s.ids.size();
                 off += static_cast<std::size_t>(max_tokens)) {
                TokenSeq seg{{}, lang};
                auto last = std::min(s.ids.size(), off + max_tokens);
                seg.ids.assign(s.ids.begin() + off, s.ids.begin() + last);
                bucket.push_back(std::move(seg));
            }
        }
    }
    return out;
}

// MUSE-style file: "source<ws>target" per line. Duplicates dropped,
// multiple targets per source kept.
inline BilingualDictionary load_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dictionary: " + path);
    BilingualDictionary dict;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string src, tgt, extra;
        if (!(row >> src >> tgt) || (row >> extra))
            throw std::runtime_error("malformed dictionary line " + std::to_string(lineno) +
                                     ": expected 2 fields");
        if (seen.insert({src, tgt}).second) dict.pairs.emplace_back(src, tgt);
    }
    return dict;
}

// Non-special token ids occurring in one language's corpus; also recorded
// into vocab.membership.
inline std::set<int> token_set(const Corpus& corpus, const LanguageId& lang, Vocab& vocab) {
    const auto& sents = corpus.of(lang);
    std::set<int> ids;
    for (const auto& s : sents)
        for (int id : s.ids)
            if (!is_special(id)) ids.insert(id);
    vocab.membership[lang] = ids;
    return ids;
}

// ---- file formats ----

inline void write_vocab(const Vocab& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write vocab: " + path);
    for (const auto& t : vocab.tokens) out << t << "\n";
}

inline Vocab read_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocab: " + path);
    Vocab vocab;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        if (lineno < kNumSpecials) {
            if (line != special_tokens()[lineno])
                throw std::runtime_error("vocab line " + std::to_string(lineno + 1) +
                                         " must be " + special_tokens()[lineno]);
        } else {
            if (vocab.contains(line))
                throw std::runtime_error("duplicate vocab token: " + line);
            vocab.add(line);
        }
        ++lineno;
    }
    if (lineno < kNumSpecials) throw std::runtime_error("vocab missing special tokens");
    return vocab;
}

inline void write_corpus_file(const Corpus& corpus, const LanguageId& lang,
                              const Vocab& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus: " + path);
    for (const auto& s : corpus.of(lang)) {
        for (std::size_t i = 0; i < s.ids.size(); ++i) {
            if (i) out << ' ';
            out << vocab.tokens.at(s.ids[i]);
        }
        out << "\n";
    }
}

// Language tag comes from the filename stem.
inline void read_corpus_file(Corpus& corpus, const std::string& path, const Vocab& vocab) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus: " + path);
    LanguageId lang = std::filesystem::path(path).stem().string();
    auto& bucket = corpus.sentences[lang];
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        bucket.push_back(tokenize(line, vocab, lang));
    }
    if (corpus.provenance.empty()) corpus.provenance = path;
}

inline void write_dictionary(const BilingualDictionary& dict, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dictionary: " + path);
    for (const auto& [s, t] : dict.pairs) out << s << ' ' << t << "\n";
}

}  // namespace lsv
