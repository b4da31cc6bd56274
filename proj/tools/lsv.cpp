// Experiment front door: corpus generation, pretraining, language-mean
// extraction, unsupervised token translation, sweeps, and evaluation.
//
// Every command reads one JSON config, writes its outputs under out_dir, and
// drops a manifest (config hash, seed, tool version) next to them. Identical
// config + seed reproduces byte-identical outputs.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "lsv/corpus.hpp"
#include "lsv/eval.hpp"
#include "lsv/langspace.hpp"
#include "lsv/model.hpp"
#include "lsv/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lsv;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
    json raw;
    fs::path out_dir;
    std::uint64_t seed = 1;
    LanguageId l1 = "L1", l2 = "L2";

    SyntheticSpec synthetic;
    EncoderConfig model;
    MlmHyper mlm;
    SgnsHyper sgns;
    TransferHyper transfer;
    int freeze_k = 2;
    int num_classes = 3;
    int task_train = 1500, task_dev = 300, task_test = 300;

    std::vector<int> sweep_layers;
    std::vector<double> sweep_alphas = {0.0, 1.0, 2.0, 3.0};
    int eval_sentences = 200;

    fs::path corpus_dir() const { return out_dir / "corpus"; }
    fs::path vocab_path() const { return corpus_dir() / "vocab.txt"; }
    fs::path dict_path() const { return corpus_dir() / "dict.txt"; }
    fs::path lang_path(const LanguageId& l) const { return corpus_dir() / (l + ".txt"); }
    fs::path mlm_ckpt() const { return out_dir / "mlm.ckpt"; }
    fs::path sgns_ckpt() const { return out_dir / "sgns.ckpt"; }
    fs::path classifier_ckpt() const { return out_dir / "transfer.ckpt"; }
    fs::path means_path(const LanguageId& l) const {
        return out_dir / "means" / (l + ".json");
    }
    fs::path task_path(const LanguageId& l, const std::string& split) const {
        return out_dir / "task" / (l + "_" + split + ".tsv");
    }
};

template <class T>
void maybe(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    ExperimentConfig c;
    c.raw = json::parse(in);
    const json& j = c.raw;

    std::string out = "runs/default";
    maybe(j, "out_dir", out);
    c.out_dir = out;
    maybe(j, "seed", c.seed);
    if (j.contains("languages")) {
        auto langs = j.at("languages").get<std::vector<std::string>>();
        if (langs.size() != 2) throw std::runtime_error("expected exactly 2 languages");
        c.l1 = langs[0];
        c.l2 = langs[1];
    }

    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        maybe(s, "base_vocab", c.synthetic.base_vocab);
        maybe(s, "anchor_fraction", c.synthetic.anchor_fraction);
        maybe(s, "zipf_exponent", c.synthetic.zipf_exponent);
        maybe(s, "min_sentence_len", c.synthetic.min_sentence_len);
        maybe(s, "max_sentence_len", c.synthetic.max_sentence_len);
        maybe(s, "sentences_per_language", c.synthetic.sentences_per_language);
        maybe(s, "reorder_window", c.synthetic.reorder_window);
        c.synthetic.seed = c.seed;
        maybe(s, "seed", c.synthetic.seed);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        maybe(m, "num_layers", c.model.num_layers);
        maybe(m, "num_heads", c.model.num_heads);
        maybe(m, "hidden_dim", c.model.hidden_dim);
        maybe(m, "ffn_dim", c.model.ffn_dim);
        maybe(m, "max_positions", c.model.max_positions);
        c.model.seed = c.seed;
        maybe(m, "seed", c.model.seed);
    }
    if (j.contains("mlm")) {
        const json& m = j.at("mlm");
        maybe(m, "batch_size", c.mlm.batch_size);
        maybe(m, "steps", c.mlm.steps);
        maybe(m, "lr", c.mlm.lr);
        maybe(m, "mask_fraction", c.mlm.mask_fraction);
        maybe(m, "log_every", c.mlm.log_every);
        c.mlm.seed = c.seed;
        maybe(m, "seed", c.mlm.seed);
    }
    if (j.contains("sgns")) {
        const json& s = j.at("sgns");
        maybe(s, "dim", c.sgns.dim);
        maybe(s, "window", c.sgns.window);
        maybe(s, "negatives", c.sgns.negatives);
        maybe(s, "epochs", c.sgns.epochs);
        maybe(s, "lr", c.sgns.lr);
        c.sgns.seed = c.seed;
        maybe(s, "seed", c.sgns.seed);
    }
    if (j.contains("transfer")) {
        const json& t = j.at("transfer");
        maybe(t, "batch_size", c.transfer.batch_size);
        maybe(t, "steps", c.transfer.steps);
        maybe(t, "lr", c.transfer.lr);
        maybe(t, "freeze_k", c.freeze_k);
        maybe(t, "num_classes", c.num_classes);
        maybe(t, "n_train", c.task_train);
        maybe(t, "n_dev", c.task_dev);
        maybe(t, "n_test", c.task_test);
        c.transfer.seed = c.seed;
        maybe(t, "seed", c.transfer.seed);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        maybe(s, "layers", c.sweep_layers);
        maybe(s, "alphas", c.sweep_alphas);
        maybe(s, "eval_sentences", c.eval_sentences);
    }
    return c;
}

std::string config_hash(const ExperimentConfig& c) {
    std::string s = c.raw.dump();
    return to_hex(fnv1a64(s.data(), s.size()));
}

void write_manifest(const ExperimentConfig& c, const std::string& command) {
    json m = {{"command", command},
              {"config_hash", config_hash(c)},
              {"seed", c.seed},
              {"tool_version", kToolVersion}};
    fs::create_directories(c.out_dir);
    std::ofstream out(c.out_dir / ("manifest_" + command + ".json"));
    out << m.dump(2) << "\n";
}

struct LoadedCorpus {
    Corpus corpus;
    Vocab vocab;
    BilingualDictionary dict;
};

LoadedCorpus load_corpus(const ExperimentConfig& c, const fs::path& dir) {
    LoadedCorpus lc;
    lc.vocab = read_vocab((dir / "vocab.txt").string());
    read_corpus_file(lc.corpus, (dir / (c.l1 + ".txt")).string(), lc.vocab);
    read_corpus_file(lc.corpus, (dir / (c.l2 + ".txt")).string(), lc.vocab);
    lc.dict = load_dictionary((dir / "dict.txt").string());
    return lc;
}

// ---- commands ----

int cmd_gen_corpus(const ExperimentConfig& c) {
    auto [corpus, vocab, dict] = generate_parallel_corpus(c.synthetic, c.l1, c.l2);
    fs::create_directories(c.corpus_dir());
    write_vocab(vocab, c.vocab_path().string());
    write_corpus_file(corpus, c.l1, vocab, c.lang_path(c.l1).string());
    write_corpus_file(corpus, c.l2, vocab, c.lang_path(c.l2).string());
    write_dictionary(dict, c.dict_path().string());
    write_manifest(c, "gen-corpus");
    std::cout << "wrote corpus for " << c.l1 << "," << c.l2 << " ("
              << corpus.of(c.l1).size() << " sentences/language, vocab "
              << vocab.size() << ")\n";
    return 0;
}

int cmd_slice_window(const ExperimentConfig& c, int window, std::string in_dir,
                     std::string out_dir) {
    fs::path src = in_dir.empty() ? c.corpus_dir() : fs::path(in_dir);
    fs::path dst = out_dir.empty()
                       ? c.out_dir / ("corpus_w" + std::to_string(window))
                       : fs::path(out_dir);
    auto lc = load_corpus(c, src);
    Corpus sliced = slice_windows(lc.corpus, window);
    fs::create_directories(dst);
    fs::copy_file(src / "vocab.txt", dst / "vocab.txt",
                  fs::copy_options::overwrite_existing);
    fs::copy_file(src / "dict.txt", dst / "dict.txt",
                  fs::copy_options::overwrite_existing);
    write_corpus_file(sliced, c.l1, lc.vocab, (dst / (c.l1 + ".txt")).string());
    write_corpus_file(sliced, c.l2, lc.vocab, (dst / (c.l2 + ".txt")).string());
    write_manifest(c, "slice-window");
    std::cout << "sliced corpus into " << dst.string() << " (W=" << window << ")\n";
    return 0;
}

int cmd_train(ExperimentConfig& c, const std::string& which, const std::string& corpus_dir) {
    fs::path dir = corpus_dir.empty() ? c.corpus_dir() : fs::path(corpus_dir);
    auto lc = load_corpus(c, dir);

    if (which == "mlm") {
        EncoderConfig cfg = c.model;
        cfg.vocab_size = lc.vocab.size();
        auto model = init_model<float>(cfg);
        auto curve = train_mlm(model, lc.corpus, c.mlm);
        save_checkpoint(model, c.mlm_ckpt().string());
        write_loss_curve(curve, (c.out_dir / "mlm_loss.csv").string());
        write_manifest(c, "train-mlm");
        std::cout << "mlm checkpoint " << c.mlm_ckpt().string() << " final loss "
                  << curve.back().second << "\n";
        return 0;
    }
    if (which == "sgns") {
        auto table = train_sgns(lc.corpus, lc.vocab, c.sgns);
        save_embedding_table(table, c.sgns_ckpt().string());
        write_manifest(c, "train-sgns");
        std::cout << "sgns checkpoint " << c.sgns_ckpt().string() << "\n";
        return 0;
    }
    if (which == "transfer") {
        auto encoder = load_checkpoint<float>(c.mlm_ckpt().string());
        auto task = make_transfer_task(c.synthetic, c.task_train, c.task_dev,
                                       c.task_test, c.transfer.seed, c.l1, c.l2);
        fs::create_directories(c.out_dir / "task");
        for (const auto& [lang, splits] : task.data)
            for (const auto& [split, ds] : splits)
                write_pair_dataset(ds, lc.vocab, c.task_path(lang, split).string());

        auto clf = make_classifier<float>(std::move(encoder), c.num_classes,
                                          c.freeze_k, c.transfer.seed);
        auto curve = finetune_transfer(clf, task.data[c.l1]["train"], c.transfer);
        save_classifier(clf, c.classifier_ckpt().string());
        write_loss_curve(curve, (c.out_dir / "transfer_loss.csv").string());
        write_manifest(c, "train-transfer");
        std::cout << "classifier checkpoint " << c.classifier_ckpt().string()
                  << " final loss " << curve.back().second << "\n";
        return 0;
    }
    throw CLI::ValidationError("--which must be mlm, sgns, or transfer");
}

int cmd_extract_means(const ExperimentConfig& c, std::vector<std::string> langs,
                      bool include_special) {
    auto lc = load_corpus(c, c.corpus_dir());
    auto model = load_checkpoint<float>(c.mlm_ckpt().string());
    std::string fp = file_fingerprint(c.mlm_ckpt().string());
    if (langs.empty()) langs = {c.l1, c.l2};
    fs::create_directories(c.out_dir / "means");
    for (const auto& lang : langs) {
        auto mean = compute_language_mean(model, lc.corpus, lang, fp, include_special);
        write_language_mean(mean, c.means_path(lang).string());
        std::cout << "means for " << lang << " over " << mean.count << " positions\n";
    }
    write_manifest(c, "extract-means");
    return 0;
}

int cmd_shift_translate(const ExperimentConfig& c, const std::string& src,
                        const std::string& tgt, int layer, double alpha,
                        const std::string& input, const std::string& output,
                        bool skip_special) {
    auto vocab = read_vocab(c.vocab_path().string());
    auto model = load_checkpoint<float>(c.mlm_ckpt().string());
    auto src_mean = read_language_mean(c.means_path(src).string());
    auto tgt_mean = read_language_mean(c.means_path(tgt).string());
    if (src_mean.fingerprint != file_fingerprint(c.mlm_ckpt().string()))
        throw std::runtime_error("means were computed from a different checkpoint");
    ShiftSpec spec{mds(src_mean, tgt_mean, layer), alpha};

    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open input: " + input);
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot write output: " + output);
    std::string line;
    long lines = 0;
    while (std::getline(in, line)) {
        if (line.empty()) { out << "\n"; continue; }
        TokenSeq seq = tokenize(line, vocab, src);
        TokenSeq pred = shift_translate(model, seq, spec, skip_special);
        for (std::size_t i = 0; i < pred.ids.size(); ++i)
            out << (i ? " " : "") << vocab.tokens.at(pred.ids[i]);
        out << "\n";
        ++lines;
    }
    write_manifest(c, "shift-translate");
    std::cout << "translated " << lines << " lines (" << src << "->" << tgt
              << ", layer " << layer << ", alpha " << alpha << ")\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& c, const std::string& corpus_dir) {
    fs::path dir = corpus_dir.empty() ? c.corpus_dir() : fs::path(corpus_dir);
    auto lc = load_corpus(c, dir);
    auto model = load_checkpoint<float>(c.mlm_ckpt().string());
    auto src_mean = read_language_mean(c.means_path(c.l1).string());
    auto tgt_mean = read_language_mean(c.means_path(c.l2).string());

    std::vector<int> layers = c.sweep_layers;
    if (layers.empty())
        for (int l = 0; l <= model.cfg.num_layers; ++l) layers.push_back(l);

    auto vs = token_set(lc.corpus, c.l1, lc.vocab);
    auto vt = token_set(lc.corpus, c.l2, lc.vocab);
    std::size_t n = std::min<std::size_t>(c.eval_sentences, lc.corpus.of(c.l1).size());
    std::vector<TokenSeq> inputs(lc.corpus.of(c.l1).begin(),
                                 lc.corpus.of(c.l1).begin() + n);
    std::vector<TokenSeq> refs(lc.corpus.of(c.l2).begin(),
                               lc.corpus.of(c.l2).begin() + n);

    auto grid = sweep(model, src_mean, tgt_mean, layers, c.sweep_alphas, inputs, refs,
                      vs, vt);
    write_sweep_csv(grid, (c.out_dir / "sweep.csv").string());
    std::ofstream summary(c.out_dir / "sweep_summary.json");
    summary << sweep_summary(grid).dump(2) << "\n";
    write_manifest(c, "sweep");
    std::cout << "sweep grid " << grid.rows.size() << " cells; best bleu1 "
              << grid.best_bleu.bleu1 << " at layer " << grid.best_bleu.layer
              << " alpha " << grid.best_bleu.alpha << "\n";
    return 0;
}

int cmd_eval(const ExperimentConfig& c, const std::string& which,
             const std::string& embeddings, int layer, double alpha,
             bool exclude_anchors) {
    auto lc = load_corpus(c, c.corpus_dir());
    BilingualDictionary dict = lc.dict;
    if (exclude_anchors) {
        BilingualDictionary filtered;
        for (const auto& p : dict.pairs)
            if (p.first != p.second) filtered.pairs.push_back(p);
        dict = filtered;
    }
    json report;

    if (which == "retrieval") {
        if (embeddings == "sgns") {
            auto table = load_embedding_table(c.sgns_ckpt().string());
            WordVectors src, tgt;
            auto add = [&](WordVectors& out, const std::string& w) {
                int id = lc.vocab.id_of(w);
                if (id == kUnkId) return;
                Eigen::VectorXd v = table.vectors.row(id).cast<double>();
                if (v.norm() == 0) return;
                out.push_back({w, v});
            };
            for (const auto& [s, t] : dict.pairs) { add(src, s); add(tgt, t); }
            auto rep = retrieve(src, tgt, dict);
            report = {{"embeddings", "sgns"},
                      {"mrr", rep.mrr},
                      {"evaluated", rep.evaluated},
                      {"excluded", rep.excluded}};
        } else {
            auto model = load_checkpoint<float>(c.mlm_ckpt().string());
            auto cm = collect_context_means(model, lc.corpus);
            json per_layer = json::array();
            double best = 0;
            int best_layer = 0;
            for (int l = 0; l <= model.cfg.num_layers; ++l) {
                WordVectors src, tgt;
                auto add = [&](WordVectors& out, const std::string& w) {
                    int id = lc.vocab.id_of(w);
                    if (id == kUnkId || !cm.has(id)) return;
                    out.push_back({w, cm.mean(id, l)});
                };
                for (const auto& [s, t] : dict.pairs) { add(src, s); add(tgt, t); }
                auto rep = retrieve(src, tgt, dict);
                per_layer.push_back({{"layer", l},
                                     {"mrr", rep.mrr},
                                     {"evaluated", rep.evaluated},
                                     {"excluded", rep.excluded}});
                if (rep.mrr > best) { best = rep.mrr; best_layer = l; }
            }
            report = {{"embeddings", "mlm"},
                      {"per_layer", per_layer},
                      {"best_layer", best_layer},
                      {"best_mrr", best}};
        }
    } else if (which == "convert" || which == "bleu1") {
        if (layer < 0) throw CLI::ValidationError("--layer required for " + which);
        auto model = load_checkpoint<float>(c.mlm_ckpt().string());
        auto src_mean = read_language_mean(c.means_path(c.l1).string());
        auto tgt_mean = read_language_mean(c.means_path(c.l2).string());
        ShiftSpec spec{mds(src_mean, tgt_mean, layer), alpha};
        auto vs = token_set(lc.corpus, c.l1, lc.vocab);
        auto vt = token_set(lc.corpus, c.l2, lc.vocab);
        std::size_t n = std::min<std::size_t>(c.eval_sentences, lc.corpus.of(c.l1).size());
        std::vector<TokenSeq> outputs;
        std::vector<int> pooled;
        for (std::size_t i = 0; i < n; ++i) {
            outputs.push_back(shift_translate(model, lc.corpus.of(c.l1)[i], spec));
            pooled.insert(pooled.end(), outputs.back().ids.begin(),
                          outputs.back().ids.end());
        }
        if (which == "convert") {
            auto cr = convert_rate(pooled, vs, vt);
            report = {{"layer", layer},       {"alpha", alpha},
                      {"convert_rate", cr.defined ? json(cr.cr) : json()},
                      {"total", cr.total},    {"shared", cr.shared},
                      {"converted", cr.converted}};
        } else {
            std::vector<TokenSeq> refs(lc.corpus.of(c.l2).begin(),
                                       lc.corpus.of(c.l2).begin() + n);
            report = {{"layer", layer},
                      {"alpha", alpha},
                      {"bleu1", bleu1(outputs, refs)}};
        }
    } else if (which == "transfer") {
        auto clf = load_classifier<float>(c.classifier_ckpt().string());
        std::map<LanguageId, LanguageMean> means;
        means[c.l1] = read_language_mean(c.means_path(c.l1).string());
        means[c.l2] = read_language_mean(c.means_path(c.l2).string());

        auto dev = read_pair_dataset(c.task_path(c.l2, "dev").string(), lc.vocab,
                                     c.l2, "dev");
        auto test = read_pair_dataset(c.task_path(c.l2, "test").string(), lc.vocab,
                                      c.l2, "test");
        auto table = tune_alpha(clf, {{c.l2, dev}}, means, c.l1, c.sweep_alphas);
        double chosen = table.best.at(c.l2);
        ShiftSpec spec{mds(means.at(c.l1), means.at(c.l2), clf.freeze_k), chosen};

        auto eval_set = [&](const PairDataset& ds, bool shifted) {
            std::vector<int> pred, gold;
            for (const auto& ex : ds.examples) {
                gold.push_back(ex.label);
                if (shifted) {
                    pred.push_back(shifted_classify(clf, ex.premise.ids,
                                                    ex.hypothesis.ids, spec));
                } else {
                    auto [ids, segs] = encode_pair(ex.premise.ids, ex.hypothesis.ids,
                                                   clf.encoder.cfg.max_positions);
                    pred.push_back(classify(clf, ids, segs));
                }
            }
            return accuracy(pred, gold);
        };
        json grid = json::array();
        for (const auto& row : table.grid)
            grid.push_back({{"lang", row.lang},
                            {"alpha", row.alpha},
                            {"dev_accuracy", row.dev_accuracy}});
        report = {{"target", c.l2},
                  {"alpha", chosen},
                  {"alpha_grid", grid},
                  {"test_accuracy_baseline", eval_set(test, false)},
                  {"test_accuracy_shifted", eval_set(test, true)}};
    } else {
        throw CLI::ValidationError("unknown eval target: " + which);
    }

    fs::create_directories(c.out_dir);
    std::ofstream out(c.out_dir / ("eval_" + which + ".json"));
    out << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    write_manifest(c, "eval-" + which);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"language-space shift experiments"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    std::uint64_t seed_override = 0;
    bool has_seed = false;
    app.add_flag("--deterministic", "single-threaded execution (always on)");
    auto* seed_opt = app.add_option("--seed", seed_override, "override config seed");

    auto* gen = app.add_subcommand("gen-corpus", "generate synthetic parallel corpus");

    auto* slice = app.add_subcommand("slice-window", "slice corpus into bounded windows");
    int window = 20;
    std::string slice_in, slice_out;
    slice->add_option("--window", window, "max tokens per segment")->required();
    slice->add_option("--in", slice_in, "input corpus dir (default out_dir/corpus)");
    slice->add_option("--out", slice_out, "output corpus dir");

    auto* train = app.add_subcommand("train", "train mlm, sgns, or transfer");
    std::string which_train, train_corpus;
    train->add_option("--which", which_train, "mlm|sgns|transfer")->required();
    train->add_option("--corpus-dir", train_corpus, "override corpus directory");

    auto* means = app.add_subcommand("extract-means", "compute per-layer language means");
    std::vector<std::string> mean_langs;
    bool include_special = false;
    means->add_option("--langs", mean_langs, "languages (default both)");
    means->add_flag("--include-special", include_special,
                    "include special tokens in the mean");

    auto* trans = app.add_subcommand("shift-translate", "unsupervised token translation");
    std::string src, tgt, input, output;
    int layer = -1;
    double alpha = 1.0;
    bool skip_special = false;
    trans->add_option("--src", src)->required();
    trans->add_option("--tgt", tgt)->required();
    trans->add_option("--layer", layer)->required();
    trans->add_option("--alpha", alpha)->required();
    trans->add_option("--input", input)->required()->check(CLI::ExistingFile);
    trans->add_option("--output", output)->required();
    trans->add_flag("--skip-special", skip_special, "do not shift special positions");

    auto* swp = app.add_subcommand("sweep", "layer x alpha translation sweep");
    std::string sweep_corpus;
    swp->add_option("--corpus-dir", sweep_corpus, "override corpus directory");

    auto* ev = app.add_subcommand("eval", "retrieval | convert | bleu1 | transfer");
    std::string which_eval, embeddings = "mlm";
    int eval_layer = -1;
    double eval_alpha = 0.0;
    bool exclude_anchors = false;
    ev->add_option("--which", which_eval, "retrieval|convert|bleu1|transfer")->required();
    ev->add_option("--embeddings", embeddings, "mlm|sgns (retrieval only)");
    ev->add_option("--layer", eval_layer, "shift layer (convert/bleu1)");
    ev->add_option("--alpha", eval_alpha, "shift weight (convert/bleu1)");
    ev->add_flag("--exclude-anchors", exclude_anchors,
                 "drop identical-string pairs from the dictionary");

    // global options (--config, --seed) may appear after the subcommand
    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
        has_seed = seed_opt->count() > 0;

        ExperimentConfig config = load_config(config_path);
        if (has_seed) {
            config.seed = seed_override;
            config.synthetic.seed = seed_override;
            config.model.seed = seed_override;
            config.mlm.seed = seed_override;
            config.sgns.seed = seed_override;
            config.transfer.seed = seed_override;
        }

        if (gen->parsed()) return cmd_gen_corpus(config);
        if (slice->parsed()) return cmd_slice_window(config, window, slice_in, slice_out);
        if (train->parsed()) return cmd_train(config, which_train, train_corpus);
        if (means->parsed()) return cmd_extract_means(config, mean_langs, include_special);
        if (trans->parsed())
            return cmd_shift_translate(config, src, tgt, layer, alpha, input, output,
                                       skip_special);
        if (swp->parsed()) return cmd_sweep(config, sweep_corpus);
        if (ev->parsed())
            return cmd_eval(config, which_eval, embeddings, eval_layer, eval_alpha,
                            exclude_anchors);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
