#include "deepindex/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepindex/checkpoint.hpp"
#include "deepindex/corpus.hpp"
#include "deepindex/features.hpp"
#include "deepindex/metrics.hpp"
#include "deepindex/models.hpp"
#include "deepindex/report.hpp"
#include "deepindex/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace deepindex::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string canonical_mult_token(const std::string& raw) {
    if (raw == "full") return "full";
    return corpus::multiplier_name(corpus::multiplier_from_name(raw));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + path);
    os << content;
    if (!os) throw Error("write failure on " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::vector<const corpus::Document*> docs_for_ids(const corpus::Dataset& ds, const std::vector<std::string>& ids) {
    std::vector<const corpus::Document*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto* doc = ds.find(id);
        if (!doc) throw Error("document id \"" + id + "\" not found in dataset");
        out.push_back(doc);
    }
    return out;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    std::string out_dir;
    int n_fulltext = 64;
    int mult = 4;
    int n_labels = 10;
    std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
    corpus::SynthConfig cfg;
    cfg.n_fulltext = a.n_fulltext;
    cfg.title_multiplier = a.mult;
    cfg.n_labels = a.n_labels;
    cfg.seed = a.seed;
    auto [titles, fulltexts] = corpus::synth_generate(cfg);
    ensure_dir(a.out_dir);
    corpus::write_tsv(titles, (fs::path(a.out_dir) / "titles.tsv").string());
    corpus::write_tsv(fulltexts, (fs::path(a.out_dir) / "fulltexts.tsv").string());
    std::cout << "wrote " << titles.size() << " titles and " << fulltexts.size() << " full-texts to " << a.out_dir
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
    std::string titles, fulltexts, out_dir;
    int folds = 10;
    std::string mults = "1";
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
};

int cmd_prepare(const PrepareArgs& a) {
    const auto titles = corpus::load_tsv(a.titles, corpus::Provenance::title);
    const auto fulltexts = corpus::load_tsv(a.fulltexts, corpus::Provenance::fulltext);

    std::vector<std::string> fulltext_ids;
    for (const auto& d : fulltexts.documents) fulltext_ids.push_back(d.id);
    const auto plan = corpus::make_folds(fulltext_ids, a.folds, a.seed);

    ensure_dir(a.out_dir);
    {
        std::vector<std::pair<std::string, int>> entries(plan.fold_of.begin(), plan.fold_of.end());
        std::sort(entries.begin(), entries.end());
        std::string out;
        for (const auto& [id, fold] : entries) out += id + "\t" + std::to_string(fold) + "\n";
        write_file((fs::path(a.out_dir) / "folds.tsv").string(), out);
    }

    for (const auto& raw : split_list(a.mults)) {
        const std::string token = canonical_mult_token(raw);
        // the full-text rung shares the x1 publication ids
        const auto mult = corpus::multiplier_from_name(token == "full" ? "1" : token);
        for (int fold = 0; fold < a.folds; ++fold) {
            const auto split = corpus::assemble_ladder(fold, mult, titles, fulltexts, plan, a.val_fraction, a.seed);
            std::string out;
            for (const auto& id : split.train_ids) out += "train\t" + id + "\n";
            for (const auto& id : split.val_ids) out += "val\t" + id + "\n";
            for (const auto& id : split.test_ids) out += "test\t" + id + "\n";
            write_file((fs::path(a.out_dir) / split_file_name(fold, token)).string(), out);
        }
    }
    std::cout << "wrote fold plan and ladder manifests to " << a.out_dir << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::string titles, fulltexts, splits_dir, out_dir;
    std::string model = "mlp";
    std::string mult = "1";
    int fold = 0;
    std::string preset;
    std::uint64_t seed = 0;

    int max_epochs = 100;
    int batch_size = 256;
    int patience = 10;
    int eval_every = 0;
    double lr = 0.001;
    bool lr_given = false;

    std::string embeddings_path;
    int emb_dim = 300;
    int max_seq_len = 250;
    int n_unigrams = 25000;
    int n_bigrams = 25000;

    // size overrides for desk-scale runs; 0 keeps the preset/default value
    int mlp_hidden = 0;
    int base_hidden = 0;
    int cnn_feature_maps = 0;
    int cnn_bottleneck = 0;
    int lstm_hidden = 0;
    int attention_dim = 0;
    bool lstm_peepholes = false;
};

json model_config_json(const models::ModelConfig& cfg) {
    json j;
    j["variant"] = models::variant_name(cfg.variant);
    j["n_labels"] = cfg.n_labels;
    j["seed"] = cfg.seed;
    j["input_dim"] = cfg.input_dim;
    j["base_hidden"] = cfg.base_hidden;
    j["base_keep_prob"] = cfg.base_keep_prob;
    j["mlp_hidden"] = cfg.mlp_hidden;
    j["mlp_layers"] = cfg.mlp_layers;
    j["mlp_batchnorm"] = cfg.mlp_batchnorm;
    j["mlp_keep_prob"] = cfg.mlp_keep_prob;
    j["vocab_size"] = cfg.vocab_size;
    j["embedding_dim"] = cfg.embedding_dim;
    j["max_seq_len"] = cfg.max_seq_len;
    j["cnn_windows"] = cfg.cnn_windows;
    j["cnn_feature_maps"] = cfg.cnn_feature_maps;
    j["cnn_chunks"] = cfg.cnn_chunks;
    j["cnn_bottleneck"] = cfg.cnn_bottleneck;
    j["cnn_keep_prob"] = cfg.cnn_keep_prob;
    j["lstm_hidden"] = cfg.lstm_hidden;
    j["lstm_keep_prob"] = cfg.lstm_keep_prob;
    j["lstm_peepholes"] = cfg.lstm_peepholes;
    j["attention_dim"] = cfg.attention_dim;
    return j;
}

models::ModelConfig model_config_from_json(const json& j) {
    models::ModelConfig cfg;
    cfg.variant = models::variant_from_name(j.at("variant").get<std::string>());
    cfg.n_labels = j.at("n_labels").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.base_hidden = j.at("base_hidden").get<int>();
    cfg.base_keep_prob = j.at("base_keep_prob").get<double>();
    cfg.mlp_hidden = j.at("mlp_hidden").get<int>();
    cfg.mlp_layers = j.at("mlp_layers").get<int>();
    cfg.mlp_batchnorm = j.at("mlp_batchnorm").get<bool>();
    cfg.mlp_keep_prob = j.at("mlp_keep_prob").get<double>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.embedding_dim = j.at("embedding_dim").get<int>();
    cfg.max_seq_len = j.at("max_seq_len").get<int>();
    cfg.cnn_windows = j.at("cnn_windows").get<std::vector<int>>();
    cfg.cnn_feature_maps = j.at("cnn_feature_maps").get<int>();
    cfg.cnn_chunks = j.at("cnn_chunks").get<int>();
    cfg.cnn_bottleneck = j.at("cnn_bottleneck").get<int>();
    cfg.cnn_keep_prob = j.at("cnn_keep_prob").get<double>();
    cfg.lstm_hidden = j.at("lstm_hidden").get<int>();
    cfg.lstm_keep_prob = j.at("lstm_keep_prob").get<double>();
    cfg.lstm_peepholes = j.at("lstm_peepholes").get<bool>();
    cfg.attention_dim = j.at("attention_dim").get<int>();
    return cfg;
}

struct LoadedExperiment {
    corpus::Dataset titles, fulltexts;
    SplitFile split;
    const corpus::Dataset* text_source = nullptr;  // titles, or fulltexts on the full rung
};

LoadedExperiment load_experiment(const std::string& titles_path, const std::string& fulltexts_path,
                                 const std::string& splits_dir, int fold, const std::string& mult_token) {
    LoadedExperiment ex;
    ex.titles = corpus::load_tsv(titles_path, corpus::Provenance::title);
    ex.fulltexts = corpus::load_tsv(fulltexts_path, corpus::Provenance::fulltext);
    const auto split_path = fs::path(splits_dir) / split_file_name(fold, mult_token);
    ex.split = read_split_file(split_path.string());
    ex.text_source = mult_token == "full" ? &ex.fulltexts : &ex.titles;
    return ex;
}

training::EncodedSplit encode_ngram_split(const std::vector<const corpus::Document*>& docs,
                                          const features::NGramVocabulary& vocab,
                                          const features::Tokenizer& tokenizer, const corpus::LabelSpace& space) {
    training::EncodedSplit out;
    out.is_sparse = true;
    out.sparse.cols = vocab.dim();
    for (const auto* doc : docs) out.sparse.rows.push_back(features::tfidf_encode(*doc, vocab, tokenizer));
    out.gold = training::encode_gold(docs, space);
    return out;
}

training::EncodedSplit encode_sequence_split(const std::vector<const corpus::Document*>& docs,
                                             const features::EmbeddingTable& table,
                                             const features::Tokenizer& tokenizer, int max_len,
                                             const corpus::LabelSpace& space) {
    training::EncodedSplit out;
    out.is_sparse = false;
    for (const auto* doc : docs) out.sequences.push_back(features::encode_sequence(*doc, table, tokenizer, max_len));
    out.gold = training::encode_gold(docs, space);
    return out;
}

int cmd_train(const TrainArgs& a) {
    const std::string mult_token = canonical_mult_token(a.mult);
    const auto variant = models::variant_from_name(a.model);
    auto ex = load_experiment(a.titles, a.fulltexts, a.splits_dir, a.fold, mult_token);

    const auto train_docs = docs_for_ids(*ex.text_source, ex.split.train_ids);
    const auto val_docs = docs_for_ids(*ex.text_source, ex.split.val_ids);
    const auto space = corpus::build_label_space(train_docs);

    models::ModelConfig mcfg;
    mcfg.variant = variant;
    mcfg.n_labels = space.size();
    mcfg.seed = a.seed;
    mcfg.max_seq_len = a.max_seq_len;
    training::TrainConfig tcfg;
    tcfg.batch_size = a.batch_size;
    tcfg.patience = a.patience;
    tcfg.eval_every = a.eval_every;
    tcfg.max_epochs = a.max_epochs;
    tcfg.seed = a.seed;
    if (!a.preset.empty()) tcfg.learning_rate = models::apply_preset(mcfg, a.preset);
    if (a.lr_given || a.preset.empty()) tcfg.learning_rate = a.lr;
    if (a.mlp_hidden > 0) mcfg.mlp_hidden = a.mlp_hidden;
    if (a.base_hidden > 0) mcfg.base_hidden = a.base_hidden;
    if (a.cnn_feature_maps > 0) mcfg.cnn_feature_maps = a.cnn_feature_maps;
    if (a.cnn_bottleneck > 0) mcfg.cnn_bottleneck = a.cnn_bottleneck;
    if (a.lstm_hidden > 0) mcfg.lstm_hidden = a.lstm_hidden;
    if (a.attention_dim > 0) mcfg.attention_dim = a.attention_dim;
    if (a.lstm_peepholes) mcfg.lstm_peepholes = true;

    features::Tokenizer tokenizer;
    training::TrainData data;
    data.n_labels = space.size();
    std::unique_ptr<models::Model> model;
    json feat_json;

    if (variant == models::Variant::BaseMlp || variant == models::Variant::Mlp) {
        const int n_bi = variant == models::Variant::BaseMlp ? 0 : a.n_bigrams;
        const auto vocab = features::fit_ngram_vocab(train_docs, tokenizer, a.n_unigrams, n_bi);
        mcfg.input_dim = vocab.dim();
        data.train = encode_ngram_split(train_docs, vocab, tokenizer, space);
        data.val = encode_ngram_split(val_docs, vocab, tokenizer, space);
        model = models::build_model(mcfg);
        feat_json["kind"] = "ngram";
        feat_json["n_train_docs"] = vocab.n_train_docs;
        feat_json["n_unigrams"] = vocab.n_unigrams;
        json entries = json::array();
        for (const auto& e : vocab.entries) entries.push_back({e.ngram, e.df});
        feat_json["entries"] = std::move(entries);
    } else {
        features::EmbeddingTable table;
        if (!a.embeddings_path.empty()) {
            table = features::load_embeddings(a.embeddings_path);
        } else {
            table = features::init_random_embeddings(features::collect_vocabulary(train_docs, tokenizer), a.emb_dim,
                                                     a.seed);
        }
        mcfg.embedding_dim = table.dim;
        data.train = encode_sequence_split(train_docs, table, tokenizer, a.max_seq_len, space);
        data.val = encode_sequence_split(val_docs, table, tokenizer, a.max_seq_len, space);
        model = models::build_model(mcfg, &table);
        feat_json["kind"] = "sequence";
        feat_json["dim"] = table.dim;
        feat_json["max_len"] = a.max_seq_len;
        feat_json["words"] = table.words;
    }

    const auto result = training::train(*model, data, tcfg);

    ensure_dir(a.out_dir);
    const std::string stem = checkpoint_stem(a.model, mult_token, a.fold);
    const auto base = fs::path(a.out_dir) / stem;
    save_checkpoint(base.string() + ".ckpt", model->named_state());

    json sidecar;
    sidecar["format"] = "deepindex-model";
    sidecar["version"] = 1;
    sidecar["model"] = a.model;
    sidecar["multiplier"] = mult_token;
    sidecar["fold"] = a.fold;
    sidecar["preset"] = a.preset;
    sidecar["theta"] = result.theta;
    sidecar["best_val_f1"] = result.best_val_f1;
    sidecar["diverged"] = result.diverged;
    sidecar["config"] = model_config_json(model->config());
    sidecar["labels"] = space.labels();
    sidecar["features"] = feat_json;
    write_file(base.string() + ".json", sidecar.dump(2) + "\n");

    std::string log;
    for (const auto& line : result.log_lines) log += line + "\n";
    write_file(base.string() + ".log", log);

    if (result.diverged) {
        std::cerr << "training diverged; last-good checkpoint written to " << base.string() << ".ckpt\n";
        return kExitRuntime;
    }
    std::cout << "trained " << stem << ": best validation F1 " << result.best_val_f1 << " at theta " << result.theta
              << " after " << result.steps << " steps\n";
    return kExitOk;
}

// --------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string titles, fulltexts, splits_dir, checkpoint, csv;
};

int cmd_evaluate(const EvaluateArgs& a) {
    if (!fs::exists(a.checkpoint)) throw Error("missing checkpoint: " + a.checkpoint);
    const std::string stem = fs::path(a.checkpoint).stem().string();
    const std::string sidecar_path = (fs::path(a.checkpoint).parent_path() / (stem + ".json")).string();
    const json sidecar = json::parse(read_file(sidecar_path));
    if (sidecar.value("format", "") != "deepindex-model")
        throw ParseError("not a model sidecar: " + sidecar_path);

    const std::string model_name = sidecar.at("model").get<std::string>();
    const std::string mult_token = sidecar.at("multiplier").get<std::string>();
    const int fold = sidecar.at("fold").get<int>();
    const double theta = sidecar.at("theta").get<double>();
    auto mcfg = model_config_from_json(sidecar.at("config"));
    const corpus::LabelSpace space(sidecar.at("labels").get<std::vector<std::string>>());

    auto ex = load_experiment(a.titles, a.fulltexts, a.splits_dir, fold, mult_token);
    const auto test_docs = docs_for_ids(*ex.text_source, ex.split.test_ids);

    const auto state = load_checkpoint(a.checkpoint);
    features::Tokenizer tokenizer;
    training::EncodedSplit test;
    std::unique_ptr<models::Model> model;

    const json& feat = sidecar.at("features");
    if (feat.at("kind") == "ngram") {
        features::NGramVocabulary vocab;
        vocab.n_train_docs = feat.at("n_train_docs").get<std::int64_t>();
        vocab.n_unigrams = feat.at("n_unigrams").get<int>();
        for (const auto& e : feat.at("entries"))
            vocab.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
        vocab.rebuild_index();
        test = encode_ngram_split(test_docs, vocab, tokenizer, space);
        model = models::build_model(mcfg);
    } else {
        features::EmbeddingTable table;
        table.dim = feat.at("dim").get<int>();
        table.words = feat.at("words").get<std::vector<std::string>>();
        table.rebuild_index();
        const auto emb_it = std::find_if(state.begin(), state.end(), [](const auto& p) { return p.name == "embedding"; });
        if (emb_it == state.end()) throw ParseError("checkpoint lacks the embedding tensor");
        table.matrix = emb_it->value->data();
        test = encode_sequence_split(test_docs, table, tokenizer, feat.at("max_len").get<int>(), space);
        model = models::build_model(mcfg, &table);
    }
    model->load_state(state);

    const auto p = training::predict(*model, test);
    const auto rep = metrics::evaluate(p, test.gold, theta);

    const bool fresh = !fs::exists(a.csv);
    std::ofstream os(a.csv, std::ios::app);
    if (!os) throw Error("cannot append to " + a.csv);
    if (fresh) os << metrics::report_csv_header() << "\n";
    os << metrics::report_csv_row(model_name, mult_token, fold, rep) << "\n";
    if (!os) throw Error("write failure on " + a.csv);

    std::cout << metrics::report_kv_text(rep);
    return kExitOk;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
    std::string csv, out_dir;
};

int cmd_report(const ReportArgs& a) {
    const auto rows = report::read_eval_csv(a.csv);
    const auto table = report::aggregate(rows);
    ensure_dir(a.out_dir);
    write_file((fs::path(a.out_dir) / "results_table.csv").string(), report::table_csv(table));
    write_file((fs::path(a.out_dir) / "learning_curve.svg").string(), report::learning_curve_svg(table));
    std::cout << report::table_csv(table);
    return kExitOk;
}

}  // namespace

std::string split_file_name(int fold, const std::string& mult_token) {
    return "split_fold" + std::to_string(fold) + "_" + mult_token + ".tsv";
}

SplitFile read_split_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open split manifest: " + path);
    SplitFile out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected role<TAB>id");
        const std::string role = line.substr(0, tab), id = line.substr(tab + 1);
        if (role == "train")
            out.train_ids.push_back(id);
        else if (role == "val")
            out.val_ids.push_back(id);
        else if (role == "test")
            out.test_ids.push_back(id);
        else
            throw ParseError(path + ":" + std::to_string(line_no) + ": unknown role \"" + role + "\"");
    }
    return out;
}

std::string checkpoint_stem(const std::string& model, const std::string& mult_token, int fold) {
    return model + "_" + mult_token + "_fold" + std::to_string(fold);
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"deepindex: multi-label subject indexing experiments on titles vs full-texts"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key = value configuration file; command-line flags win");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic title/full-text corpus pair");
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--n-fulltext", synth.n_fulltext, "number of documents that get a full-text");
    synth_cmd->add_option("--mult", synth.mult, "title count as a multiple of the full-text count");
    synth_cmd->add_option("--n-labels", synth.n_labels, "label inventory size");
    synth_cmd->add_option("--seed", synth.seed, "random seed")->envname("DEEPINDEX_SEED");

    PrepareArgs prep;
    auto* prep_cmd = app.add_subcommand("prepare", "build the fold plan and ladder split manifests");
    prep_cmd->add_option("--titles", prep.titles, "titles TSV")->required();
    prep_cmd->add_option("--fulltexts", prep.fulltexts, "full-texts TSV")->required();
    prep_cmd->add_option("--out-dir", prep.out_dir, "manifest output directory")->required();
    prep_cmd->add_option("--folds", prep.folds, "cross-validation fold count");
    prep_cmd->add_option("--mults", prep.mults, "comma list from 1,2,4,8,all,full");
    prep_cmd->add_option("--val-fraction", prep.val_fraction, "validation share of each training pool");
    prep_cmd->add_option("--seed", prep.seed, "random seed")->envname("DEEPINDEX_SEED");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train one model on one ladder rung and fold");
    train_cmd->add_option("--titles", tr.titles, "titles TSV")->required();
    train_cmd->add_option("--fulltexts", tr.fulltexts, "full-texts TSV")->required();
    train_cmd->add_option("--splits-dir", tr.splits_dir, "directory written by prepare")->required();
    train_cmd->add_option("--out-dir", tr.out_dir, "artifact output directory")->required();
    train_cmd->add_option("--model", tr.model, "base-mlp, mlp, cnn or lstm");
    train_cmd->add_option("--mult", tr.mult, "1, 2, 4, 8, all or full");
    train_cmd->add_option("--fold", tr.fold, "test fold index");
    train_cmd->add_option("--preset", tr.preset, "econbiz-title, econbiz-full, pubmed-title or pubmed-full");
    train_cmd->add_option("--seed", tr.seed, "random seed")->envname("DEEPINDEX_SEED");
    train_cmd->add_option("--max-epochs", tr.max_epochs, "epoch cap");
    train_cmd->add_option("--batch-size", tr.batch_size, "mini-batch size");
    train_cmd->add_option("--patience", tr.patience, "non-improving validations before stopping");
    train_cmd->add_option("--eval-every", tr.eval_every, "steps between validations; 0 = each epoch");
    auto* lr_opt = train_cmd->add_option("--lr", tr.lr, "initial learning rate");
    train_cmd->add_option("--embeddings", tr.embeddings_path, "pretrained embedding file (GloVe text format)");
    train_cmd->add_option("--emb-dim", tr.emb_dim, "random-embedding dimension when no file is given");
    train_cmd->add_option("--max-seq-len", tr.max_seq_len, "token cap for sequence models");
    train_cmd->add_option("--n-unigrams", tr.n_unigrams, "unigram vocabulary cap");
    train_cmd->add_option("--n-bigrams", tr.n_bigrams, "bigram vocabulary cap");
    train_cmd->add_option("--mlp-hidden", tr.mlp_hidden, "override MLP hidden width");
    train_cmd->add_option("--base-hidden", tr.base_hidden, "override Base-MLP hidden width");
    train_cmd->add_option("--cnn-feature-maps", tr.cnn_feature_maps, "override CNN feature-map count");
    train_cmd->add_option("--cnn-bottleneck", tr.cnn_bottleneck, "override CNN bottleneck width");
    train_cmd->add_option("--lstm-hidden", tr.lstm_hidden, "override LSTM memory-cell size");
    train_cmd->add_option("--attention-dim", tr.attention_dim, "override attention dimension");
    train_cmd->add_flag("--lstm-peepholes", tr.lstm_peepholes, "enable LSTM peephole connections");

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "score a trained checkpoint on its test fold");
    eval_cmd->add_option("--titles", ev.titles, "titles TSV")->required();
    eval_cmd->add_option("--fulltexts", ev.fulltexts, "full-texts TSV")->required();
    eval_cmd->add_option("--splits-dir", ev.splits_dir, "directory written by prepare")->required();
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint path (.ckpt)")->required();
    eval_cmd->add_option("--csv", ev.csv, "evaluation CSV to append to")->required();

    ReportArgs rep;
    auto* report_cmd = app.add_subcommand("report", "aggregate evaluation rows into a table and SVG curve");
    report_cmd->add_option("--csv", rep.csv, "evaluation CSV")->required();
    report_cmd->add_option("--out-dir", rep.out_dir, "report output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth);
        if (*prep_cmd) return cmd_prepare(prep);
        if (*train_cmd) {
            tr.lr_given = lr_opt->count() > 0;
            return cmd_train(tr);
        }
        if (*eval_cmd) return cmd_evaluate(ev);
        if (*report_cmd) return cmd_report(rep);
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace deepindex::cli
