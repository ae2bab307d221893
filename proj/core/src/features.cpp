#include "deepindex/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace deepindex::features {

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto uc = static_cast<unsigned char>(ch);
        const bool token_char = (uc >= 0x80) || std::isalnum(uc);
        if (token_char) {
            cur.push_back(lowercase_ && uc < 0x80 ? static_cast<char>(std::tolower(uc)) : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

void NGramVocabulary::rebuild_index() {
    index.clear();
    index.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) index.emplace(entries[i].ngram, static_cast<int>(i));
}

void EmbeddingTable::rebuild_index() {
    row_of.clear();
    row_of.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) row_of.emplace(words[i], static_cast<int>(i));
}

namespace {

// top `cap` by descending df, ties lexicographic ascending
std::vector<NGramVocabulary::Entry> select_top(const std::map<std::string, std::int64_t>& df, int cap) {
    std::vector<NGramVocabulary::Entry> all;
    all.reserve(df.size());
    for (const auto& [g, n] : df) all.push_back({g, n});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.df != b.df) return a.df > b.df;
        return a.ngram < b.ngram;
    });
    if (static_cast<int>(all.size()) > cap) all.resize(static_cast<std::size_t>(cap));
    return all;
}

}  // namespace

NGramVocabulary fit_ngram_vocab(const std::vector<const corpus::Document*>& train_docs, const Tokenizer& tokenizer,
                                int n_unigrams, int n_bigrams) {
    if (train_docs.empty()) throw Error("cannot fit an n-gram vocabulary on an empty training split");
    std::map<std::string, std::int64_t> uni_df, bi_df;
    for (const auto* doc : train_docs) {
        const auto toks = tokenizer.tokenize(doc->text);
        std::set<std::string> uni(toks.begin(), toks.end());
        for (const auto& t : uni) ++uni_df[t];
        if (n_bigrams > 0) {
            std::set<std::string> bi;
            for (std::size_t i = 0; i + 1 < toks.size(); ++i) bi.insert(toks[i] + " " + toks[i + 1]);
            for (const auto& b : bi) ++bi_df[b];
        }
    }
    NGramVocabulary vocab;
    vocab.n_train_docs = static_cast<std::int64_t>(train_docs.size());
    vocab.entries = select_top(uni_df, n_unigrams);
    vocab.n_unigrams = vocab.dim();
    if (n_bigrams > 0) {
        auto bis = select_top(bi_df, n_bigrams);
        vocab.entries.insert(vocab.entries.end(), bis.begin(), bis.end());
    }
    vocab.rebuild_index();
    return vocab;
}

NGramVocabulary fit_ngram_vocab(const corpus::Dataset& train, const Tokenizer& tokenizer, int n_unigrams,
                                int n_bigrams) {
    std::vector<const corpus::Document*> docs;
    docs.reserve(train.size());
    for (const auto& d : train.documents) docs.push_back(&d);
    return fit_ngram_vocab(docs, tokenizer, n_unigrams, n_bigrams);
}

double idf(std::int64_t df, std::int64_t n_docs) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

SparseVector tfidf_encode(const corpus::Document& doc, const NGramVocabulary& vocab, const Tokenizer& tokenizer) {
    const auto toks = tokenizer.tokenize(doc.text);
    std::map<int, double> tf;
    auto bump = [&](const std::string& g) {
        auto it = vocab.index.find(g);
        if (it != vocab.index.end()) tf[it->second] += 1.0;
    };
    for (const auto& t : toks) bump(t);
    if (vocab.n_unigrams < vocab.dim()) {
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) bump(toks[i] + " " + toks[i + 1]);
    }

    SparseVector vec;
    vec.dim = vocab.dim();
    vec.pairs.reserve(tf.size());
    double norm_sq = 0.0;
    for (const auto& [idx, count] : tf) {
        const double v = count * idf(vocab.entries[static_cast<std::size_t>(idx)].df, vocab.n_train_docs);
        vec.pairs.emplace_back(idx, v);
        norm_sq += v * v;
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& [_, v] : vec.pairs) v *= inv;
    }
    return vec;
}

TokenSequence encode_sequence(const corpus::Document& doc, const EmbeddingTable& table, const Tokenizer& tokenizer,
                              int max_len) {
    if (max_len <= 0) throw ConfigError("max sequence length must be positive");
    TokenSequence seq;
    for (const auto& tok : tokenizer.tokenize(doc.text)) {
        auto it = table.row_of.find(tok);
        if (it == table.row_of.end()) continue;  // OOV discarded before the cap
        seq.ids.push_back(it->second);
        if (static_cast<int>(seq.ids.size()) == max_len) break;
    }
    return seq;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open embedding file: " + path);
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<double> vals;
        double v;
        while (ss >> v) vals.push_back(v);
        if (word.empty() || vals.empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed embedding line");
        if (table.dim == 0) table.dim = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != table.dim)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.dim) +
                             " values, got " + std::to_string(vals.size()));
        if (table.row_of.count(word)) {
            std::cerr << "warning: duplicate embedding for \"" << word << "\" at " << path << ":" << line_no
                      << ", keeping the first\n";
            continue;
        }
        table.row_of.emplace(word, table.vocab_size());
        table.words.push_back(word);
        table.matrix.insert(table.matrix.end(), vals.begin(), vals.end());
    }
    if (table.words.empty()) throw ParseError("no embeddings in " + path);
    return table;
}

EmbeddingTable init_random_embeddings(const std::vector<std::string>& vocabulary, int dim, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    EmbeddingTable table;
    table.dim = dim;
    std::vector<std::string> words = vocabulary;
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    std::mt19937_64 rng(mix_seed(seed, 0xe0b));
    table.words = std::move(words);
    table.matrix.resize(table.words.size() * static_cast<std::size_t>(dim));
    for (auto& v : table.matrix) v = uniform(rng, -0.05, 0.05);
    table.rebuild_index();
    return table;
}

std::vector<std::string> collect_vocabulary(const std::vector<const corpus::Document*>& docs,
                                            const Tokenizer& tokenizer) {
    std::set<std::string> vocab;
    for (const auto* doc : docs)
        for (auto& tok : tokenizer.tokenize(doc->text)) vocab.insert(std::move(tok));
    return {vocab.begin(), vocab.end()};
}

}  // namespace deepindex::features
