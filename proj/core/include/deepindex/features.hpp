#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deepindex/corpus.hpp"
#include "deepindex/sparse.hpp"

namespace deepindex::features {

// Lowercased maximal runs of letters/digits. ASCII letters are case-folded;
// any codepoint >= U+0080 is treated as a letter and kept verbatim.
class Tokenizer {
public:
    explicit Tokenizer(bool lowercase = true) : lowercase_(lowercase) {}
    std::vector<std::string> tokenize(std::string_view text) const;
    bool lowercase() const { return lowercase_; }

private:
    bool lowercase_ = true;
};

// Unigram + bigram vocabulary with document frequencies, fitted on the
// training split only. Feature indices: unigrams first, then bigrams.
struct NGramVocabulary {
    struct Entry {
        std::string ngram;  // bigrams are "first second"
        std::int64_t df = 0;
    };
    std::vector<Entry> entries;
    std::unordered_map<std::string, int> index;
    int n_unigrams = 0;  // entries [0, n_unigrams) are unigrams
    std::int64_t n_train_docs = 0;

    int dim() const { return static_cast<int>(entries.size()); }
    void rebuild_index();
};

NGramVocabulary fit_ngram_vocab(const std::vector<const corpus::Document*>& train_docs, const Tokenizer& tokenizer,
                                int n_unigrams = 25000, int n_bigrams = 25000);
NGramVocabulary fit_ngram_vocab(const corpus::Dataset& train, const Tokenizer& tokenizer, int n_unigrams = 25000,
                                int n_bigrams = 25000);

// Smoothed log IDF: ln((1+N)/(1+df)) + 1.
double idf(std::int64_t df, std::int64_t n_docs);

// Raw term count x IDF, then L2-normalized jointly over unigrams and bigrams.
// N-grams outside the vocabulary are ignored; a document with no in-vocabulary
// n-grams encodes to the zero vector.
SparseVector tfidf_encode(const corpus::Document& doc, const NGramVocabulary& vocab, const Tokenizer& tokenizer);

struct EmbeddingTable {
    int dim = 0;
    std::vector<std::string> words;  // row order
    std::unordered_map<std::string, int> row_of;
    std::vector<double> matrix;  // |words| x dim, row-major

    int vocab_size() const { return static_cast<int>(words.size()); }
    void rebuild_index();
};

struct TokenSequence {
    std::vector<int> ids;

    std::size_t size() const { return ids.size(); }
};

// Out-of-vocabulary tokens are discarded before the length cap is applied.
TokenSequence encode_sequence(const corpus::Document& doc, const EmbeddingTable& table, const Tokenizer& tokenizer,
                              int max_len = 250);

// GloVe text format: `word f1 f2 ... fd`, one entry per line.
EmbeddingTable load_embeddings(const std::string& path);

EmbeddingTable init_random_embeddings(const std::vector<std::string>& vocabulary, int dim, std::uint64_t seed);

// Sorted unique tokens over a document collection, for the random-embedding
// fallback when no pretrained file is supplied.
std::vector<std::string> collect_vocabulary(const std::vector<const corpus::Document*>& docs,
                                            const Tokenizer& tokenizer);

}  // namespace deepindex::features
