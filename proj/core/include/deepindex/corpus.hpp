#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deepindex/common.hpp"

namespace deepindex::corpus {

// One publication. Labels are stored sorted and de-duplicated.
struct Document {
    std::string id;
    std::string text;
    std::vector<std::string> labels;
    bool has_fulltext = false;
};

enum class Provenance { fulltext, title };

struct Dataset {
    std::vector<Document> documents;
    Provenance provenance = Provenance::title;

    std::size_t size() const { return documents.size(); }
    const Document* find(const std::string& id) const;
    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

// Bijective label-string <-> dense index map. Indices are assigned by
// descending document frequency in the training split, ties lexicographic.
class LabelSpace {
public:
    LabelSpace() = default;
    explicit LabelSpace(std::vector<std::string> ordered_labels);

    int size() const { return static_cast<int>(labels_.size()); }
    std::optional<int> index_of(const std::string& label) const;
    const std::string& label_of(int index) const;
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::unordered_map<std::string, int> fold_of;

    std::vector<std::string> ids_in_fold(int fold) const;  // sorted
};

enum class Multiplier { x1, x2, x4, x8, all };

std::string multiplier_name(Multiplier m);
Multiplier multiplier_from_name(const std::string& name);
int multiplier_factor(Multiplier m);  // 0 for `all`

struct LadderSplit {
    Multiplier multiplier = Multiplier::x1;
    int fold_index = 0;
    std::vector<std::string> train_ids, val_ids, test_ids;  // each sorted, pairwise disjoint
};

// TSV: three TAB-separated columns id, text, comma-separated labels; UTF-8,
// LF line endings, no header.
Dataset load_tsv(const std::string& path, Provenance provenance);
void write_tsv(const Dataset& dataset, const std::string& path);
std::string to_tsv(const Dataset& dataset);

LabelSpace build_label_space(const Dataset& train);
LabelSpace build_label_space(const std::vector<const Document*>& train_docs);

FoldPlan make_folds(const std::vector<std::string>& fulltext_ids, int k, std::uint64_t seed);

LadderSplit assemble_ladder(int fold, Multiplier multiplier, const Dataset& titles, const Dataset& fulltexts,
                            const FoldPlan& plan, double val_fraction = 0.2, std::uint64_t seed = 0);

struct DatasetStats {
    std::size_t n_documents = 0;
    std::size_t n_labels = 0;
    double docs_per_label = 0.0;
    double labels_per_doc = 0.0;
    std::size_t vocab_size = 0;
    double words_per_doc = 0.0;
};

using TokenizeFn = std::function<std::vector<std::string>(const std::string&)>;

DatasetStats dataset_stats(const Dataset& dataset, const LabelSpace& labels, const TokenizeFn& tokenize);

struct SynthConfig {
    int n_fulltext = 64;
    int title_multiplier = 4;
    int n_labels = 10;
    std::uint64_t seed = 0;
};

// Desk-scale stand-in corpus with planted label keywords: every document's
// title mentions one keyword per assigned label; the full-text repeats the
// title plus noise tokens, so full-text strictly contains the title signal.
std::pair<Dataset, Dataset> synth_generate(const SynthConfig& cfg);  // (titles, fulltexts)

}  // namespace deepindex::corpus
