#include "deepindex/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace deepindex::corpus {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

const Document* Dataset::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &documents[it->second];
}

void Dataset::rebuild_index() {
    index_.clear();
    index_.reserve(documents.size());
    for (std::size_t i = 0; i < documents.size(); ++i) index_.emplace(documents[i].id, i);
}

LabelSpace::LabelSpace(std::vector<std::string> ordered_labels) : labels_(std::move(ordered_labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (!index_.emplace(labels_[i], static_cast<int>(i)).second)
            throw Error("duplicate label in label space: " + labels_[i]);
    }
}

std::optional<int> LabelSpace::index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& LabelSpace::label_of(int index) const {
    if (index < 0 || index >= size()) throw Error("label index out of range: " + std::to_string(index));
    return labels_[static_cast<std::size_t>(index)];
}

std::vector<std::string> FoldPlan::ids_in_fold(int fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of)
        if (f == fold) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::string multiplier_name(Multiplier m) {
    switch (m) {
        case Multiplier::x1: return "x1";
        case Multiplier::x2: return "x2";
        case Multiplier::x4: return "x4";
        case Multiplier::x8: return "x8";
        case Multiplier::all: return "all";
    }
    throw Error("unknown multiplier");
}

Multiplier multiplier_from_name(const std::string& name) {
    if (name == "1" || name == "x1") return Multiplier::x1;
    if (name == "2" || name == "x2") return Multiplier::x2;
    if (name == "4" || name == "x4") return Multiplier::x4;
    if (name == "8" || name == "x8") return Multiplier::x8;
    if (name == "all") return Multiplier::all;
    throw ConfigError("unknown multiplier \"" + name + "\" (expected 1, 2, 4, 8 or all)");
}

int multiplier_factor(Multiplier m) {
    switch (m) {
        case Multiplier::x1: return 1;
        case Multiplier::x2: return 2;
        case Multiplier::x4: return 4;
        case Multiplier::x8: return 8;
        case Multiplier::all: return 0;
    }
    throw Error("unknown multiplier");
}

Dataset load_tsv(const std::string& path, Provenance provenance) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open dataset file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    const std::string content = buf.str();

    Dataset ds;
    ds.provenance = provenance;
    std::set<std::string> seen;
    std::size_t line_no = 0, start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        const std::string line = content.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;

        const auto cols = split(line, '\t');
        if (cols.size() != 3)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 3 TAB-separated columns, got " +
                             std::to_string(cols.size()));
        Document doc;
        doc.id = cols[0];
        doc.text = cols[1];
        doc.has_fulltext = provenance == Provenance::fulltext;
        if (doc.id.empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty document id");
        if (trim(doc.text).empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty text for document " + doc.id);
        if (trim(cols[2]).empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty label field for document " + doc.id);
        for (const auto& raw : split(cols[2], ',')) {
            const std::string label = trim(raw);
            if (label.empty())
                throw ParseError(path + ":" + std::to_string(line_no) + ": empty label for document " + doc.id);
            doc.labels.push_back(label);
        }
        sort_unique(doc.labels);
        if (!seen.insert(doc.id).second)
            throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate document id \"" + doc.id + "\"");
        ds.documents.push_back(std::move(doc));
    }
    ds.rebuild_index();
    return ds;
}

std::string to_tsv(const Dataset& dataset) {
    std::string out;
    for (const auto& doc : dataset.documents) {
        out += doc.id;
        out += '\t';
        out += doc.text;
        out += '\t';
        for (std::size_t i = 0; i < doc.labels.size(); ++i) {
            if (i) out += ',';
            out += doc.labels[i];
        }
        out += '\n';
    }
    return out;
}

void write_tsv(const Dataset& dataset, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write dataset file: " + path);
    os << to_tsv(dataset);
}

LabelSpace build_label_space(const std::vector<const Document*>& train_docs) {
    if (train_docs.empty()) throw Error("cannot build a label space from an empty training split");
    std::map<std::string, std::int64_t> df;
    for (const auto* doc : train_docs)
        for (const auto& l : doc->labels) ++df[l];
    std::vector<std::pair<std::string, std::int64_t>> entries(df.begin(), df.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(entries.size());
    for (auto& [label, _] : entries) ordered.push_back(label);
    return LabelSpace(std::move(ordered));
}

LabelSpace build_label_space(const Dataset& train) {
    std::vector<const Document*> docs;
    docs.reserve(train.size());
    for (const auto& d : train.documents) docs.push_back(&d);
    return build_label_space(docs);
}

FoldPlan make_folds(const std::vector<std::string>& fulltext_ids, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be >= 2, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > fulltext_ids.size())
        throw ConfigError("fold count " + std::to_string(k) + " exceeds document count " +
                          std::to_string(fulltext_ids.size()));
    std::vector<std::string> ids = fulltext_ids;
    sort_unique(ids);
    if (ids.size() != fulltext_ids.size()) throw Error("duplicate ids passed to make_folds");

    std::mt19937_64 rng(seed);
    seeded_shuffle(ids, rng);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    const std::size_t n = ids.size();
    const std::size_t base = n / static_cast<std::size_t>(k), rem = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t len = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
        for (std::size_t i = 0; i < len; ++i) plan.fold_of.emplace(ids[pos++], f);
    }
    return plan;
}

LadderSplit assemble_ladder(int fold, Multiplier multiplier, const Dataset& titles, const Dataset& fulltexts,
                            const FoldPlan& plan, double val_fraction, std::uint64_t seed) {
    if (fold < 0 || fold >= plan.k) throw ConfigError("fold " + std::to_string(fold) + " outside plan of k=" + std::to_string(plan.k));
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("validation fraction must be in [0,1), got " + std::to_string(val_fraction));
    for (const auto& doc : fulltexts.documents)
        if (!titles.find(doc.id)) throw Error("full-text document " + doc.id + " has no title counterpart");

    std::vector<std::string> test_ids, base_pool;
    for (const auto& doc : fulltexts.documents) {
        auto it = plan.fold_of.find(doc.id);
        if (it == plan.fold_of.end()) throw Error("full-text document " + doc.id + " missing from fold plan");
        (it->second == fold ? test_ids : base_pool).push_back(doc.id);
    }
    sort_unique(test_ids);
    sort_unique(base_pool);

    std::vector<std::string> title_only;
    for (const auto& doc : titles.documents)
        if (!fulltexts.find(doc.id)) title_only.push_back(doc.id);
    sort_unique(title_only);

    std::vector<std::string> pool = base_pool;
    if (multiplier != Multiplier::x1) {
        // one shuffle shared by every multiplier so the ladder pools nest
        std::mt19937_64 extra_rng(mix_seed(seed, 0xadd));
        seeded_shuffle(title_only, extra_rng);
        std::size_t take;
        if (multiplier == Multiplier::all) {
            take = title_only.size();
        } else {
            const auto x = static_cast<std::size_t>(multiplier_factor(multiplier));
            take = (x - 1) * base_pool.size();
            if (take > title_only.size()) {
                const std::size_t max_x = 1 + title_only.size() / std::max<std::size_t>(base_pool.size(), 1);
                throw ConfigError("multiplier " + multiplier_name(multiplier) + " needs " + std::to_string(take) +
                                  " title-only documents but only " + std::to_string(title_only.size()) +
                                  " are available; maximum achievable multiplier is " + std::to_string(max_x));
            }
        }
        pool.insert(pool.end(), title_only.begin(), title_only.begin() + static_cast<std::ptrdiff_t>(take));
    }

    // validation carve-out, re-drawn per fold with a fold-derived seed
    std::mt19937_64 val_rng(mix_seed(seed, static_cast<std::uint64_t>(fold) + 1));
    std::vector<std::string> shuffled = pool;
    std::sort(shuffled.begin(), shuffled.end());
    seeded_shuffle(shuffled, val_rng);
    std::size_t n_val = static_cast<std::size_t>(std::llround(static_cast<double>(pool.size()) * val_fraction));
    if (n_val >= pool.size()) n_val = pool.size() == 0 ? 0 : pool.size() - 1;

    LadderSplit out;
    out.multiplier = multiplier;
    out.fold_index = fold;
    out.test_ids = std::move(test_ids);
    out.val_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_val), shuffled.end());
    std::sort(out.val_ids.begin(), out.val_ids.end());
    std::sort(out.train_ids.begin(), out.train_ids.end());
    return out;
}

DatasetStats dataset_stats(const Dataset& dataset, const LabelSpace& labels, const TokenizeFn& tokenize) {
    DatasetStats st;
    st.n_documents = dataset.size();
    st.n_labels = static_cast<std::size_t>(labels.size());
    std::int64_t assignments = 0, words = 0;
    std::set<std::string> vocab;
    for (const auto& doc : dataset.documents) {
        assignments += static_cast<std::int64_t>(doc.labels.size());
        if (tokenize) {
            for (auto& tok : tokenize(doc.text)) {
                ++words;
                vocab.insert(std::move(tok));
            }
        }
    }
    if (st.n_labels > 0) st.docs_per_label = static_cast<double>(assignments) / static_cast<double>(st.n_labels);
    if (st.n_documents > 0) {
        st.labels_per_doc = static_cast<double>(assignments) / static_cast<double>(st.n_documents);
        st.words_per_doc = static_cast<double>(words) / static_cast<double>(st.n_documents);
    }
    st.vocab_size = vocab.size();
    return st;
}

std::pair<Dataset, Dataset> synth_generate(const SynthConfig& cfg) {
    if (cfg.n_fulltext <= 0 || cfg.title_multiplier <= 0 || cfg.n_labels <= 0)
        throw ConfigError("synth_generate: all counts must be positive");

    const int n_titles = cfg.n_fulltext * cfg.title_multiplier;
    static const std::vector<std::string> fillers = {"study",  "analysis", "evidence", "approach",
                                                     "survey", "effects",  "review",   "notes"};
    static const std::vector<std::string> noise = {"method", "table",   "result", "section", "figure",
                                                   "sample", "appendix", "model",  "data",    "discussion"};

    auto label_name = [](int i) {
        std::ostringstream os;
        os << "topic" << (i < 10 ? "0" : "") << i;
        return os.str();
    };
    auto keyword = [](int i) {
        std::ostringstream os;
        os << "kw" << (i < 10 ? "0" : "") << i;
        return os.str();
    };

    Dataset titles, fulltexts;
    titles.provenance = Provenance::title;
    fulltexts.provenance = Provenance::fulltext;

    for (int i = 0; i < n_titles; ++i) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        std::ostringstream id;
        id << "d" << i / 100000 << (i / 10000) % 10 << (i / 1000) % 10 << (i / 100) % 10 << (i / 10) % 10 << i % 10;

        std::vector<int> label_ids = {i % cfg.n_labels};  // round-robin keeps every label planted
        const int extra = static_cast<int>(bounded(rng, 3));
        for (int e = 0; e < extra; ++e) {
            const int l = static_cast<int>(bounded(rng, static_cast<std::size_t>(cfg.n_labels)));
            if (std::find(label_ids.begin(), label_ids.end(), l) == label_ids.end()) label_ids.push_back(l);
        }
        std::sort(label_ids.begin(), label_ids.end());

        // each keyword is followed by a label-tied connective, so unigram and
        // bigram features alike carry clean single-label signal
        std::ostringstream text;
        bool first = true;
        for (int l : label_ids) {
            if (!first) text << " ";
            text << keyword(l) << " " << fillers[static_cast<std::size_t>(l) % fillers.size()];
            first = false;
        }

        Document doc;
        doc.id = id.str();
        doc.text = text.str();
        for (int l : label_ids) doc.labels.push_back(label_name(l));
        doc.has_fulltext = i < cfg.n_fulltext;
        if (doc.has_fulltext) {
            Document full = doc;
            std::ostringstream body;
            body << doc.text;
            for (int ntok = 0; ntok < 20; ++ntok) body << " " << noise[bounded(rng, noise.size())];
            full.text = body.str();
            fulltexts.documents.push_back(std::move(full));
        }
        titles.documents.push_back(std::move(doc));
    }

    // generator self-check: each planted label's keyword occurs in one of its titles
    for (int l = 0; l < cfg.n_labels; ++l) {
        const std::string name = label_name(l), kw = keyword(l);
        bool planted = false, found = false;
        for (const auto& doc : titles.documents) {
            if (std::find(doc.labels.begin(), doc.labels.end(), name) == doc.labels.end()) continue;
            planted = true;
            if (doc.text.find(kw) != std::string::npos) {
                found = true;
                break;
            }
        }
        if (planted && !found) throw Error("synth_generate self-check failed for label " + name);
    }

    titles.rebuild_index();
    fulltexts.rebuild_index();
    return {std::move(titles), std::move(fulltexts)};
}

}  // namespace deepindex::corpus
