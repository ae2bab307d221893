#include "deepindex/models.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace deepindex::models {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::BaseMlp: return "base-mlp";
        case Variant::Mlp: return "mlp";
        case Variant::Cnn: return "cnn";
        case Variant::Lstm: return "lstm";
    }
    throw Error("unknown model variant");
}

Variant variant_from_name(const std::string& name) {
    if (name == "base-mlp") return Variant::BaseMlp;
    if (name == "mlp") return Variant::Mlp;
    if (name == "cnn") return Variant::Cnn;
    if (name == "lstm") return Variant::Lstm;
    throw ConfigError("unknown model \"" + name + "\" (expected base-mlp, mlp, cnn or lstm)");
}

std::vector<std::string> preset_names() {
    return {"econbiz-title", "econbiz-full", "pubmed-title", "pubmed-full"};
}

double apply_preset(ModelConfig& cfg, const std::string& preset) {
    const bool titles = preset == "econbiz-title" || preset == "pubmed-title";
    const bool econbiz = preset == "econbiz-title" || preset == "econbiz-full";
    if (!titles && preset != "econbiz-full" && preset != "pubmed-full")
        throw ConfigError("unknown preset \"" + preset + "\"");

    cfg.base_hidden = 1000;
    cfg.base_keep_prob = 0.5;
    if (preset == "pubmed-title") {
        cfg.mlp_layers = 2;
        cfg.mlp_hidden = 1000;
        cfg.mlp_batchnorm = true;
        cfg.mlp_keep_prob = 1.0;
    } else {
        cfg.mlp_layers = 1;
        cfg.mlp_hidden = 2000;
        cfg.mlp_batchnorm = false;
        cfg.mlp_keep_prob = 0.5;
    }

    cfg.cnn_windows = {2, 3, 4, 5, 8};
    cfg.cnn_chunks = titles ? 1 : 3;
    cfg.cnn_bottleneck = titles ? 500 : 1000;
    cfg.cnn_feature_maps = preset == "pubmed-full" ? 100 : 400;
    cfg.cnn_keep_prob = 0.75;

    cfg.lstm_hidden = titles ? 1536 : (econbiz ? 512 : 1024);
    cfg.lstm_keep_prob = preset == "pubmed-title" ? 0.5 : 0.75;

    if (cfg.variant == Variant::Lstm && preset == "econbiz-full") return 0.01;
    return 0.001;
}

int FeatureBatch::size() const {
    if (sparse) return sparse->n_rows();
    if (sequences) return static_cast<int>(sequences->size());
    return 0;
}

Model::Model(ModelConfig cfg)
    : cfg_(std::move(cfg)), init_rng_(mix_seed(cfg_.seed, 0x1417)), dropout_rng_(mix_seed(cfg_.seed, 0xd409)) {
    if (cfg_.n_labels <= 0) throw ConfigError("model requires a positive label count");
}

TensorPtr Model::add_param(const std::string& name, Shape shape) {
    for (const auto& p : params_)
        if (p.name == name) throw Error("duplicate parameter name: " + name);
    auto t = Tensor::make(std::move(shape), 0.0, true);
    params_.push_back({name, t});
    return t;
}

TensorPtr Model::add_buffer(const std::string& name, Shape shape, double fill) {
    auto t = Tensor::make(std::move(shape), fill, false);
    buffers_.push_back({name, t});
    return t;
}

void Model::glorot_init(const TensorPtr& w, int fan_in, int fan_out) {
    uniform_init(w, std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out))));
}

void Model::uniform_init(const TensorPtr& w, double limit) {
    for (auto& v : w->data()) v = uniform(init_rng_, -limit, limit);
}

void Model::orthogonal_blocks_init(const TensorPtr& w, int h) {
    // modified Gram-Schmidt on a gaussian h x h matrix, one block per gate
    for (int block = 0; block < 4; ++block) {
        std::vector<std::vector<double>> cols(static_cast<std::size_t>(h), std::vector<double>(static_cast<std::size_t>(h)));
        for (auto& col : cols) {
            for (auto& v : col) v = gaussian(init_rng_);
        }
        for (std::size_t c = 0; c < cols.size(); ++c) {
            for (std::size_t prev = 0; prev < c; ++prev) {
                double dot = 0.0;
                for (int r = 0; r < h; ++r) dot += cols[c][static_cast<std::size_t>(r)] * cols[prev][static_cast<std::size_t>(r)];
                for (int r = 0; r < h; ++r) cols[c][static_cast<std::size_t>(r)] -= dot * cols[prev][static_cast<std::size_t>(r)];
            }
            double norm = 0.0;
            for (int r = 0; r < h; ++r) norm += cols[c][static_cast<std::size_t>(r)] * cols[c][static_cast<std::size_t>(r)];
            norm = std::sqrt(norm);
            if (norm < 1e-10) {  // degenerate draw, fall back to a unit vector
                std::fill(cols[c].begin(), cols[c].end(), 0.0);
                cols[c][c % static_cast<std::size_t>(h)] = 1.0;
            } else {
                for (int r = 0; r < h; ++r) cols[c][static_cast<std::size_t>(r)] /= norm;
            }
        }
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < h; ++c) w->at(r, block * h + c) = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    }
}

std::vector<Parameter> Model::named_state() const {
    std::vector<Parameter> out = params_;
    out.insert(out.end(), buffers_.begin(), buffers_.end());
    return out;
}

void Model::load_state(const std::vector<Parameter>& state) {
    std::unordered_map<std::string, const Parameter*> by_name;
    for (const auto& p : state) by_name.emplace(p.name, &p);
    auto restore = [&](Parameter& dst) {
        auto it = by_name.find(dst.name);
        if (it == by_name.end()) throw Error("checkpoint is missing tensor \"" + dst.name + "\"");
        const auto& src = *it->second->value;
        if (src.shape() != dst.value->shape())
            throw Error("checkpoint shape mismatch for \"" + dst.name + "\": " + shape_str(src.shape()) + " vs " +
                        shape_str(dst.value->shape()));
        dst.value->data() = src.data();
    };
    for (auto& p : params_) restore(p);
    for (auto& b : buffers_) restore(b);
}

void Model::zero_grad() {
    for (auto& p : params_) p.value->zero_grad();
}

ForwardResult Model::empty_result() const {
    auto logits = Tensor::make({0, cfg_.n_labels});
    auto probs = Tensor::make({0, cfg_.n_labels});
    return {logits, probs};
}

TensorPtr Model::output_layer(Tape& tape, const TensorPtr& hidden, const TensorPtr& w, const TensorPtr& b) {
    return ops::add_bias(tape, ops::matmul(tape, hidden, w), b);
}

namespace {

const SparseMatrix& require_sparse(const FeatureBatch& batch, Variant v) {
    if (!batch.sparse)
        throw Error(variant_name(v) + " expects TF-IDF features, but the batch carries token sequences");
    return *batch.sparse;
}

const std::vector<features::TokenSequence>& require_sequences(const FeatureBatch& batch, Variant v) {
    if (!batch.sequences)
        throw Error(variant_name(v) + " expects token sequences, but the batch carries TF-IDF features");
    return *batch.sequences;
}

// drop trailing pad ids so physically padded inputs behave like unpadded ones
std::vector<int> effective_ids(const features::TokenSequence& seq) {
    std::vector<int> ids = seq.ids;
    while (!ids.empty() && ids.back() < 0) ids.pop_back();
    return ids;
}

class BaseMlpModel final : public Model {
public:
    explicit BaseMlpModel(const ModelConfig& cfg) : Model(cfg) {
        if (cfg_.input_dim <= 0) throw ConfigError("base-mlp requires input_dim");
        w1_ = add_param("hidden.w", {cfg_.input_dim, cfg_.base_hidden});
        b1_ = add_param("hidden.b", {cfg_.base_hidden});
        wo_ = add_param("output.w", {cfg_.base_hidden, cfg_.n_labels});
        bo_ = add_param("output.b", {cfg_.n_labels});
        glorot_init(w1_, cfg_.input_dim, cfg_.base_hidden);
        glorot_init(wo_, cfg_.base_hidden, cfg_.n_labels);
    }

    ForwardResult forward(Tape& tape, const FeatureBatch& batch, bool train) override {
        const auto& x = require_sparse(batch, cfg_.variant);
        if (x.n_rows() == 0) return empty_result();
        auto h = ops::relu(tape, ops::add_bias(tape, ops::sparse_matmul(tape, x, w1_), b1_));
        h = ops::dropout(tape, h, cfg_.base_keep_prob, train, dropout_rng_);
        auto logits = output_layer(tape, h, wo_, bo_);
        return {logits, ops::sigmoid(tape, logits)};
    }

private:
    TensorPtr w1_, b1_, wo_, bo_;
};

class MlpModel final : public Model {
public:
    explicit MlpModel(const ModelConfig& cfg) : Model(cfg) {
        if (cfg_.input_dim <= 0) throw ConfigError("mlp requires input_dim");
        if (cfg_.mlp_layers < 1) throw ConfigError("mlp requires at least one hidden layer");
        int in = cfg_.input_dim;
        for (int l = 0; l < cfg_.mlp_layers; ++l) {
            const std::string tag = "hidden" + std::to_string(l + 1);
            auto w = add_param(tag + ".w", {in, cfg_.mlp_hidden});
            auto b = add_param(tag + ".b", {cfg_.mlp_hidden});
            glorot_init(w, in, cfg_.mlp_hidden);
            ws_.push_back(w);
            bs_.push_back(b);
            if (cfg_.mlp_batchnorm) {
                auto gamma = add_param(tag + ".bn.gamma", {cfg_.mlp_hidden});
                std::fill(gamma->data().begin(), gamma->data().end(), 1.0);
                bn_gamma_.push_back(gamma);
                bn_beta_.push_back(add_param(tag + ".bn.beta", {cfg_.mlp_hidden}));
                bn_mean_.push_back(add_buffer(tag + ".bn.running_mean", {cfg_.mlp_hidden}, 0.0));
                bn_var_.push_back(add_buffer(tag + ".bn.running_var", {cfg_.mlp_hidden}, 1.0));
            }
            in = cfg_.mlp_hidden;
        }
        wo_ = add_param("output.w", {in, cfg_.n_labels});
        bo_ = add_param("output.b", {cfg_.n_labels});
        glorot_init(wo_, in, cfg_.n_labels);
    }

    bool uses_batchnorm() const override { return cfg_.mlp_batchnorm; }

    ForwardResult forward(Tape& tape, const FeatureBatch& batch, bool train) override {
        const auto& x = require_sparse(batch, cfg_.variant);
        if (x.n_rows() == 0) return empty_result();
        TensorPtr h;
        for (std::size_t l = 0; l < ws_.size(); ++l) {
            h = l == 0 ? ops::sparse_matmul(tape, x, ws_[l]) : ops::matmul(tape, h, ws_[l]);
            h = ops::add_bias(tape, h, bs_[l]);
            if (cfg_.mlp_batchnorm)
                h = ops::batchnorm1d(tape, h, bn_gamma_[l], bn_beta_[l], bn_mean_[l], bn_var_[l], 0.9, train);
            h = ops::relu(tape, h);
            if (cfg_.mlp_keep_prob < 1.0) h = ops::dropout(tape, h, cfg_.mlp_keep_prob, train, dropout_rng_);
        }
        auto logits = output_layer(tape, h, wo_, bo_);
        return {logits, ops::sigmoid(tape, logits)};
    }

private:
    std::vector<TensorPtr> ws_, bs_, bn_gamma_, bn_beta_, bn_mean_, bn_var_;
    TensorPtr wo_, bo_;
};

class CnnModel final : public Model {
public:
    CnnModel(const ModelConfig& cfg, const features::EmbeddingTable& emb) : Model(cfg) {
        if (emb.vocab_size() == 0) throw ConfigError("cnn requires a non-empty embedding table");
        cfg_.vocab_size = emb.vocab_size();
        cfg_.embedding_dim = emb.dim;
        if (cfg_.cnn_windows.empty()) throw ConfigError("cnn requires at least one window size");
        max_window_ = *std::max_element(cfg_.cnn_windows.begin(), cfg_.cnn_windows.end());

        embedding_ = add_param("embedding", {cfg_.vocab_size, cfg_.embedding_dim});
        embedding_->data() = emb.matrix;

        const int f = cfg_.cnn_feature_maps;
        for (int w : cfg_.cnn_windows) {
            const std::string tag = "conv_w" + std::to_string(w);
            auto filt = add_param(tag + ".filters", {w, cfg_.embedding_dim, f});
            glorot_init(filt, w * cfg_.embedding_dim, f);
            filters_.push_back(filt);
            auto bias = add_param(tag + ".bias", {f});
            // slightly positive so windows that see only pad rows do not sit
            // exactly on the relu kink
            std::fill(bias->data().begin(), bias->data().end(), 0.01);
            conv_bias_.push_back(bias);
        }
        const int concat_dim = static_cast<int>(cfg_.cnn_windows.size()) * cfg_.cnn_chunks * f;
        wb_ = add_param("bottleneck.w", {concat_dim, cfg_.cnn_bottleneck});
        bb_ = add_param("bottleneck.b", {cfg_.cnn_bottleneck});
        glorot_init(wb_, concat_dim, cfg_.cnn_bottleneck);
        wo_ = add_param("output.w", {cfg_.cnn_bottleneck, cfg_.n_labels});
        bo_ = add_param("output.b", {cfg_.n_labels});
        glorot_init(wo_, cfg_.cnn_bottleneck, cfg_.n_labels);
    }

    ForwardResult forward(Tape& tape, const FeatureBatch& batch, bool train) override {
        const auto& seqs = require_sequences(batch, cfg_.variant);
        if (seqs.empty()) return empty_result();
        std::vector<TensorPtr> rows;
        rows.reserve(seqs.size());
        for (const auto& seq : seqs) {
            auto ids = effective_ids(seq);
            // pad so every window has >= p valid positions; pooling never sees
            // positions beyond this length, keeping extra padding inert
            const int t_eff = std::max<int>(static_cast<int>(ids.size()), max_window_ + cfg_.cnn_chunks - 1);
            ids.resize(static_cast<std::size_t>(t_eff), -1);
            auto emb = ops::embedding_lookup(tape, embedding_, ids);
            std::vector<TensorPtr> pooled;
            pooled.reserve(filters_.size());
            for (std::size_t wi = 0; wi < filters_.size(); ++wi) {
                auto conv = ops::relu(tape, ops::conv1d(tape, emb, filters_[wi], conv_bias_[wi]));
                pooled.push_back(ops::flatten_to_row(tape, ops::chunked_maxpool(tape, conv, cfg_.cnn_chunks)));
            }
            auto cat = ops::concat_cols(tape, pooled);
            auto hid = ops::relu(tape, ops::add_bias(tape, ops::matmul(tape, cat, wb_), bb_));
            hid = ops::dropout(tape, hid, cfg_.cnn_keep_prob, train, dropout_rng_);
            rows.push_back(output_layer(tape, hid, wo_, bo_));
        }
        auto logits = ops::concat_rows(tape, rows);
        return {logits, ops::sigmoid(tape, logits)};
    }

private:
    int max_window_ = 8;
    TensorPtr embedding_, wb_, bb_, wo_, bo_;
    std::vector<TensorPtr> filters_, conv_bias_;
};

class LstmModel final : public Model {
public:
    LstmModel(const ModelConfig& cfg, const features::EmbeddingTable& emb) : Model(cfg) {
        if (emb.vocab_size() == 0) throw ConfigError("lstm requires a non-empty embedding table");
        cfg_.vocab_size = emb.vocab_size();
        cfg_.embedding_dim = emb.dim;
        if (cfg_.attention_dim <= 0) cfg_.attention_dim = 2 * cfg_.lstm_hidden;

        embedding_ = add_param("embedding", {cfg_.vocab_size, cfg_.embedding_dim});
        embedding_->data() = emb.matrix;

        fwd_ = make_cell("lstm_fwd");
        bwd_ = make_cell("lstm_bwd");

        const int h2 = 2 * cfg_.lstm_hidden, a = cfg_.attention_dim;
        wa_ = add_param("attention.w", {h2, a});
        ba_ = add_param("attention.b", {a});
        ctx_ = add_param("attention.ctx", {a, 1});
        glorot_init(wa_, h2, a);
        uniform_init(ctx_, 0.05);
        wo_ = add_param("output.w", {h2, cfg_.n_labels});
        bo_ = add_param("output.b", {cfg_.n_labels});
        glorot_init(wo_, h2, cfg_.n_labels);
    }

    void enable_attention_trace(bool on) override { trace_ = on ? std::make_unique<AttentionTrace>() : nullptr; }
    const AttentionTrace* attention_trace() const override { return trace_.get(); }

    ForwardResult forward(Tape& tape, const FeatureBatch& batch, bool train) override {
        const auto& seqs = require_sequences(batch, cfg_.variant);
        if (trace_) *trace_ = AttentionTrace{};
        if (seqs.empty()) return empty_result();
        const int h = cfg_.lstm_hidden;
        std::vector<TensorPtr> rows;
        rows.reserve(seqs.size());
        for (const auto& seq : seqs) {
            auto ids = effective_ids(seq);
            if (ids.empty()) ids.push_back(-1);  // empty sequence attends to the pad row
            const int t = static_cast<int>(ids.size());
            auto emb = ops::embedding_lookup(tape, embedding_, ids);

            std::vector<TensorPtr> hf(static_cast<std::size_t>(t)), hb(static_cast<std::size_t>(t));
            TensorPtr hs = Tensor::make({1, h}), cs = Tensor::make({1, h});
            for (int step = 0; step < t; ++step) {
                auto [ho, co] = ops::lstm_cell(tape, ops::slice_rows(tape, emb, step, 1), hs, cs, fwd_);
                hf[static_cast<std::size_t>(step)] = ho;
                hs = ho;
                cs = co;
            }
            hs = Tensor::make({1, h});
            cs = Tensor::make({1, h});
            for (int step = t - 1; step >= 0; --step) {
                auto [ho, co] = ops::lstm_cell(tape, ops::slice_rows(tape, emb, step, 1), hs, cs, bwd_);
                hb[static_cast<std::size_t>(step)] = ho;
                hs = ho;
                cs = co;
            }
            std::vector<TensorPtr> steps(static_cast<std::size_t>(t));
            for (int step = 0; step < t; ++step)
                steps[static_cast<std::size_t>(step)] =
                    ops::concat_cols(tape, {hf[static_cast<std::size_t>(step)], hb[static_cast<std::size_t>(step)]});
            auto outputs = ops::concat_rows(tape, steps);  // t x 2h

            auto u = ops::tanh_act(tape, ops::add_bias(tape, ops::matmul(tape, outputs, wa_), ba_));
            auto weights = ops::softmax_rows(tape, ops::transpose(tape, ops::matmul(tape, u, ctx_)));  // 1 x t
            auto s = ops::matmul(tape, weights, outputs);  // 1 x 2h
            if (trace_) {
                trace_->weights.push_back(weights->data());
                trace_->step_rows.push_back(outputs->data());
                trace_->step_counts.push_back(t);
            }
            s = ops::dropout(tape, s, cfg_.lstm_keep_prob, train, dropout_rng_);
            rows.push_back(output_layer(tape, s, wo_, bo_));
        }
        auto logits = ops::concat_rows(tape, rows);
        return {logits, ops::sigmoid(tape, logits)};
    }

private:
    ops::LstmWeights make_cell(const std::string& tag) {
        const int d = cfg_.embedding_dim, h = cfg_.lstm_hidden;
        ops::LstmWeights w;
        w.hidden = h;
        w.w_x = add_param(tag + ".w_x", {d, 4 * h});
        w.w_h = add_param(tag + ".w_h", {h, 4 * h});
        w.bias = add_param(tag + ".bias", {4 * h});
        glorot_init(w.w_x, d, h);
        orthogonal_blocks_init(w.w_h, h);
        for (int j = 0; j < h; ++j) w.bias->data()[static_cast<std::size_t>(h + j)] = 1.0;  // forget gate
        if (cfg_.lstm_peepholes) {
            w.p_i = add_param(tag + ".p_i", {h});
            w.p_f = add_param(tag + ".p_f", {h});
            w.p_o = add_param(tag + ".p_o", {h});
            uniform_init(w.p_i, 0.05);
            uniform_init(w.p_f, 0.05);
            uniform_init(w.p_o, 0.05);
        }
        return w;
    }

    TensorPtr embedding_, wa_, ba_, ctx_, wo_, bo_;
    ops::LstmWeights fwd_, bwd_;
    std::unique_ptr<AttentionTrace> trace_;
};

}  // namespace

std::unique_ptr<Model> build_base_mlp(const ModelConfig& cfg) {
    ModelConfig c = cfg;
    c.variant = Variant::BaseMlp;
    return std::make_unique<BaseMlpModel>(c);
}

std::unique_ptr<Model> build_mlp(const ModelConfig& cfg) {
    ModelConfig c = cfg;
    c.variant = Variant::Mlp;
    return std::make_unique<MlpModel>(c);
}

std::unique_ptr<Model> build_cnn(const ModelConfig& cfg, const features::EmbeddingTable& embeddings) {
    ModelConfig c = cfg;
    c.variant = Variant::Cnn;
    return std::make_unique<CnnModel>(c, embeddings);
}

std::unique_ptr<Model> build_lstm(const ModelConfig& cfg, const features::EmbeddingTable& embeddings) {
    ModelConfig c = cfg;
    c.variant = Variant::Lstm;
    return std::make_unique<LstmModel>(c, embeddings);
}

std::unique_ptr<Model> build_model(const ModelConfig& cfg, const features::EmbeddingTable* embeddings) {
    switch (cfg.variant) {
        case Variant::BaseMlp: return build_base_mlp(cfg);
        case Variant::Mlp: return build_mlp(cfg);
        case Variant::Cnn:
            if (!embeddings) throw ConfigError("cnn requires an embedding table");
            return build_cnn(cfg, *embeddings);
        case Variant::Lstm:
            if (!embeddings) throw ConfigError("lstm requires an embedding table");
            return build_lstm(cfg, *embeddings);
    }
    throw Error("unknown model variant");
}

}  // namespace deepindex::models
