#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "deepindex/features.hpp"
#include "deepindex/ops.hpp"
#include "deepindex/sparse.hpp"
#include "deepindex/tensor.hpp"

namespace deepindex::models {

enum class Variant { BaseMlp, Mlp, Cnn, Lstm };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    Variant variant = Variant::Mlp;
    int n_labels = 0;
    std::uint64_t seed = 0;

    // bag-of-ngrams models
    int input_dim = 0;  // TF-IDF feature dimension
    int base_hidden = 1000;
    double base_keep_prob = 0.5;
    int mlp_hidden = 2000;
    int mlp_layers = 1;
    bool mlp_batchnorm = false;
    double mlp_keep_prob = 0.5;  // 1.0 disables dropout

    // sequence models
    int vocab_size = 0;  // embedding rows
    int embedding_dim = 300;
    int max_seq_len = 250;

    std::vector<int> cnn_windows = {2, 3, 4, 5, 8};
    int cnn_feature_maps = 400;
    int cnn_chunks = 1;  // p
    int cnn_bottleneck = 500;
    double cnn_keep_prob = 0.75;

    int lstm_hidden = 1536;
    double lstm_keep_prob = 0.75;
    bool lstm_peepholes = false;
    int attention_dim = 0;  // 0 -> 2 * lstm_hidden
};

// Named hyperparameter presets; `preset` is one of econbiz-title,
// econbiz-full, pubmed-title, pubmed-full. Returns the matching initial
// learning rate for (variant, preset).
double apply_preset(ModelConfig& cfg, const std::string& preset);
std::vector<std::string> preset_names();

struct FeatureBatch {
    const SparseMatrix* sparse = nullptr;
    const std::vector<features::TokenSequence>* sequences = nullptr;

    int size() const;
};

struct ForwardResult {
    TensorPtr logits;  // n x |L|
    TensorPtr probs;   // sigmoid(logits)
};

// Test/analysis hook for the attention aggregation.
struct AttentionTrace {
    // per sample: softmax weights over steps, and the step output matrix (T x 2h, row-major)
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> step_rows;
    std::vector<int> step_counts;
};

class Model {
public:
    explicit Model(ModelConfig cfg);
    virtual ~Model() = default;

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    const std::vector<Parameter>& buffers() const { return buffers_; }

    // parameters + buffers; what checkpoints persist
    std::vector<Parameter> named_state() const;
    void load_state(const std::vector<Parameter>& state);
    void zero_grad();

    virtual ForwardResult forward(Tape& tape, const FeatureBatch& batch, bool train) = 0;
    virtual bool uses_batchnorm() const { return false; }

    virtual void enable_attention_trace(bool) {}
    virtual const AttentionTrace* attention_trace() const { return nullptr; }

protected:
    TensorPtr add_param(const std::string& name, Shape shape);
    TensorPtr add_buffer(const std::string& name, Shape shape, double fill);
    void glorot_init(const TensorPtr& w, int fan_in, int fan_out);
    void uniform_init(const TensorPtr& w, double limit);
    void orthogonal_blocks_init(const TensorPtr& w, int h);  // h x 4h as four h x h blocks

    ForwardResult empty_result() const;
    TensorPtr output_layer(Tape& tape, const TensorPtr& hidden, const TensorPtr& w, const TensorPtr& b);

    ModelConfig cfg_;
    std::vector<Parameter> params_;
    std::vector<Parameter> buffers_;
    std::mt19937_64 init_rng_;
    std::mt19937_64 dropout_rng_;
};

std::unique_ptr<Model> build_base_mlp(const ModelConfig& cfg);
std::unique_ptr<Model> build_mlp(const ModelConfig& cfg);
std::unique_ptr<Model> build_cnn(const ModelConfig& cfg, const features::EmbeddingTable& embeddings);
std::unique_ptr<Model> build_lstm(const ModelConfig& cfg, const features::EmbeddingTable& embeddings);

// Dispatches on cfg.variant; embeddings required for Cnn/Lstm.
std::unique_ptr<Model> build_model(const ModelConfig& cfg, const features::EmbeddingTable* embeddings = nullptr);

}  // namespace deepindex::models
