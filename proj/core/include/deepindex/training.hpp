#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deepindex/corpus.hpp"
#include "deepindex/features.hpp"
#include "deepindex/metrics.hpp"
#include "deepindex/models.hpp"

namespace deepindex::training {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 256;
    int patience = 10;
    int eval_every = 0;  // optimizer steps between validations; 0 = once per epoch
    int max_epochs = 100;
    std::uint64_t seed = 0;

    double theta0 = 0.2;
    int threshold_k = 3;
    double threshold_alpha = 0.01;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

// Adam with bias-corrected moments; one shared step counter for all
// parameters. Throws on non-finite gradients, naming the parameter.
class AdamState {
public:
    AdamState(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<Parameter>& params, double lr);
    std::int64_t steps() const { return t_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Moments> moments_;
    std::vector<std::string> names_;  // sanity: parameter list must stay stable
};

// The 2k+1 candidate grid {theta_prev - k*alpha, ..., theta_prev + k*alpha}.
std::vector<double> threshold_candidates(double theta_prev, int k, double alpha);

// Argmax of sample-based F1 over the candidate grid. Ties break toward the
// candidate nearest theta_prev, then the smaller value; the result is clamped
// to [0.01, 0.99].
double update_threshold(const metrics::PredictionMatrix& p, const metrics::LabelSets& gold, double theta_prev,
                        int k = 3, double alpha = 0.01);

struct ThresholdState {
    double theta = 0.2;
    int k = 3;
    double alpha = 0.01;
    struct Event {
        std::int64_t step;
        double theta;
        double f1;
    };
    std::vector<Event> history;
};

struct EarlyStopState {
    double best_f1 = -1.0;
    int evals_since_improvement = 0;
    int n_evals = 0;
    int best_eval_index = -1;

    // true on strict improvement; resets the non-improvement counter
    bool observe(double f1);
    bool should_stop(int patience) const { return evals_since_improvement >= patience; }
};

// Featurized documents aligned with their gold label-index sets. Gold indices
// may exceed the model's label count for evaluation-only labels; training
// targets ignore those.
struct EncodedSplit {
    bool is_sparse = true;
    SparseMatrix sparse;
    std::vector<features::TokenSequence> sequences;
    metrics::LabelSets gold;

    std::size_t size() const { return gold.size(); }
};

struct TrainData {
    EncodedSplit train, val;
    int n_labels = 0;
};

struct ValidationEvent {
    std::int64_t step = 0;
    double loss = 0.0;
    double theta = 0.0;
    double f1 = 0.0;
};

struct TrainResult {
    double theta = 0.2;
    double best_val_f1 = 0.0;
    std::vector<ValidationEvent> history;
    bool diverged = false;
    std::int64_t steps = 0;
    int epochs_run = 0;
    std::vector<std::string> log_lines;  // step<TAB>split<TAB>loss<TAB>theta<TAB>sample_f1
};

struct TrainHooks {
    // test scripting: replaces the validation F1 fed to early stopping and
    // checkpoint selection (arguments: eval index, real F1)
    std::function<double(int, double)> override_val_f1;
    std::function<void(const std::string&)> on_log;
};

// Shuffled mini-batch training with summed BCE, online threshold adjustment
// and validation-driven early stopping. The best checkpoint (parameters and
// its theta) is restored at termination.
TrainResult train(models::Model& model, const TrainData& data, const TrainConfig& cfg, const TrainHooks& hooks = {});

metrics::PredictionMatrix predict(models::Model& model, const EncodedSplit& split, int batch_size = 256);

// Gold labels by index: labels inside the space keep their index; labels
// outside get stable synthetic indices >= |L| so recall is penalized.
metrics::LabelSets encode_gold(const std::vector<const corpus::Document*>& docs, const corpus::LabelSpace& space);

// Dense 0/1 target matrix over label indices < n_labels for the given rows.
TensorPtr targets_for(const metrics::LabelSets& gold, const std::vector<std::size_t>& rows, int n_labels);

}  // namespace deepindex::training
