#include "deepindex/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace deepindex::training {

AdamState::AdamState(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamState::step(std::vector<Parameter>& params, double lr) {
    if (moments_.empty()) {
        moments_.resize(params.size());
        for (const auto& p : params) names_.push_back(p.name);
        for (std::size_t i = 0; i < params.size(); ++i) {
            moments_[i].m.assign(params[i].value->size(), 0.0);
            moments_[i].v.assign(params[i].value->size(), 0.0);
        }
    }
    if (params.size() != moments_.size()) throw Error("optimizer state does not match parameter list");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != names_[i]) throw Error("optimizer state does not match parameter list");
        auto& value = params[i].value->data();
        const auto& grad = params[i].value->grad();
        auto& m = moments_[i].m;
        auto& v = moments_[i].v;
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j];
            if (!std::isfinite(g))
                throw Error("non-finite gradient in parameter \"" + params[i].name + "\"");
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
}

std::vector<double> threshold_candidates(double theta_prev, int k, double alpha) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * k + 1));
    for (int i = -k; i <= k; ++i) out.push_back(theta_prev + i * alpha);
    return out;
}

double update_threshold(const metrics::PredictionMatrix& p, const metrics::LabelSets& gold, double theta_prev,
                        int k, double alpha) {
    if (k < 0 || alpha <= 0.0) throw ConfigError("threshold search requires k >= 0 and alpha > 0");
    double best_theta = theta_prev, best_f1 = -1.0;
    for (double cand : threshold_candidates(theta_prev, k, alpha)) {
        const double f1 = metrics::sample_f1(metrics::binarize(p, cand), gold);
        bool better = f1 > best_f1;
        if (f1 == best_f1) {
            const double dc = std::abs(cand - theta_prev), db = std::abs(best_theta - theta_prev);
            better = dc < db || (dc == db && cand < best_theta);
        }
        if (better) {
            best_f1 = f1;
            best_theta = cand;
        }
    }
    return std::clamp(best_theta, 0.01, 0.99);
}

bool EarlyStopState::observe(double f1) {
    ++n_evals;
    if (f1 > best_f1) {
        best_f1 = f1;
        best_eval_index = n_evals - 1;
        evals_since_improvement = 0;
        return true;
    }
    ++evals_since_improvement;
    return false;
}

metrics::LabelSets encode_gold(const std::vector<const corpus::Document*>& docs, const corpus::LabelSpace& space) {
    std::set<std::string> unseen;
    for (const auto* doc : docs)
        for (const auto& l : doc->labels)
            if (!space.index_of(l)) unseen.insert(l);
    std::map<std::string, int> extra;
    int next = space.size();
    for (const auto& l : unseen) extra.emplace(l, next++);

    metrics::LabelSets out;
    out.reserve(docs.size());
    for (const auto* doc : docs) {
        std::vector<int> idx;
        idx.reserve(doc->labels.size());
        for (const auto& l : doc->labels) {
            if (auto i = space.index_of(l))
                idx.push_back(*i);
            else
                idx.push_back(extra.at(l));
        }
        std::sort(idx.begin(), idx.end());
        out.push_back(std::move(idx));
    }
    return out;
}

TensorPtr targets_for(const metrics::LabelSets& gold, const std::vector<std::size_t>& rows, int n_labels) {
    auto y = Tensor::make({static_cast<int>(rows.size()), n_labels});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int l : gold[rows[r]])
            if (l < n_labels) y->data()[r * static_cast<std::size_t>(n_labels) + static_cast<std::size_t>(l)] = 1.0;
    return y;
}

namespace {

struct BatchView {
    SparseMatrix sparse;
    std::vector<features::TokenSequence> sequences;
    models::FeatureBatch batch;
};

BatchView gather(const EncodedSplit& split, const std::vector<std::size_t>& rows) {
    BatchView view;
    if (split.is_sparse) {
        view.sparse.cols = split.sparse.cols;
        for (auto r : rows) view.sparse.rows.push_back(split.sparse.rows[r]);
        view.batch.sparse = &view.sparse;
    } else {
        for (auto r : rows) view.sequences.push_back(split.sequences[r]);
        view.batch.sequences = &view.sequences;
    }
    return view;
}

double bce_probs_plain(const metrics::PredictionMatrix& p, const metrics::LabelSets& gold, int n_labels) {
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    double loss = 0.0;
    for (int i = 0; i < p.rows; ++i) {
        std::vector<char> y(static_cast<std::size_t>(n_labels), 0);
        for (int l : gold[static_cast<std::size_t>(i)])
            if (l < n_labels) y[static_cast<std::size_t>(l)] = 1;
        for (int j = 0; j < n_labels; ++j) {
            const double c = std::clamp(p.at(i, j), lo, hi);
            loss -= y[static_cast<std::size_t>(j)] ? std::log(c) : std::log(1.0 - c);
        }
    }
    return loss;
}

std::string fmt_log(std::int64_t step, const char* split, double loss, double theta, double f1) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld\t%s\t%.6f\t%.6f\t%.6f", static_cast<long long>(step), split, loss, theta,
                  f1);
    return buf;
}

struct Snapshot {
    std::vector<std::vector<double>> values;
    double theta = 0.2;

    static Snapshot capture(models::Model& model, double theta) {
        Snapshot s;
        s.theta = theta;
        for (const auto& p : model.named_state()) s.values.push_back(p.value->data());
        return s;
    }

    void restore(models::Model& model) const {
        auto state = model.named_state();
        if (state.size() != values.size()) throw Error("snapshot does not match model state");
        for (std::size_t i = 0; i < state.size(); ++i) state[i].value->data() = values[i];
    }
};

}  // namespace

metrics::PredictionMatrix predict(models::Model& model, const EncodedSplit& split, int batch_size) {
    const int n = static_cast<int>(split.size());
    auto out = metrics::PredictionMatrix::zeros(n, model.config().n_labels);
    Tape tape;  // eval mode records nothing useful; reset per batch anyway
    for (int start = 0; start < n; start += batch_size) {
        const int len = std::min(batch_size, n - start);
        std::vector<std::size_t> rows(static_cast<std::size_t>(len));
        std::iota(rows.begin(), rows.end(), static_cast<std::size_t>(start));
        auto view = gather(split, rows);
        tape.reset();
        auto fwd = model.forward(tape, view.batch, /*train=*/false);
        for (int i = 0; i < len; ++i)
            for (int j = 0; j < out.cols; ++j) out.at(start + i, j) = fwd.probs->at(i, j);
    }
    return out;
}

TrainResult train(models::Model& model, const TrainData& data, const TrainConfig& cfg, const TrainHooks& hooks) {
    if (data.train.size() == 0) throw Error("training split is empty");
    if (data.n_labels != model.config().n_labels) throw Error("label count mismatch between data and model");

    TrainResult result;
    result.theta = cfg.theta0;

    ThresholdState threshold;
    threshold.theta = cfg.theta0;
    threshold.k = cfg.threshold_k;
    threshold.alpha = cfg.threshold_alpha;

    EarlyStopState stopper;
    AdamState adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    Snapshot best = Snapshot::capture(model, cfg.theta0);

    auto log = [&](const std::string& line) {
        result.log_lines.push_back(line);
        if (hooks.on_log) hooks.on_log(line);
    };

    std::mt19937_64 order_rng(mix_seed(cfg.seed, 0x5182));
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    const bool skip_singleton = model.uses_batchnorm();
    std::int64_t step = 0;
    int steps_since_eval = 0;
    double last_val_f1 = 0.0;  // train rows report the latest validation score
    bool stop = false;

    auto validate = [&]() {
        auto p = predict(model, data.val, cfg.batch_size);
        const double val_loss = bce_probs_plain(p, data.val.gold, data.n_labels);
        threshold.theta = update_threshold(p, data.val.gold, threshold.theta, threshold.k, threshold.alpha);
        double f1 = metrics::sample_f1(metrics::binarize(p, threshold.theta), data.val.gold);
        if (hooks.override_val_f1) f1 = hooks.override_val_f1(stopper.n_evals, f1);
        last_val_f1 = f1;
        threshold.history.push_back({step, threshold.theta, f1});
        result.history.push_back({step, val_loss, threshold.theta, f1});
        log(fmt_log(step, "val", val_loss, threshold.theta, f1));
        if (stopper.observe(f1)) best = Snapshot::capture(model, threshold.theta);
        if (stopper.should_stop(cfg.patience)) stop = true;
    };

    for (int epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
        seeded_shuffle(order, order_rng);
        for (std::size_t start = 0; start < order.size() && !stop; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            if (skip_singleton && len < 2) continue;  // batchnorm cannot normalize a single row
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(start + len));
            auto view = gather(data.train, rows);
            auto y = targets_for(data.train.gold, rows, data.n_labels);

            Tape tape;
            auto fwd = model.forward(tape, view.batch, /*train=*/true);
            auto loss = ops::bce_with_logits_sum(tape, fwd.logits, y);
            const double loss_v = loss->scalar();
            if (!std::isfinite(loss_v)) {
                best.restore(model);
                result.theta = best.theta;
                result.diverged = true;
                result.best_val_f1 = std::max(stopper.best_f1, 0.0);
                log(fmt_log(step, "train", loss_v, threshold.theta, last_val_f1));
                return result;
            }
            model.zero_grad();
            tape.backward(loss);
            adam.step(model.parameters(), cfg.learning_rate);
            ++step;
            ++steps_since_eval;
            log(fmt_log(step, "train", loss_v, threshold.theta, last_val_f1));

            if (cfg.eval_every > 0 && steps_since_eval >= cfg.eval_every) {
                steps_since_eval = 0;
                validate();
            }
        }
        result.epochs_run = epoch + 1;
        if (!stop && cfg.eval_every == 0) validate();
    }

    best.restore(model);
    result.theta = best.theta;
    result.best_val_f1 = std::max(stopper.best_f1, 0.0);
    result.steps = step;
    return result;
}

}  // namespace deepindex::training
