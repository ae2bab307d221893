#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "deepindex/metrics.hpp"

// Independent naive reimplementations used as test oracles. Kept deliberately
// different from the library code paths: std::set arithmetic, explicit loops.
namespace testutil {

inline double naive_sample_f1(const deepindex::metrics::LabelSets& pred,
                              const deepindex::metrics::LabelSets& gold) {
    double total = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        std::set<int> ps(pred[s].begin(), pred[s].end());
        std::set<int> gs(gold[s].begin(), gold[s].end());
        int hits = 0;
        for (int l : ps)
            if (gs.count(l)) ++hits;
        const double prec = ps.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ps.size());
        const double rec = gs.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gs.size());
        total += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    return pred.empty() ? 0.0 : total / static_cast<double>(pred.size());
}

inline deepindex::metrics::LabelSets naive_binarize(const deepindex::metrics::PredictionMatrix& p, double theta) {
    deepindex::metrics::LabelSets out(static_cast<std::size_t>(p.rows));
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j)
            if (p.p[static_cast<std::size_t>(i) * p.cols + j] > theta) out[static_cast<std::size_t>(i)].push_back(j);
    return out;
}

// Brute-force threshold search over the 2k+1 grid with the same tie rule:
// highest F1, then nearest to theta_prev, then the smaller candidate.
inline double naive_update_threshold(const deepindex::metrics::PredictionMatrix& p,
                                     const deepindex::metrics::LabelSets& gold, double theta_prev, int k,
                                     double alpha) {
    double best_t = theta_prev, best_f1 = -1.0;
    bool first = true;
    for (int i = -k; i <= k; ++i) {
        const double cand = theta_prev + i * alpha;
        const double f1 = naive_sample_f1(naive_binarize(p, cand), gold);
        bool take = first || f1 > best_f1;
        if (!take && f1 == best_f1) {
            const double dc = std::abs(cand - theta_prev), db = std::abs(best_t - theta_prev);
            take = dc < db || (dc == db && cand < best_t);
        }
        if (take) {
            best_f1 = f1;
            best_t = cand;
            first = false;
        }
    }
    return std::clamp(best_t, 0.01, 0.99);
}

}  // namespace testutil
