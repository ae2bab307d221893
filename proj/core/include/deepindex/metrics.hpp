#pragma once

#include <string>
#include <vector>

#include "deepindex/common.hpp"

namespace deepindex::metrics {

// Per-sample, per-label assignment probabilities, values in (0,1).
struct PredictionMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> p;

    double& at(int r, int c) { return p[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return p[static_cast<std::size_t>(r) * cols + c]; }
    static PredictionMatrix zeros(int rows, int cols);
};

using LabelSets = std::vector<std::vector<int>>;  // sorted label indices per sample

// Label l is predicted for a sample iff p > theta (strict).
LabelSets binarize(const PredictionMatrix& p, double theta);

struct PrfMeans {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Sample-based scores: precision/recall/F1 per sample, arithmetic mean over
// samples. Conventions: empty prediction gives precision 0; F1 is 0 when
// precision + recall is 0.
PrfMeans sample_prf(const LabelSets& predicted, const LabelSets& gold);
double sample_f1(const LabelSets& predicted, const LabelSets& gold);

struct Report {
    double sample_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    int n = 0;
    double theta = 0.0;
};

Report evaluate(const PredictionMatrix& p, const LabelSets& gold, double theta);

std::string report_kv_text(const Report& r);
std::string report_csv_header();
std::string report_csv_row(const std::string& model, const std::string& multiplier, int fold, const Report& r);

}  // namespace deepindex::metrics
