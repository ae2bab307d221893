#pragma once

#include <map>
#include <string>
#include <vector>

#include "deepindex/common.hpp"

namespace deepindex::report {

struct EvalRow {
    std::string model;
    std::string multiplier;  // x1, x2, x4, x8, all, or full
    int fold = 0;
    int n_test = 0;
    double theta = 0.0;
    double sample_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

std::vector<EvalRow> parse_eval_csv(const std::string& content);
std::vector<EvalRow> read_eval_csv(const std::string& path);

struct ResultsTable {
    std::vector<std::string> models;        // row order
    std::vector<std::string> multipliers;   // column order among full,x1,x2,x4,x8,all
    std::map<std::pair<std::string, std::string>, double> mean_f1;

    bool has(const std::string& model, const std::string& mult) const;
    double cell(const std::string& model, const std::string& mult) const;
};

// Arithmetic mean of sample-F1 over folds per (model, multiplier).
ResultsTable aggregate(const std::vector<EvalRow>& rows);

std::string table_csv(const ResultsTable& table);

// Line chart of mean F1 over the title-size ladder, one solid line per model,
// plus a dashed horizontal line per model's full-text score when present.
std::string learning_curve_svg(const ResultsTable& table);

}  // namespace deepindex::report
