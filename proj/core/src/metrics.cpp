#include "deepindex/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace deepindex::metrics {

PredictionMatrix PredictionMatrix::zeros(int rows, int cols) {
    PredictionMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.p.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return m;
}

LabelSets binarize(const PredictionMatrix& p, double theta) {
    LabelSets out(static_cast<std::size_t>(p.rows));
    for (int i = 0; i < p.rows; ++i)
        for (int j = 0; j < p.cols; ++j)
            if (p.at(i, j) > theta) out[static_cast<std::size_t>(i)].push_back(j);
    return out;
}

PrfMeans sample_prf(const LabelSets& predicted, const LabelSets& gold) {
    if (predicted.size() != gold.size())
        throw Error("sample counts differ: " + std::to_string(predicted.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold sets");
    PrfMeans m;
    if (predicted.empty()) return m;
    for (std::size_t s = 0; s < predicted.size(); ++s) {
        std::vector<int> inter;
        std::set_intersection(predicted[s].begin(), predicted[s].end(), gold[s].begin(), gold[s].end(),
                              std::back_inserter(inter));
        const double hits = static_cast<double>(inter.size());
        const double prec = predicted[s].empty() ? 0.0 : hits / static_cast<double>(predicted[s].size());
        const double rec = gold[s].empty() ? 0.0 : hits / static_cast<double>(gold[s].size());
        const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        m.precision += prec;
        m.recall += rec;
        m.f1 += f1;
    }
    const double n = static_cast<double>(predicted.size());
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
    return m;
}

double sample_f1(const LabelSets& predicted, const LabelSets& gold) {
    return sample_prf(predicted, gold).f1;
}

Report evaluate(const PredictionMatrix& p, const LabelSets& gold, double theta) {
    const auto prf = sample_prf(binarize(p, theta), gold);
    Report r;
    r.sample_f1 = prf.f1;
    r.precision = prf.precision;
    r.recall = prf.recall;
    r.n = p.rows;
    r.theta = theta;
    return r;
}

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace

std::string report_kv_text(const Report& r) {
    std::string out;
    out += "n = " + std::to_string(r.n) + "\n";
    out += "theta = " + fmt(r.theta) + "\n";
    out += "sample_f1 = " + fmt(r.sample_f1) + "\n";
    out += "precision = " + fmt(r.precision) + "\n";
    out += "recall = " + fmt(r.recall) + "\n";
    return out;
}

std::string report_csv_header() {
    return "model,multiplier,fold,n_test,theta,sample_f1,precision,recall";
}

std::string report_csv_row(const std::string& model, const std::string& multiplier, int fold, const Report& r) {
    return model + "," + multiplier + "," + std::to_string(fold) + "," + std::to_string(r.n) + "," + fmt(r.theta) +
           "," + fmt(r.sample_f1) + "," + fmt(r.precision) + "," + fmt(r.recall);
}

}  // namespace deepindex::metrics
