#include "deepindex/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepindex::report {

namespace {

const std::vector<std::string> kMultOrder = {"full", "x1", "x2", "x4", "x8", "all"};
const std::vector<std::string> kModelOrder = {"base-mlp", "mlp", "cnn", "lstm"};

const char* model_color(const std::string& model) {
    if (model == "base-mlp") return "#1f77b4";
    if (model == "mlp") return "#d62728";
    if (model == "cnn") return "#2ca02c";
    if (model == "lstm") return "#9467bd";
    return "#7f7f7f";
}

std::string tick_label(const std::string& mult) {
    if (mult == "all") return "T_all";
    if (mult.size() > 1 && mult[0] == 'x') return "T" + mult.substr(1);
    return mult;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

}  // namespace

std::vector<EvalRow> parse_eval_csv(const std::string& content) {
    std::vector<EvalRow> rows;
    std::istringstream is(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("model,", 0) == 0) continue;  // header, possibly repeated after appends
        const auto cols = split_csv_line(line);
        if (cols.size() != 8)
            throw ParseError("evaluation CSV line " + std::to_string(line_no) + ": expected 8 columns, got " +
                             std::to_string(cols.size()));
        EvalRow r;
        r.model = cols[0];
        r.multiplier = cols[1];
        try {
            r.fold = std::stoi(cols[2]);
            r.n_test = std::stoi(cols[3]);
            r.theta = std::stod(cols[4]);
            r.sample_f1 = std::stod(cols[5]);
            r.precision = std::stod(cols[6]);
            r.recall = std::stod(cols[7]);
        } catch (const std::exception&) {
            throw ParseError("evaluation CSV line " + std::to_string(line_no) + ": malformed numeric field");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<EvalRow> read_eval_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open evaluation CSV: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_eval_csv(buf.str());
}

bool ResultsTable::has(const std::string& model, const std::string& mult) const {
    return mean_f1.count({model, mult}) > 0;
}

double ResultsTable::cell(const std::string& model, const std::string& mult) const {
    auto it = mean_f1.find({model, mult});
    if (it == mean_f1.end()) throw Error("no results for " + model + "/" + mult);
    return it->second;
}

ResultsTable aggregate(const std::vector<EvalRow>& rows) {
    if (rows.empty()) throw Error("evaluation CSV contains no result rows");
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        auto& [sum, n] = acc[{r.model, r.multiplier}];
        sum += r.sample_f1;
        ++n;
    }
    ResultsTable table;
    for (auto& [key, sn] : acc) table.mean_f1[key] = sn.first / sn.second;

    std::vector<std::string> models, mults;
    for (const auto& [key, _] : acc) {
        if (std::find(models.begin(), models.end(), key.first) == models.end()) models.push_back(key.first);
        if (std::find(mults.begin(), mults.end(), key.second) == mults.end()) mults.push_back(key.second);
    }
    auto rank = [](const std::vector<std::string>& order, const std::string& v) {
        auto it = std::find(order.begin(), order.end(), v);
        return it == order.end() ? order.size() : static_cast<std::size_t>(it - order.begin());
    };
    std::sort(models.begin(), models.end(), [&](const auto& a, const auto& b) {
        const auto ra = rank(kModelOrder, a), rb = rank(kModelOrder, b);
        return ra != rb ? ra < rb : a < b;
    });
    std::sort(mults.begin(), mults.end(), [&](const auto& a, const auto& b) {
        const auto ra = rank(kMultOrder, a), rb = rank(kMultOrder, b);
        return ra != rb ? ra < rb : a < b;
    });
    table.models = std::move(models);
    table.multipliers = std::move(mults);
    return table;
}

std::string table_csv(const ResultsTable& table) {
    std::string out = "model";
    for (const auto& m : table.multipliers) out += "," + m;
    out += "\n";
    for (const auto& model : table.models) {
        out += model;
        for (const auto& mult : table.multipliers) {
            out += ",";
            if (table.has(model, mult)) out += fmt(table.cell(model, mult));
        }
        out += "\n";
    }
    return out;
}

std::string learning_curve_svg(const ResultsTable& table) {
    std::vector<std::string> ladder;
    for (const auto& m : table.multipliers)
        if (m != "full") ladder.push_back(m);

    const double width = 720, height = 480;
    const double left = 70, right = 170, top = 40, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    auto x_of = [&](std::size_t i) {
        if (ladder.size() <= 1) return left + plot_w / 2;
        return left + plot_w * static_cast<double>(i) / static_cast<double>(ladder.size() - 1);
    };
    auto y_of = [&](double f1) { return top + plot_h * (1.0 - f1); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fmt1(left) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
        << "mean sample F1 by title training-set size</text>\n";

    // axes
    svg << "<line x1=\"" << fmt1(left) << "\" y1=\"" << fmt1(top) << "\" x2=\"" << fmt1(left) << "\" y2=\""
        << fmt1(top + plot_h) << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << fmt1(left) << "\" y1=\"" << fmt1(top + plot_h) << "\" x2=\"" << fmt1(left + plot_w)
        << "\" y2=\"" << fmt1(top + plot_h) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; i += 2) {
        const double f1 = i / 10.0, y = y_of(f1);
        svg << "<line x1=\"" << fmt1(left - 4) << "\" y1=\"" << fmt1(y) << "\" x2=\"" << fmt1(left) << "\" y2=\""
            << fmt1(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt1(left - 10) << "\" y=\"" << fmt1(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << fmt1(f1) << "</text>\n";
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double x = x_of(i);
        svg << "<line x1=\"" << fmt1(x) << "\" y1=\"" << fmt1(top + plot_h) << "\" x2=\"" << fmt1(x) << "\" y2=\""
            << fmt1(top + plot_h + 4) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fmt1(x) << "\" y=\"" << fmt1(top + plot_h + 20)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << tick_label(ladder[i])
            << "</text>\n";
    }

    double legend_y = top + 10;
    for (const auto& model : table.models) {
        const char* color = model_color(model);
        // solid ladder curve
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < ladder.size(); ++i)
            if (table.has(model, ladder[i])) pts.emplace_back(x_of(i), y_of(table.cell(model, ladder[i])));
        if (pts.size() == 1) {
            svg << "<circle cx=\"" << fmt1(pts[0].first) << "\" cy=\"" << fmt1(pts[0].second)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        } else if (pts.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i)
                svg << (i ? " " : "") << fmt1(pts[i].first) << "," << fmt1(pts[i].second);
            svg << "\"/>\n";
            for (const auto& [px, py] : pts)
                svg << "<circle cx=\"" << fmt1(px) << "\" cy=\"" << fmt1(py) << "\" r=\"3\" fill=\"" << color
                    << "\"/>\n";
        }
        // dashed full-text reference
        if (table.has(model, "full")) {
            const double y = y_of(table.cell(model, "full"));
            svg << "<line x1=\"" << fmt1(left) << "\" y1=\"" << fmt1(y) << "\" x2=\"" << fmt1(left + plot_w)
                << "\" y2=\"" << fmt1(y) << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
        }
        svg << "<line x1=\"" << fmt1(left + plot_w + 16) << "\" y1=\"" << fmt1(legend_y) << "\" x2=\""
            << fmt1(left + plot_w + 44) << "\" y2=\"" << fmt1(legend_y) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << fmt1(left + plot_w + 50) << "\" y=\"" << fmt1(legend_y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << model << "</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace deepindex::report
