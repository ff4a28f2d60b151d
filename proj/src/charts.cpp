#include "scop/charts.hpp"

#include <algorithm>
#include <cstdio>

#include "scop/util.hpp"

namespace scop {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 48.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n"
           "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
}

std::string axis_line(double x1, double y1, double x2, double y2) {
    return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
}

std::string text_at(double x, double y, const std::string& body, const char* anchor = "middle") {
    return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" " +
           "font-size=\"12\" text-anchor=\"" + anchor + "\" fill=\"#333\">" + body + "</text>\n";
}

const char* class_color(DifficultyClass cls) {
    switch (cls) {
        case DifficultyClass::improvement: return "#2a9d4a";
        case DifficultyClass::uncertainty: return "#e08a00";
        case DifficultyClass::overconfidence: return "#c03030";
        case DifficultyClass::neutral: return "#888888";
    }
    return "#888888";
}

} // namespace

std::string render_delta_histogram_svg(const DeltaHistogram& hist) {
    std::string svg = svg_open();
    double plot_w = kWidth - 2 * kMargin;
    double plot_h = kHeight - 2 * kMargin;
    int max_count = 1;
    for (int c : hist.counts) max_count = std::max(max_count, c);

    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        double x0 = kMargin + plot_w * (hist.edges[i] + 1.0) / 2.0;
        double x1 = kMargin + plot_w * (hist.edges[i + 1] + 1.0) / 2.0;
        double h = plot_h * static_cast<double>(hist.counts[i]) / static_cast<double>(max_count);
        double y = kHeight - kMargin - h;
        svg += "<rect x=\"" + num(x0 + 1) + "\" y=\"" + num(y) + "\" width=\"" +
               num(std::max(0.0, x1 - x0 - 2)) + "\" height=\"" + num(h) +
               "\" fill=\"#4878b0\"/>\n";
    }
    svg += axis_line(kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin);
    svg += axis_line(kMargin, kMargin, kMargin, kHeight - kMargin);
    svg += text_at(kWidth / 2, kHeight - 12, "solve-rate delta (paraphrase - original)");
    svg += text_at(kMargin, kHeight - kMargin + 16, "-1", "middle");
    svg += text_at(kMargin + plot_w / 2, kHeight - kMargin + 16, "0", "middle");
    svg += text_at(kWidth - kMargin, kHeight - kMargin + 16, "1", "middle");
    char tails[96];
    std::snprintf(tails, sizeof(tails), "tails: %.1f%% above +0.25, %.1f%% below -0.25",
                  hist.upper_tail * 100.0, hist.lower_tail * 100.0);
    svg += text_at(kWidth / 2, kMargin - 16, tails);
    svg += "</svg>\n";
    return svg;
}

std::string render_difficulty_map_svg(const std::vector<DifficultyPoint>& points) {
    std::string svg = svg_open();
    svg +=
        "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"3\" "
        "orient=\"auto\"><path d=\"M0,0 L6,3 L0,6 z\" fill=\"context-stroke\"/></marker></defs>\n";
    double plot_w = kWidth - 2 * kMargin;
    double plot_h = kHeight - 2 * kMargin;
    double max_entropy = 1.0;
    for (const auto& p : points)
        max_entropy = std::max({max_entropy, p.entropy_before, p.entropy_after});

    auto px = [&](double entropy) { return kMargin + plot_w * entropy / max_entropy; };
    auto py = [&](double sr) { return kHeight - kMargin - plot_h * sr; };

    for (const auto& p : points) {
        const char* color = class_color(p.cls);
        svg += "<line x1=\"" + num(px(p.entropy_before)) + "\" y1=\"" + num(py(p.sr_before)) +
               "\" x2=\"" + num(px(p.entropy_after)) + "\" y2=\"" + num(py(p.sr_after)) +
               "\" stroke=\"" + color + "\" stroke-width=\"1.5\" marker-end=\"url(#arrow)\"/>\n";
        svg += "<circle cx=\"" + num(px(p.entropy_before)) + "\" cy=\"" + num(py(p.sr_before)) +
               "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    svg += axis_line(kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin);
    svg += axis_line(kMargin, kMargin, kMargin, kHeight - kMargin);
    svg += text_at(kWidth / 2, kHeight - 12, "answer entropy (bits)");
    svg += text_at(16, kHeight / 2, "solve rate", "start");
    svg += text_at(kMargin, kHeight - kMargin + 16, "0");
    svg += text_at(kWidth - kMargin, kHeight - kMargin + 16, num(max_entropy));
    svg += "</svg>\n";
    return svg;
}

std::string render_search_cost_svg(const SearchTrace& trace) {
    std::string svg = svg_open();
    double plot_w = kWidth - 2 * kMargin;
    double plot_h = kHeight - 2 * kMargin;
    std::size_t n = trace.problems_sampled_per_exemplar.size();
    int total = 0;
    for (int c : trace.problems_sampled_per_exemplar) total += c;
    int max_y = std::max(total, 1);

    std::string polyline;
    int cumulative = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cumulative += trace.problems_sampled_per_exemplar[i];
        double x = kMargin + plot_w * (n == 1 ? 1.0 : static_cast<double>(i) /
                                                          static_cast<double>(n - 1));
        double y = kHeight - kMargin -
                   plot_h * static_cast<double>(cumulative) / static_cast<double>(max_y);
        polyline += num(x) + "," + num(y) + " ";
        svg += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) +
               "\" r=\"3\" fill=\"#4878b0\"/>\n";
    }
    if (n > 1)
        svg += "<polyline points=\"" + polyline +
               "\" fill=\"none\" stroke=\"#4878b0\" stroke-width=\"1.5\"/>\n";
    svg += axis_line(kMargin, kHeight - kMargin, kWidth - kMargin, kHeight - kMargin);
    svg += axis_line(kMargin, kMargin, kMargin, kHeight - kMargin);
    svg += text_at(kWidth / 2, kHeight - 12, "exemplars found");
    svg += text_at(16, kHeight / 2, "problems sampled", "start");
    svg += text_at(kWidth - kMargin, kMargin - 16,
                   "total " + std::to_string(total) + " problems for " + std::to_string(n) +
                       " exemplars",
                   "end");
    svg += "</svg>\n";
    return svg;
}

} // namespace scop
