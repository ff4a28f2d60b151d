#include <doctest.h>

#include "scop/charts.hpp"

using namespace scop;

namespace {

int count_occurrences(const std::string& haystack, const std::string& needle) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

DeltaHistogram sample_histogram() {
    SolveRateTable table;
    table["p1"] = {0.2, {0.8, 0.2}};
    table["p2"] = {0.9, {0.1, 0.9}};
    return delta_histogram(table);
}

std::vector<DifficultyPoint> sample_points() {
    std::map<std::string, SrEntropy> before = {{"a", {0.2, 1.2}}, {"b", {0.8, 0.4}},
                                               {"c", {0.6, 2.0}}};
    std::map<std::string, SrEntropy> after = {{"a", {0.7, 0.8}}, {"b", {0.3, 1.9}},
                                              {"c", {0.6, 2.0}}};
    return difficulty_map(before, after);
}

SearchTrace sample_trace() {
    SearchTrace trace;
    trace.problems_sampled_per_exemplar = {1, 3, 2, 5};
    trace.steps_consumed = 11;
    return trace;
}

} // namespace

TEST_CASE("chart rendering is deterministic") {
    CHECK(render_delta_histogram_svg(sample_histogram()) ==
          render_delta_histogram_svg(sample_histogram()));
    CHECK(render_difficulty_map_svg(sample_points()) ==
          render_difficulty_map_svg(sample_points()));
    CHECK(render_search_cost_svg(sample_trace()) == render_search_cost_svg(sample_trace()));
}

TEST_CASE("delta histogram chart draws one bar per bin and annotates tails") {
    auto hist = sample_histogram();
    auto svg = render_delta_histogram_svg(hist);
    CHECK(svg.rfind("<svg xmlns=", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    // One background rect plus one bar per bin.
    CHECK(count_occurrences(svg, "<rect") == 1 + static_cast<int>(hist.counts.size()));
    CHECK(svg.find("tails: 25.0% above +0.25, 25.0% below -0.25") != std::string::npos);
    CHECK(svg.find("solve-rate delta") != std::string::npos);
}

TEST_CASE("difficulty map chart draws one arrow and one dot per problem") {
    auto points = sample_points();
    auto svg = render_difficulty_map_svg(points);
    CHECK(count_occurrences(svg, "marker-end=\"url(#arrow)\"") ==
          static_cast<int>(points.size()));
    CHECK(count_occurrences(svg, "<circle") == static_cast<int>(points.size()));
    // Class colors: one improvement (green), one uncertainty (orange), one
    // neutral (grey) from the sample movements.
    CHECK(svg.find("#2a9d4a") != std::string::npos);
    CHECK(svg.find("#e08a00") != std::string::npos);
    CHECK(svg.find("#888888") != std::string::npos);
    CHECK(svg.find("answer entropy (bits)") != std::string::npos);
}

TEST_CASE("search cost chart plots the cumulative sampling cost") {
    auto svg = render_search_cost_svg(sample_trace());
    CHECK(count_occurrences(svg, "<circle") == 4);
    CHECK(count_occurrences(svg, "<polyline") == 1);
    CHECK(svg.find("total 11 problems for 4 exemplars") != std::string::npos);

    SearchTrace single;
    single.problems_sampled_per_exemplar = {2};
    auto svg_single = render_search_cost_svg(single);
    CHECK(count_occurrences(svg_single, "<circle") == 1);
    CHECK(count_occurrences(svg_single, "<polyline") == 0);

    SearchTrace empty;
    auto svg_empty = render_search_cost_svg(empty);
    CHECK(count_occurrences(svg_empty, "<circle") == 0);
    CHECK(svg_empty.find("total 0 problems for 0 exemplars") != std::string::npos);
}
