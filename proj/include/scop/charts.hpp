#pragma once

#include <string>
#include <vector>

#include "scop/exemplar_search.hpp"
#include "scop/metrics.hpp"

namespace scop {

/// Bar chart of solve-rate deltas with the |delta| > 0.25 tails annotated.
std::string render_delta_histogram_svg(const DeltaHistogram& hist);

/// Entropy-vs-solve-rate plane with one arrow per problem from its original
/// position to its paraphrased position, colored by class.
std::string render_difficulty_map_svg(const std::vector<DifficultyPoint>& points);

/// Cumulative problems sampled per exemplar found.
std::string render_search_cost_svg(const SearchTrace& trace);

} // namespace scop
