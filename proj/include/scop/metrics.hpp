#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scop/consistency.hpp"

namespace scop {

/// Solve rates per problem: the original wording plus each paraphrase.
struct SolveRateRow {
    double original_sr = 0.0;
    std::vector<double> paraphrase_srs;
};
using SolveRateTable = std::map<std::string, SolveRateRow>;

/// Shannon entropy in bits over the parseable samples of a distribution.
double entropy_bits(const AnswerDistribution& dist);

struct VovResult {
    double vov = 0.0;                   // mean over problems of per-problem variance
    double std_percent = 0.0;           // sqrt(vov) * 100, the reported convention
    double mean_row_std_percent = 0.0;  // mean of per-problem stds * 100, secondary
};

/// Variance of solve rates over each problem's surface forms (population
/// variance of {original} ∪ paraphrases), averaged over problems.
VovResult vov(const SolveRateTable& table);

struct AccuracyInput {
    std::string problem_id;
    bool correct = false;
    std::optional<double> original_sr;  // from an SC baseline; absent = no baseline
};

struct AccuracyReport {
    double global_accuracy = 0.0;
    std::optional<double> hard_accuracy;  // over problems with original_sr <= 0.5
    std::optional<double> hpr;            // fraction of problems that are hard
    int n_problems = 0;
    int n_hard = 0;
    bool baseline_available = false;
};

AccuracyReport accuracy_report(const std::vector<AccuracyInput>& results);

/// "82.0 (35.0)" table style; "n/a" when no baseline or no hard problems.
std::string render_accuracy(const AccuracyReport& report);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
    int n = 0;
    bool defined = false;  // false when either input is constant
    std::string stars;     // "", "*", "**", "***"
};

/// Rank correlation with average ranks for ties and a t-approximation
/// p-value.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Seeded permutation-test p-value for small samples.
double spearman_permutation_p(const std::vector<double>& x, const std::vector<double>& y,
                              int n_shuffles, std::uint64_t seed);

struct DeltaHistogram {
    std::vector<double> edges;   // n_bins + 1 edges spanning [-1, 1]
    std::vector<int> counts;
    int n_pairs = 0;
    double upper_tail = 0.0;     // fraction of pairs with delta > 0.25
    double lower_tail = 0.0;     // fraction of pairs with delta < -0.25
};

/// Histogram of (paraphrase_sr - original_sr) over all (problem,
/// paraphrase) pairs.
DeltaHistogram delta_histogram(const SolveRateTable& table, int n_bins = 16);

enum class DifficultyClass { improvement, overconfidence, uncertainty, neutral };

std::string to_string(DifficultyClass cls);

struct SrEntropy {
    double sr = 0.0;
    double entropy = 0.0;
};

struct DifficultyPoint {
    std::string problem_id;
    double sr_before = 0.0;
    double entropy_before = 0.0;
    double sr_after = 0.0;
    double entropy_after = 0.0;
    DifficultyClass cls = DifficultyClass::neutral;
};

/// Classify each problem's (solve rate, entropy) movement: solve-rate gains
/// are improvements; among losses, rising entropy is uncertainty and
/// falling entropy is overconfidence; everything else is neutral.
std::vector<DifficultyPoint> difficulty_map(const std::map<std::string, SrEntropy>& before,
                                            const std::map<std::string, SrEntropy>& after);

} // namespace scop
