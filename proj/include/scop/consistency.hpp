#pragma once

#include <map>
#include <string>
#include <vector>

#include "scop/answer.hpp"
#include "scop/dataset.hpp"
#include "scop/forms.hpp"
#include "scop/gateway.hpp"
#include "scop/prompting.hpp"

namespace scop {

struct ReasoningSample {
    std::string form_id;
    int sample_index = 0;
    std::string raw_text;
    CanonicalAnswer answer;
};

/// Counted answers over a set of reasoning samples. Unparseable samples
/// count toward n_total but never form a bucket, so bucket counts + n_none
/// always equal n_total.
struct AnswerDistribution {
    std::map<std::string, int> buckets;   // canonical value -> count
    int n_total = 0;
    int n_none = 0;
    AnswerKind kind = AnswerKind::none;   // kind of the bucketed answers
};

/// Split a fixed sampling budget over k forms: first (n_total mod k) forms
/// get one extra sample.
std::vector<int> split_budget(int n_total, int k);

AnswerDistribution build_distribution(const std::vector<ReasoningSample>& samples);

/// Merge distributions bucket-wise (used to pool per-form samples).
AnswerDistribution merge_distributions(const std::vector<AnswerDistribution>& parts);

/// Highest-count bucket; ties break to the lexicographically smallest
/// canonical value; all-unparseable input votes kind none.
CanonicalAnswer majority_vote(const AnswerDistribution& dist);

/// Fraction of all samples (unparseable included) whose answer equals gold.
double solve_rate(const AnswerDistribution& dist, const CanonicalAnswer& gold);

struct SolverSettings {
    std::string model;
    std::string system_prompt;
    double temperature = 0.7;
    double top_p = 1.0;
    int max_tokens = 1024;
    SolverMode mode = SolverMode::zero_shot_cot;
    std::vector<CoTExemplar> cot_exemplars;
    std::size_t expected_shots = 4;
};

struct FormResult {
    SurfaceForm form;
    std::vector<ReasoningSample> samples;
    AnswerDistribution distribution;
};

struct SolveOutcome {
    CanonicalAnswer final_answer;
    AnswerDistribution pooled;
    std::vector<FormResult> per_form;
};

/// Core procedure: split n_total reasoning paths over the given forms,
/// sample each form through the gateway, pool every sample into one
/// distribution, and majority-vote it. With a single original form this is
/// vanilla self-consistency.
SolveOutcome scop_solve(Gateway& gateway, const Problem& problem,
                        const std::vector<SurfaceForm>& forms, int n_total,
                        const SolverSettings& settings);

/// Solve rate of one surface form over n_paths samples.
double measure_solve_rate(Gateway& gateway, const Problem& problem, const SurfaceForm& form,
                          int n_paths, const SolverSettings& settings,
                          AnswerDistribution* distribution_out = nullptr);

/// The original wording of a problem as a surface form.
SurfaceForm original_form(const Problem& problem);

} // namespace scop
