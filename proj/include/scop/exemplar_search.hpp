#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "scop/consistency.hpp"
#include "scop/prompting.hpp"

namespace scop {

struct SearchConfig {
    int n_shot = 8;
    double margin = 0.3;
    int k_per_problem = 4;          // paraphrases generated per sampled problem
    int n_paths = 40;               // reasoning paths per solve-rate estimate
    int max_steps = 0;              // 0 means one pass over the training set
    std::uint64_t seed = 0;
    std::string dataset_name;
    std::string paraphraser_model;
    double paraphrase_temperature = 0.7;
    int paraphrase_max_tokens = 1024;
    SolverSettings solver;
};

struct CandidateEval {
    std::string paraphrase_text;
    double solve_rate = 0.0;
    bool accepted = false;
};

struct SearchStep {
    std::string problem_id;
    double sr_original = 0.0;
    std::vector<CandidateEval> candidates;  // evaluation stops after an accept
    bool found = false;
};

struct SearchTrace {
    int steps_consumed = 0;
    std::vector<int> problems_sampled_per_exemplar;  // cost of each find
    std::vector<ParaphraseExemplar> found;
    std::vector<SearchStep> steps;
    bool exhausted = false;
    std::string warning;
};

/// Margin-gated exemplar search: sample training problems without
/// replacement; per problem, measure the original solve rate, generate
/// k_per_problem paraphrases, and keep the first whose solve rate clears
/// SR(original) + margin; stop after n_shot finds or max_steps problems.
/// Exhaustion yields a partial trace with a warning, not an error.
SearchTrace search_exemplars(Gateway& solver_gateway, Gateway& paraphraser_gateway,
                             const std::vector<Problem>& train, const SearchConfig& config);

struct ApeConfig {
    int c_candidates = 15;
    int batch_b = 30;
    int epochs_e = 1;
    int n_paths = 40;
    std::uint64_t seed = 0;
    std::string paraphraser_model;
    double paraphrase_temperature = 0.7;
    int paraphrase_max_tokens = 1024;
    double induction_temperature = 0.7;
    SolverSettings solver;
};

struct ApeScore {
    std::string instruction;
    double mean_change = 0.0;
};

struct ApeResult {
    std::string best_instruction;
    double best_mean_change = 0.0;
    std::vector<ApeScore> scores;   // every candidate evaluated, in order
};

/// Instruction search: induce c_candidates instructions from the
/// input/output pairs, score each by the mean solve-rate change over a
/// batch of batch_b development problems paraphrased with it, take the
/// argmax (ties to the earliest candidate), and repeat epochs_e times
/// keeping the overall best.
ApeResult ape_search(Gateway& solver_gateway, Gateway& paraphraser_gateway,
                     const std::vector<Problem>& dev,
                     const std::vector<std::pair<std::string, std::string>>& pairs,
                     const ApeConfig& config);

} // namespace scop
