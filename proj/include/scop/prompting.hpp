#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scop/forms.hpp"

namespace scop {

/// An input/output paraphrase pair found by the exemplar search, with the
/// measurements that justified keeping it.
struct ExemplarProvenance {
    std::string dataset;
    std::string problem_id;
    double sr_before = 0.0;
    double sr_after = 0.0;
    double margin = 0.0;
};

struct ParaphraseExemplar {
    std::string input_problem;
    std::string output_paraphrase;
    ExemplarProvenance provenance;
};

/// A worked question/rationale example for few-shot solving. options is the
/// verbatim choices line of the exemplar (empty for free-form questions).
struct CoTExemplar {
    std::string question;
    std::string options;
    std::string rationale;
    std::string final_answer_line;
};

enum class SolverMode { zero_shot_cot, few_shot_cot };

std::string to_string(SolverMode mode);
SolverMode solver_mode_from_string(std::string_view s);

std::string build_naive_paraphrase_prompt(const SurfaceForm& form);

/// Exemplar blocks in stored order, then the bare instruction line for the
/// target (no Output line).
std::string build_icl_paraphrase_prompt(const SurfaceForm& form,
                                        const std::vector<ParaphraseExemplar>& exemplars);

/// Paraphrase prompt driven by a searched instruction instead of the stock
/// one.
std::string build_instruction_paraphrase_prompt(std::string_view instruction,
                                                const SurfaceForm& form);

/// expected_shots guards the few-shot exemplar count (default 4); pass the
/// configured value to override.
std::string build_solver_prompt(const SurfaceForm& form, SolverMode mode,
                                const std::vector<CoTExemplar>& cot_exemplars = {},
                                std::size_t expected_shots = 4);

std::string build_ape_induction_prompt(
    const std::vector<std::pair<std::string, std::string>>& pairs);

/// Trim a paraphraser completion and drop a leading "Output:" echo.
std::string clean_paraphrase_response(std::string_view raw);

std::vector<ParaphraseExemplar> load_paraphrase_exemplars(const std::filesystem::path& path);
void save_paraphrase_exemplars(const std::filesystem::path& path,
                               const std::vector<ParaphraseExemplar>& exemplars);

std::vector<CoTExemplar> load_cot_exemplars(const std::filesystem::path& path);
void save_cot_exemplars(const std::filesystem::path& path,
                        const std::vector<CoTExemplar>& exemplars);

} // namespace scop
