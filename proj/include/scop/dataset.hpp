#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scop/answer.hpp"

namespace scop {

/// One benchmark problem. Multiple-choice problems carry 2-5 option texts
/// and a gold letter; free-form problems carry a canonical numeric or
/// expression gold value.
struct Problem {
    std::string id;
    std::string question;
    std::string gold_answer;            // canonical form
    std::vector<std::string> options;   // empty for free-form problems
    std::string subject;
    std::string source;

    AnswerFormat format() const {
        return options.empty() ? AnswerFormat::numeric : AnswerFormat::choice;
    }
    CanonicalAnswer gold() const {
        if (options.empty()) return CanonicalAnswer::numeric(gold_answer);
        return CanonicalAnswer::choice(gold_answer[0]);
    }
};

/// Load and validate a JSONL dataset ({"id","question","answer","options"?,
/// "subject"?,"source"}). With a limit, returns a uniform random sample of
/// that size drawn with the given seed, preserving file order.
std::vector<Problem> load_dataset(const std::filesystem::path& path,
                                  std::optional<std::size_t> limit = std::nullopt,
                                  std::uint64_t seed = 0);

/// "Options:[A)8,B)10,C)12,D)15,E)19]" block for a multiple-choice problem.
std::string render_options(const Problem& problem);

} // namespace scop
