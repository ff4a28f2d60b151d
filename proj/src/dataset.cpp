#include "scop/dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

using nlohmann::json;

std::string require_string(const json& row, const char* key, const std::string& where) {
    if (!row.contains(key) || !row[key].is_string())
        throw ValidationError(where + ": missing or non-string field \"" + key + "\"");
    return row[key].get<std::string>();
}

Problem parse_problem(const json& row, const std::string& where) {
    Problem p;
    p.id = require_string(row, "id", where);
    p.question = require_string(row, "question", where);
    std::string answer = require_string(row, "answer", where);
    p.source = require_string(row, "source", where);
    if (row.contains("subject")) {
        if (!row["subject"].is_string())
            throw ValidationError(where + ": non-string field \"subject\"");
        p.subject = row["subject"].get<std::string>();
    }
    if (p.id.empty()) throw ValidationError(where + ": empty id");
    if (p.question.empty()) throw ValidationError(where + ": empty question");
    if (p.source.empty()) throw ValidationError(where + ": empty source");

    if (row.contains("options")) {
        if (!row["options"].is_array())
            throw ValidationError(where + ": field \"options\" must be an array");
        for (const auto& opt : row["options"]) {
            if (!opt.is_string())
                throw ValidationError(where + ": option entries must be strings");
            p.options.push_back(opt.get<std::string>());
        }
        if (p.options.size() < 2 || p.options.size() > 5)
            throw ValidationError(where + ": options length must be 2-5, got " +
                                  std::to_string(p.options.size()));
        std::string letter = trim(answer);
        if (letter.size() == 1 && letter[0] >= 'a' && letter[0] <= 'e')
            letter[0] = static_cast<char>(letter[0] - 'a' + 'A');
        char last = static_cast<char>('A' + p.options.size() - 1);
        if (letter.size() != 1 || letter[0] < 'A' || letter[0] > last)
            throw ValidationError(where + ": answer for a multiple-choice problem must be a letter A-" +
                                  std::string(1, last));
        p.gold_answer = letter;
    } else {
        p.gold_answer = canonicalize_numeric(answer);
        if (p.gold_answer.empty()) throw ValidationError(where + ": empty answer");
    }
    return p;
}

} // namespace

std::vector<Problem> load_dataset(const std::filesystem::path& path,
                                  std::optional<std::size_t> limit, std::uint64_t seed) {
    std::vector<Problem> problems;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        if (!row.is_object()) throw ValidationError(where + ": expected a JSON object");
        Problem p = parse_problem(row, where);
        if (!seen.insert(p.id).second)
            throw ValidationError(where + ": duplicate id \"" + p.id + "\"");
        problems.push_back(std::move(p));
    });
    if (problems.empty()) throw ValidationError(path.string() + ": no problems");

    if (limit && *limit < problems.size()) {
        std::vector<std::size_t> order(problems.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        DeterministicRng rng(seed);
        rng.shuffle(order);
        order.resize(*limit);
        std::sort(order.begin(), order.end());
        std::vector<Problem> sample;
        sample.reserve(*limit);
        for (std::size_t i : order) sample.push_back(std::move(problems[i]));
        return sample;
    }
    if (limit && *limit > problems.size())
        throw ValidationError(path.string() + ": limit " + std::to_string(*limit) +
                              " exceeds dataset size " + std::to_string(problems.size()));
    return problems;
}

std::string render_options(const Problem& problem) {
    if (problem.options.empty())
        throw ValidationError("problem " + problem.id + " has no options to render");
    std::string out = "Options:[";
    for (std::size_t i = 0; i < problem.options.size(); ++i) {
        if (i > 0) out += ",";
        out += static_cast<char>('A' + i);
        out += ")";
        out += problem.options[i];
    }
    out += "]";
    return out;
}

} // namespace scop
