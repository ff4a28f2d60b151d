#include "scop/prompting.hpp"

#include <nlohmann/json.hpp>

#include "scop/answer.hpp"
#include "scop/errors.hpp"
#include "scop/util.hpp"

namespace scop {

namespace {

using nlohmann::json;

const char* const kParaphraseInstruction = "Paraphrase the following math problem: ";
const char* const kCotCue = "Let's think step by step.";
const char* const kApeMetaPrompt =
    "A student is completing a task that requires producing a text output from a text "
    "input. The student receives instruction about several rules that describe how to "
    "produce the outputs given the inputs. What is the instruction?";

std::string question_with_options(const SurfaceForm& form) {
    std::string out = form.text;
    if (!form.options_block.empty()) {
        out += "\n";
        out += form.options_block;
    }
    return out;
}

} // namespace

std::string to_string(SolverMode mode) {
    return mode == SolverMode::zero_shot_cot ? "zero_shot_cot" : "few_shot_cot";
}

SolverMode solver_mode_from_string(std::string_view s) {
    if (s == "zero_shot_cot") return SolverMode::zero_shot_cot;
    if (s == "few_shot_cot") return SolverMode::few_shot_cot;
    throw ValidationError("unknown solver mode: " + std::string(s));
}

std::string to_string(FormOrigin origin) {
    switch (origin) {
        case FormOrigin::original: return "original";
        case FormOrigin::naive_paraphrase: return "naive_paraphrase";
        case FormOrigin::icl_paraphrase: return "icl_paraphrase";
        case FormOrigin::transferred_paraphrase: return "transferred_paraphrase";
    }
    return "original";
}

FormOrigin form_origin_from_string(std::string_view s) {
    if (s == "original") return FormOrigin::original;
    if (s == "naive_paraphrase") return FormOrigin::naive_paraphrase;
    if (s == "icl_paraphrase") return FormOrigin::icl_paraphrase;
    if (s == "transferred_paraphrase") return FormOrigin::transferred_paraphrase;
    throw ValidationError("unknown form origin: " + std::string(s));
}

std::string build_naive_paraphrase_prompt(const SurfaceForm& form) {
    return kParaphraseInstruction + form.text;
}

std::string build_icl_paraphrase_prompt(const SurfaceForm& form,
                                        const std::vector<ParaphraseExemplar>& exemplars) {
    if (exemplars.empty()) throw ValidationError("ICL paraphrase prompt requires exemplars");
    if (exemplars.size() > 8)
        throw ValidationError("ICL paraphrase prompt supports at most 8 exemplars, got " +
                              std::to_string(exemplars.size()));
    std::string out;
    for (const auto& e : exemplars) {
        out += kParaphraseInstruction;
        out += e.input_problem;
        out += "\nOutput: ";
        out += e.output_paraphrase;
        out += "\n\n";
    }
    out += kParaphraseInstruction;
    out += form.text;
    return out;
}

std::string build_instruction_paraphrase_prompt(std::string_view instruction,
                                                const SurfaceForm& form) {
    if (trim(instruction).empty()) throw ValidationError("empty paraphrase instruction");
    std::string out(instruction);
    out += "\n\n";
    out += form.text;
    return out;
}

std::string build_solver_prompt(const SurfaceForm& form, SolverMode mode,
                                const std::vector<CoTExemplar>& cot_exemplars,
                                std::size_t expected_shots) {
    if (mode == SolverMode::zero_shot_cot) {
        std::string out = question_with_options(form);
        out += "\n";
        out += kCotCue;
        return out;
    }
    if (cot_exemplars.empty()) throw ValidationError("few-shot solving requires exemplars");
    if (cot_exemplars.size() != expected_shots)
        throw ValidationError("few-shot solving expects " + std::to_string(expected_shots) +
                              " exemplars, got " + std::to_string(cot_exemplars.size()));
    std::string out;
    for (const auto& e : cot_exemplars) {
        out += "Question: ";
        out += e.question;
        out += "\n";
        if (!e.options.empty()) {
            out += e.options;
            out += "\n";
        }
        out += "Rationale: ";
        out += e.rationale;
        out += "\n\n";
        out += e.final_answer_line;
        out += "\n\n";
    }
    out += "Question: ";
    out += question_with_options(form);
    return out;
}

std::string build_ape_induction_prompt(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw ValidationError("instruction induction requires input/output pairs");
    std::string out = kApeMetaPrompt;
    for (const auto& [input, output] : pairs) {
        out += "\n\nInput: ";
        out += input;
        out += "\nOutput: ";
        out += output;
    }
    return out;
}

std::string clean_paraphrase_response(std::string_view raw) {
    std::string text = trim(raw);
    if (text.rfind("Output:", 0) == 0) text = trim(text.substr(7));
    return text;
}

std::vector<ParaphraseExemplar> load_paraphrase_exemplars(const std::filesystem::path& path) {
    std::vector<ParaphraseExemplar> out;
    for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        ParaphraseExemplar e;
        try {
            e.input_problem = row.at("input_problem").get<std::string>();
            e.output_paraphrase = row.at("output_paraphrase").get<std::string>();
            const auto& prov = row.at("provenance");
            e.provenance.dataset = prov.at("dataset").get<std::string>();
            e.provenance.problem_id = prov.at("problem_id").get<std::string>();
            e.provenance.sr_before = prov.at("sr_before").get<double>();
            e.provenance.sr_after = prov.at("sr_after").get<double>();
            e.provenance.margin = prov.at("margin").get<double>();
        } catch (const json::exception& ex) {
            throw ValidationError(where + ": bad exemplar record: " + ex.what());
        }
        if (e.input_problem.empty() || e.output_paraphrase.empty())
            throw ValidationError(where + ": empty exemplar text");
        if (e.provenance.sr_after + 1e-9 < e.provenance.sr_before + e.provenance.margin)
            throw ValidationError(where + ": exemplar violates its accepting margin");
        out.push_back(std::move(e));
    });
    return out;
}

void save_paraphrase_exemplars(const std::filesystem::path& path,
                               const std::vector<ParaphraseExemplar>& exemplars) {
    std::string body;
    for (const auto& e : exemplars) {
        json row = {
            {"input_problem", e.input_problem},
            {"output_paraphrase", e.output_paraphrase},
            {"provenance",
             {{"dataset", e.provenance.dataset},
              {"problem_id", e.provenance.problem_id},
              {"sr_before", e.provenance.sr_before},
              {"sr_after", e.provenance.sr_after},
              {"margin", e.provenance.margin}}},
        };
        body += row.dump();
        body += "\n";
    }
    atomic_write_file(path, body);
}

std::vector<CoTExemplar> load_cot_exemplars(const std::filesystem::path& path) {
    std::vector<CoTExemplar> out;
    for_each_jsonl(path, [&](std::size_t line_no, const json& row) {
        std::string where = path.string() + ":" + std::to_string(line_no);
        CoTExemplar e;
        try {
            e.question = row.at("question").get<std::string>();
            e.rationale = row.at("rationale").get<std::string>();
            e.final_answer_line = row.at("final_answer_line").get<std::string>();
            if (row.contains("options")) e.options = row["options"].get<std::string>();
        } catch (const json::exception& ex) {
            throw ValidationError(where + ": bad exemplar record: " + ex.what());
        }
        AnswerFormat format = e.options.empty() ? AnswerFormat::numeric : AnswerFormat::choice;
        if (extract(e.final_answer_line, format).kind == AnswerKind::none)
            throw ValidationError(where + ": no extractable answer in final_answer_line");
        out.push_back(std::move(e));
    });
    return out;
}

void save_cot_exemplars(const std::filesystem::path& path,
                        const std::vector<CoTExemplar>& exemplars) {
    std::string body;
    for (const auto& e : exemplars) {
        json row = {{"question", e.question},
                    {"rationale", e.rationale},
                    {"final_answer_line", e.final_answer_line}};
        if (!e.options.empty()) row["options"] = e.options;
        body += row.dump();
        body += "\n";
    }
    atomic_write_file(path, body);
}

} // namespace scop
