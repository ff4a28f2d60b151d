#include <doctest.h>

#include "scop/errors.hpp"
#include "scop/prompting.hpp"
#include "test_helpers.hpp"

using namespace scop;

namespace {

SurfaceForm target_form() {
    SurfaceForm form;
    form.form_id = "g1#original";
    form.problem_id = "g1";
    form.text = "A car travels 60 miles per hour. How far does it go in 150 minutes?";
    return form;
}

SurfaceForm choice_form() {
    SurfaceForm form;
    form.form_id = "c1#original";
    form.problem_id = "c1";
    form.text = "CHOICE-Q1 To pass a test of 35 problems you must score at least 80 percent. "
                "What is the greatest number you can miss?";
    form.options_block = "Options:[A)7,B)28,C)35,D)8]";
    return form;
}

std::string golden(const char* name) {
    return testutil::slurp(testutil::golden_dir() / name);
}

} // namespace

TEST_CASE("naive paraphrase prompt matches the golden template") {
    CHECK(build_naive_paraphrase_prompt(target_form()) == golden("naive_paraphrase.txt"));
}

TEST_CASE("icl paraphrase prompt matches the golden template") {
    auto exemplars =
        load_paraphrase_exemplars(testutil::data_dir() / "paraphrase_exemplars.jsonl");
    REQUIRE(exemplars.size() == 2);
    CHECK(build_icl_paraphrase_prompt(target_form(), exemplars) == golden("icl_paraphrase.txt"));
}

TEST_CASE("icl paraphrase prompt validates exemplar count") {
    auto exemplars =
        load_paraphrase_exemplars(testutil::data_dir() / "paraphrase_exemplars.jsonl");
    CHECK_THROWS_AS(build_icl_paraphrase_prompt(target_form(), {}), ValidationError);
    std::vector<ParaphraseExemplar> nine(9, exemplars[0]);
    CHECK_THROWS_AS(build_icl_paraphrase_prompt(target_form(), nine), ValidationError);
}

TEST_CASE("instruction-driven paraphrase prompt") {
    auto form = target_form();
    CHECK(build_instruction_paraphrase_prompt("Rewrite the problem in other words.", form) ==
          "Rewrite the problem in other words.\n\n" + form.text);
    CHECK_THROWS_AS(build_instruction_paraphrase_prompt("  ", form), ValidationError);
}

TEST_CASE("zero-shot solver prompt matches the golden template") {
    CHECK(build_solver_prompt(choice_form(), SolverMode::zero_shot_cot) ==
          golden("zero_shot_solver.txt"));
    // Free-form problems have no options block.
    auto form = target_form();
    CHECK(build_solver_prompt(form, SolverMode::zero_shot_cot) ==
          form.text + "\nLet's think step by step.");
}

TEST_CASE("few-shot solver prompt matches the golden template") {
    auto exemplars = load_cot_exemplars(testutil::data_dir() / "cot_exemplars.jsonl");
    REQUIRE(exemplars.size() == 4);
    CHECK(build_solver_prompt(choice_form(), SolverMode::few_shot_cot, exemplars, 4) ==
          golden("few_shot_solver.txt"));
}

TEST_CASE("few-shot solver prompt validates the shot count") {
    auto exemplars = load_cot_exemplars(testutil::data_dir() / "cot_exemplars.jsonl");
    CHECK_THROWS_AS(build_solver_prompt(choice_form(), SolverMode::few_shot_cot, exemplars, 3),
                    ValidationError);
    CHECK_THROWS_AS(build_solver_prompt(choice_form(), SolverMode::few_shot_cot, {}, 4),
                    ValidationError);
}

TEST_CASE("instruction induction prompt matches the golden template") {
    std::vector<std::pair<std::string, std::string>> pairs = {
        {"PAIR-IN a bag of 4 pears and 1 more", "PAIR-OUT one more pear than four"},
        {"PAIR-IN two dozen eggs", "PAIR-OUT twenty four eggs"},
    };
    CHECK(build_ape_induction_prompt(pairs) == golden("ape_induction.txt"));
    CHECK_THROWS_AS(build_ape_induction_prompt({}), ValidationError);
}

TEST_CASE("paraphraser responses are cleaned") {
    CHECK(clean_paraphrase_response("  A tidy paraphrase.\n") == "A tidy paraphrase.");
    CHECK(clean_paraphrase_response("Output: A tidy paraphrase.") == "A tidy paraphrase.");
    CHECK(clean_paraphrase_response("Output:   spaced   ") == "spaced");
    CHECK(clean_paraphrase_response("   ") == "");
}

TEST_CASE("paraphrase exemplars round-trip through jsonl") {
    auto exemplars =
        load_paraphrase_exemplars(testutil::data_dir() / "paraphrase_exemplars.jsonl");
    testutil::TempDir tmp;
    auto path = tmp.path / "exemplars.jsonl";
    save_paraphrase_exemplars(path, exemplars);
    auto reloaded = load_paraphrase_exemplars(path);
    REQUIRE(reloaded.size() == exemplars.size());
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        CHECK(reloaded[i].input_problem == exemplars[i].input_problem);
        CHECK(reloaded[i].output_paraphrase == exemplars[i].output_paraphrase);
        CHECK(reloaded[i].provenance.problem_id == exemplars[i].provenance.problem_id);
        CHECK(reloaded[i].provenance.sr_before ==
              doctest::Approx(exemplars[i].provenance.sr_before));
    }
}

TEST_CASE("exemplars violating their own margin are rejected on load") {
    testutil::TempDir tmp;
    auto path = tmp.path / "bad.jsonl";
    testutil::spit(path,
                   "{\"input_problem\":\"p\",\"output_paraphrase\":\"q\",\"provenance\":"
                   "{\"dataset\":\"d\",\"problem_id\":\"x\",\"sr_before\":0.5,\"sr_after\":0.6,"
                   "\"margin\":0.3}}\n");
    CHECK_THROWS_AS(load_paraphrase_exemplars(path), ValidationError);
}

TEST_CASE("cot exemplars round-trip and validate extractability") {
    auto exemplars = load_cot_exemplars(testutil::data_dir() / "cot_exemplars.jsonl");
    testutil::TempDir tmp;
    auto path = tmp.path / "cot.jsonl";
    save_cot_exemplars(path, exemplars);
    auto reloaded = load_cot_exemplars(path);
    REQUIRE(reloaded.size() == 4);
    CHECK(reloaded[0].final_answer_line ==
          "Therefore, the greatest number you can miss and still pass is (A) 7.");

    // A final answer line with no extractable answer is rejected.
    testutil::spit(path,
                   "{\"question\":\"q\",\"options\":\"Answer Choices: A) 1 B) 2\","
                   "\"rationale\":\"r\",\"final_answer_line\":\"Therefore nothing.\"}\n");
    CHECK_THROWS_AS(load_cot_exemplars(path), ValidationError);
}

TEST_CASE("solver mode names round-trip") {
    CHECK(to_string(SolverMode::zero_shot_cot) == "zero_shot_cot");
    CHECK(solver_mode_from_string("few_shot_cot") == SolverMode::few_shot_cot);
    CHECK_THROWS_AS(solver_mode_from_string("nope"), ValidationError);
}

TEST_CASE("form origin names round-trip") {
    CHECK(to_string(FormOrigin::icl_paraphrase) == "icl_paraphrase");
    CHECK(form_origin_from_string("naive_paraphrase") == FormOrigin::naive_paraphrase);
    CHECK_THROWS_AS(form_origin_from_string("nope"), ValidationError);
}
