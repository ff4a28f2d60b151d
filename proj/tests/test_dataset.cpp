#include <doctest.h>

#include <set>

#include "scop/dataset.hpp"
#include "scop/errors.hpp"
#include "test_helpers.hpp"

using namespace scop;

TEST_CASE("loads a numeric dataset with validation") {
    auto problems = load_dataset(testutil::data_dir() / "tiny.jsonl");
    REQUIRE(problems.size() == 5);
    CHECK(problems[0].id == "t1");
    CHECK(problems[0].gold_answer == "8");
    CHECK(problems[0].format() == AnswerFormat::numeric);
    CHECK(problems[0].gold() == CanonicalAnswer::numeric("8"));
    CHECK(problems[4].subject == "arithmetic");
    CHECK(problems[2].gold_answer == "1.5");
}

TEST_CASE("loads a multiple-choice dataset") {
    auto problems = load_dataset(testutil::data_dir() / "choice.jsonl");
    REQUIRE(problems.size() == 3);
    CHECK(problems[0].format() == AnswerFormat::choice);
    CHECK(problems[0].gold() == CanonicalAnswer::choice('A'));
    CHECK(problems[0].options.size() == 4);
    CHECK(render_options(problems[0]) == "Options:[A)7,B)28,C)35,D)8]");
    CHECK(render_options(problems[1]) == "Options:[A)1,B)2,C)3]");
}

TEST_CASE("limit draws a seed-stable sample preserving file order") {
    auto path = testutil::data_dir() / "sweep.jsonl";
    auto a = load_dataset(path, 10, 99);
    auto b = load_dataset(path, 10, 99);
    auto c = load_dataset(path, 10, 100);
    REQUIRE(a.size() == 10);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].id == b[i].id;
    CHECK(same);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].id != c[i].id;
    CHECK(differs);
    // File order within the sample is preserved (ids are sorted in the file).
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].id < a[i].id);
    // No duplicates.
    std::set<std::string> ids;
    for (const auto& p : a) ids.insert(p.id);
    CHECK(ids.size() == 10);
}

TEST_CASE("limit equal to size returns everything") {
    auto all = load_dataset(testutil::data_dir() / "tiny.jsonl", 5, 1);
    CHECK(all.size() == 5);
}

TEST_CASE("limit larger than the dataset is an error") {
    CHECK_THROWS_AS(load_dataset(testutil::data_dir() / "tiny.jsonl", 50, 1), ValidationError);
}

TEST_CASE("malformed datasets are rejected with line numbers") {
    testutil::TempDir tmp;
    auto path = tmp.path / "bad.jsonl";

    SUBCASE("duplicate id") {
        testutil::spit(path,
                       "{\"id\":\"x\",\"question\":\"q1 with 1\",\"answer\":\"1\",\"source\":\"s\"}\n"
                       "{\"id\":\"x\",\"question\":\"q2 with 2\",\"answer\":\"2\",\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("missing question") {
        testutil::spit(path, "{\"id\":\"x\",\"answer\":\"1\",\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("empty answer") {
        testutil::spit(path, "{\"id\":\"x\",\"question\":\"q\",\"answer\":\"\",\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("too few options") {
        testutil::spit(
            path,
            "{\"id\":\"x\",\"question\":\"q\",\"options\":[\"1\"],\"answer\":\"A\",\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("too many options") {
        testutil::spit(path,
                       "{\"id\":\"x\",\"question\":\"q\",\"options\":[\"1\",\"2\",\"3\",\"4\",\"5\","
                       "\"6\"],\"answer\":\"A\",\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("choice letter outside the option range") {
        testutil::spit(path,
                       "{\"id\":\"x\",\"question\":\"q\",\"options\":[\"1\",\"2\"],\"answer\":\"C\","
                       "\"source\":\"s\"}\n");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("empty file") {
        testutil::spit(path, "");
        CHECK_THROWS_AS(load_dataset(path), ValidationError);
    }
    SUBCASE("lowercase choice letters are accepted and upcased") {
        testutil::spit(path,
                       "{\"id\":\"x\",\"question\":\"q\",\"options\":[\"1\",\"2\"],\"answer\":\"b\","
                       "\"source\":\"s\"}\n");
        auto problems = load_dataset(path);
        CHECK(problems[0].gold_answer == "B");
    }
    SUBCASE("free-form gold answers are canonicalized") {
        testutil::spit(path,
                       "{\"id\":\"x\",\"question\":\"q\",\"answer\":\"3/2\",\"source\":\"s\"}\n");
        auto problems = load_dataset(path);
        CHECK(problems[0].gold_answer == "1.5");
    }
}
