#include <doctest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "scop/errors.hpp"
#include "scop/util.hpp"
#include "test_helpers.hpp"

using namespace scop;

TEST_CASE("sha256 matches known vectors") {
    // Published SHA-256 test vectors.
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256_file hashes file bytes") {
    testutil::TempDir tmp;
    auto path = tmp.path / "f.txt";
    testutil::spit(path, "abc");
    CHECK(sha256_file(path) == sha256_hex("abc"));
    CHECK_THROWS_AS(sha256_file(tmp.path / "missing.txt"), IoError);
}

TEST_CASE("trim and whitespace helpers") {
    CHECK(trim("  a b \t\n") == "a b");
    CHECK(trim("") == "");
    CHECK(trim(" \t ") == "");
    CHECK(normalize_whitespace("  a\t\tb \n c ") == "a b c");
    CHECK(strip_whitespace(" 3 * 4 \n= 12") == "3*4=12");
    CHECK(to_lower("AbC9") == "abc9");
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(0.0) == "0");
}

TEST_CASE("atomic_write_file replaces content atomically") {
    testutil::TempDir tmp;
    auto path = tmp.path / "out.txt";
    atomic_write_file(path, "first");
    CHECK(testutil::slurp(path) == "first");
    atomic_write_file(path, "second version");
    CHECK(testutil::slurp(path) == "second version");
    // No temp litter left behind.
    int n_files = 0;
    for (auto& entry : std::filesystem::directory_iterator(tmp.path)) {
        (void)entry;
        ++n_files;
    }
    CHECK(n_files == 1);
}

TEST_CASE("read_file errors on missing path") {
    CHECK_THROWS_AS(read_file("/nonexistent/really/not/here.txt"), IoError);
}

TEST_CASE("for_each_jsonl parses lines and reports bad ones") {
    testutil::TempDir tmp;
    auto path = tmp.path / "rows.jsonl";
    testutil::spit(path, "{\"a\":1}\n\n{\"a\":2}\n");
    std::vector<int> seen;
    for_each_jsonl(path, [&](std::size_t, const nlohmann::json& row) {
        seen.push_back(row.at("a").get<int>());
    });
    CHECK(seen == std::vector<int>{1, 2});

    testutil::spit(path, "{\"a\":1}\nnot json\n");
    try {
        for_each_jsonl(path, [](std::size_t, const nlohmann::json&) {});
        FAIL("expected ValidationError");
    } catch (const ValidationError& ex) {
        // The failing line number is part of the message.
        CHECK(std::string(ex.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("DeterministicRng reproduces sequences across instances") {
    DeterministicRng a(42), b(42), c(43);
    bool all_equal = true;
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next();
        if (va != b.next()) all_equal = false;
        if (va != c.next()) any_diff = true;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("mt19937_64 output is the standard-pinned value") {
    // The C++ standard fixes the 10000th draw of a default-seeded
    // mt19937_64; deterministic replay across platforms depends on it.
    std::mt19937_64 engine;
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = engine();
    CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("bounded draws stay in range and cover values") {
    DeterministicRng rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        auto v = rng.bounded(10);
        CHECK(v < 10);
        seen.insert(v);
    }
    CHECK(seen.size() == 10);
    CHECK_THROWS_AS(rng.bounded(0), ValidationError);
}

TEST_CASE("unit draws lie in [0,1)") {
    DeterministicRng rng(9);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("shuffle is a seed-stable permutation") {
    std::vector<int> v0{1, 2, 3, 4, 5, 6, 7, 8};
    auto v1 = v0;
    auto v2 = v0;
    DeterministicRng r1(5), r2(5);
    r1.shuffle(v1);
    r2.shuffle(v2);
    CHECK(v1 == v2);
    auto sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v0);
}

TEST_CASE("ensure_directory is idempotent and nested") {
    testutil::TempDir tmp;
    auto dir = tmp.path / "a" / "b" / "c";
    ensure_directory(dir);
    ensure_directory(dir);
    CHECK(std::filesystem::is_directory(dir));
}
