// Tests for the command-line front end: exit-code taxonomy, JSON output on
// stdout, flag overrides, and offline/provider failure behaviour. Each test
// drives the installed binary as a subprocess.
#include <doctest.h>

#include <scop/scop.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "test_helpers.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cfg(const char* name) {
    return "-c " + (testutil::data_dir() / name).string();
}

} // namespace

TEST_CASE("help and version exit cleanly") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    testutil::CliResult help = testutil::run_cli("--help", tmp);
    CHECK(help.exit_code == 0);
    CHECK(help.output.find("solve") != std::string::npos);
    CHECK(help.output.find("paraphrase") != std::string::npos);
    CHECK(help.output.find("difficulty-map") != std::string::npos);

    testutil::CliResult version = testutil::run_cli("--version", tmp);
    CHECK(version.exit_code == 0);
    CHECK(version.output.find(scop_version()) != std::string::npos);
}

TEST_CASE("usage problems exit with the usage code") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    CHECK(testutil::run_cli("", tmp).exit_code == 2);                 // subcommand required
    CHECK(testutil::run_cli("frobnicate", tmp).exit_code == 2);        // unknown subcommand
    CHECK(testutil::run_cli("solve", tmp).exit_code == 2);             // missing --config
    CHECK(testutil::run_cli("solve --no-such-flag", tmp).exit_code == 2);
    CHECK(testutil::run_cli("solve " + cfg("config_tiny_sc.toml") + " --provider bogus",
                            tmp).exit_code == 2);                      // constrained choice
    CHECK(testutil::run_cli("solve -c /does/not/exist.toml", tmp).exit_code == 2);
    CHECK(testutil::run_cli("agreement --run only-one", tmp).exit_code == 2);
    // Config-level validation rides the same code.
    CHECK(testutil::run_cli("solve " + cfg("config_tiny_sc.toml") + " --scheme sc --k 8",
                            tmp).exit_code == 2);
}

TEST_CASE("solve prints a run summary and reports read it back") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    testutil::CliResult sc = testutil::run_cli("solve " + cfg("config_tiny_sc.toml"), tmp);
    REQUIRE(sc.exit_code == 0);
    json sc_summary = json::parse(sc.output);
    std::string sc_dir = sc_summary.at("run_dir").get<std::string>();
    CHECK(sc_summary.at("n_problems").get<int>() == 5);
    CHECK(fs::exists(fs::path(sc_dir) / "metrics.json"));

    testutil::CliResult scop = testutil::run_cli(
        "solve " + cfg("config_tiny_scop.toml") + " --baseline " + sc_dir, tmp);
    REQUIRE(scop.exit_code == 0);
    std::string scop_dir = json::parse(scop.output).at("run_dir").get<std::string>();

    testutil::CliResult metrics =
        testutil::run_cli("metrics --run " + scop_dir, tmp);
    CHECK(metrics.exit_code == 0);
    CHECK_FALSE(json::parse(metrics.output).at("vov").is_null());

    testutil::CliResult vov =
        testutil::run_cli("vov --run " + scop_dir + " --baseline " + sc_dir, tmp);
    CHECK(vov.exit_code == 0);
    CHECK(json::parse(vov.output).at("n_problems").get<int>() == 5);

    testutil::CliResult dmap = testutil::run_cli(
        "difficulty-map --baseline " + sc_dir + " --run " + scop_dir, tmp);
    CHECK(dmap.exit_code == 0);
    CHECK(json::parse(dmap.output).at("classes").is_object());

    testutil::CliResult agreement =
        testutil::run_cli("agreement --run " + sc_dir + " --run " + scop_dir, tmp);
    CHECK(agreement.exit_code == 0);
    CHECK(json::parse(agreement.output).at("pairs").size() == 1);

    // Domain errors that are not usage problems exit with the generic code.
    CHECK(testutil::run_cli("vov --run " + sc_dir, tmp).exit_code == 1);
    CHECK(testutil::run_cli("metrics --run " + (tmp.path / "nope").string(), tmp)
              .exit_code == 1);
}

TEST_CASE("paraphrase subcommand writes forms only") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);
    testutil::CliResult result =
        testutil::run_cli("paraphrase " + cfg("config_tiny_scop.toml"), tmp);
    REQUIRE(result.exit_code == 0);
    json summary = json::parse(result.output);
    CHECK(summary.at("n_forms").get<int>() == 20);
    CHECK_FALSE(fs::exists(fs::path(summary.at("run_dir").get<std::string>()) /
                           "samples.jsonl"));
}

TEST_CASE("offline flag fails cold and replays warm") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    // Nothing cached yet: the offline run must refuse to call the provider.
    testutil::CliResult cold =
        testutil::run_cli("solve " + cfg("config_tiny_sc.toml") + " --offline", tmp);
    CHECK(cold.exit_code == 3);

    REQUIRE(testutil::run_cli("solve " + cfg("config_tiny_sc.toml"), tmp).exit_code == 0);

    testutil::CliResult warm =
        testutil::run_cli("solve " + cfg("config_tiny_sc.toml") + " --offline", tmp);
    REQUIRE(warm.exit_code == 0);
    json summary = json::parse(warm.output);
    CHECK(summary.at("provider_calls").get<int>() == 0);
    CHECK(summary.at("cache_hits").get<int>() == 200);
}

TEST_CASE("flag overrides change the derived run") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);
    testutil::CliResult result = testutil::run_cli(
        "solve " + cfg("config_tiny_sc.toml") + " --n 8 --run-id customid", tmp);
    REQUIRE(result.exit_code == 0);
    json summary = json::parse(result.output);
    CHECK(summary.at("run_id") == "customid");
    fs::path dir(summary.at("run_dir").get<std::string>());
    CHECK(dir.filename() == "customid");
    json metrics = json::parse(testutil::slurp(dir / "metrics.json"));
    CHECK(metrics.at("n_total").get<int>() == 8);
}

TEST_CASE("search and instruction subcommands run the mock fixtures") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    testutil::CliResult search =
        testutil::run_cli("search-exemplars " + cfg("config_algo1.toml"), tmp);
    REQUIRE(search.exit_code == 0);
    json trace = json::parse(search.output);
    CHECK(trace.at("n_found").get<int>() >= 1);
    CHECK(fs::exists(trace.at("exemplar_file").get<std::string>()));

    testutil::CliResult ape = testutil::run_cli("ape " + cfg("config_ape.toml"), tmp);
    REQUIRE(ape.exit_code == 0);
    json best = json::parse(ape.output);
    CHECK_FALSE(best.at("best_instruction").get<std::string>().empty());
}

TEST_CASE("probe reports health through the exit code") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);

    testutil::CliResult mock = testutil::run_cli("probe " + cfg("config_tiny_sc.toml"), tmp);
    CHECK(mock.exit_code == 0);
    CHECK(json::parse(mock.output).at("healthy") == true);

    // Unreachable endpoint: probe never throws, but the health verdict and
    // the exit code say the provider is down.
    testutil::set_env("SCOP_TEST_HTTP_URL", "http://127.0.0.1:9/v1");
    testutil::set_env("SCOP_TEST_KEY", "test-key");
    testutil::CliResult http = testutil::run_cli("probe " + cfg("config_http.toml"), tmp);
    CHECK(http.exit_code == 3);
    CHECK(json::parse(http.output).at("healthy") == false);
}

TEST_CASE("provider failures exit with the provider code") {
    testutil::TempDir tmp;
    testutil::bind_fixture_env(tmp);
    testutil::set_env("SCOP_TEST_HTTP_URL", "http://127.0.0.1:9/v1");
    testutil::set_env("SCOP_TEST_KEY", "test-key");
    testutil::CliResult result =
        testutil::run_cli("solve " + cfg("config_http.toml"), tmp);
    CHECK(result.exit_code == 3);
}
