#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(SCOP_TEST_DATA_DIR); }
inline fs::path golden_dir() { return fs::path(SCOP_GOLDEN_DIR); }
inline std::string cli_path() { return SCOP_CLI_PATH; }

inline std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

/// Unique scratch directory, removed on scope exit.
struct TempDir {
    fs::path path;

    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        char buf[32];
        std::snprintf(buf, sizeof(buf), "scop-test-%016llx",
                      static_cast<unsigned long long>(rng()));
        path = fs::temp_directory_path() / buf;
        fs::create_directories(path);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

inline void set_env(const std::string& key, const std::string& value) {
    ::setenv(key.c_str(), value.c_str(), 1);
}

inline void unset_env(const std::string& key) { ::unsetenv(key.c_str()); }

/// Point the config fixtures' ${SCOP_TEST_DATA}/${SCOP_TEST_TMP} at real dirs.
inline void bind_fixture_env(const TempDir& tmp) {
    set_env("SCOP_TEST_DATA", data_dir().string());
    set_env("SCOP_TEST_TMP", tmp.path.string());
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout only
};

/// Run the CLI binary with the given argument string; stderr is captured
/// separately so tests can assert on clean stdout.
inline CliResult run_cli(const std::string& args, const TempDir& tmp) {
    fs::path out_file = tmp.path / "cli-stdout.txt";
    fs::path err_file = tmp.path / "cli-stderr.txt";
    std::string command = std::string(SCOP_CLI_PATH) + " " + args + " > " + out_file.string() +
                          " 2> " + err_file.string();
    int raw = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.output = slurp(out_file);
    return result;
}

} // namespace testutil
